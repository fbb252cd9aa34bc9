#include "storyloom/templates.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

namespace {

const std::map<std::string, std::string>& builtin() {
  static const std::map<std::string, std::string> t = {
      // plan
      {"premise",
       "Write a premise for a short story. The premise should be a single paragraph of two or "
       "three sentences.\n\nPremise:"},
      {"setting", "Premise: {premise}\n\nDescribe the setting of the story.\n\nThe story is set in"},
      {"character_entry", "{number}.\n\nFull Name: {name}\n\nCharacter Portrait: {description}\n\n"},
      {"character_name",
       "Premise: {premise}\n\nSetting: {setting}\n\nList the names and details of all major "
       "characters.\n\n{characters}{number}.\n\nFull Name:"},
      {"character_description",
       "Premise: {premise}\n\nSetting: {setting}\n\nList the names and details of all major "
       "characters.\n\n{characters}{number}.\n\nFull Name: {name}\n\nCharacter Portrait: {name} is"},
      {"outline",
       "Premise: {premise}\n\nSetting: {setting}\n\nCharacters:\n{characters}\n\nOutline the main "
       "plot points of the story.\n\n1."},
      {"outline_expand",
       "Premise: {premise}\n\nSetting: {setting}\n\nCharacters:\n{characters}\n\nOutline:\n{outline}"
       "\n\nList the minor events in the following main plot point:\n\n{point}\n\n1."},
      // draft
      {"relevant_context_header", "Relevant Context:"},
      {"narration_note", "The story is written in third person."},
      {"previous_outline", "Previous story summary: {summary}"},
      {"recent_summary", "Events immediately prior to the upcoming passage: {summary}"},
      {"current_outline", "In the upcoming passage, {point}"},
      {"final_outline_marker", "This is the end of the story."},
      {"autoregressive", "Full text below:\n{passage}"},
      {"setup_outline", "Chapter 1 Summary: {point}"},
      {"setup_tail", "Full text below:\nChapter 1"},
      {"summarize", "{passages}\n\nSummarize the events above in one paragraph.\n\nSummary:"},
      {"new_character", "{passage}\n\nCharacter Portrait: {name} is"},
      {"rolling", "{premise}\n\n{story}"},
      // edit
      {"facts",
       "{passage}\n\nQuestion: List very brief facts about {character}'s appearance, personality, "
       "and relationship to other characters.\n\n1. {character}"},
      {"key_extraction",
       "Extract attributes from the given context using the format Attribute: Value.\n\n----\n"
       "{examples}Context ({character}): {fact}\n{character}"},
      {"key_example", "Context ({character}): {context}\n{lines}\n----\n"},
      {"value_possessive", "{fact}\n\n{character} is {key}"},
      {"value_plain", "{fact}\n\n{character}'s {key} is"},
      {"reciprocal", "{fact}\n\n{other} is {character}'s"},
      {"qa_question", "What is {character}'s {key}?"},
      {"qa_relation_question", "What is {character}'s relationship to {other}?"},
      {"attribute_sentence_plain", "{character}'s {key} is {value}."},
      {"attribute_sentence_possessive", "{character} is {key} {value}."},
      {"edit_instruction", "Edit so that: {fact}"},
  };
  return t;
}

}  // namespace

TemplateSet::TemplateSet() : templates_(builtin()) {}

void TemplateSet::load_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw ConfigError("template directory not found: " + dir);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const std::string name = entry.path().stem().string();
    if (!templates_.contains(name)) throw ConfigError("unknown template file: " + entry.path().string());
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    if (body.ends_with('\n')) body.pop_back();
    templates_[name] = std::move(body);
  }
}

const std::string& TemplateSet::raw(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw ConfigError("unknown template: " + name);
  return it->second;
}

void TemplateSet::set(const std::string& name, std::string body) {
  if (!templates_.contains(name)) throw ConfigError("unknown template: " + name);
  templates_[name] = std::move(body);
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& vars) const {
  const std::string& body = raw(name);
  std::string out;
  out.reserve(body.size() + 64);
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      const std::size_t close = body.find('}', i + 1);
      if (close != std::string::npos) {
        auto it = vars.find(body.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += body[i++];
  }
  return out;
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : templates_) out.push_back(k);
  return out;
}

const TemplateSet& default_templates() {
  static const TemplateSet t;
  return t;
}

}  // namespace loom
