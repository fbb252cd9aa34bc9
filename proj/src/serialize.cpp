#include "storyloom/serialize.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "storyloom/errors.hpp"

namespace loom {

namespace {

// JSON has no infinities; a zero-probability score is stored as null.
json score_value(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double score_from(const json& j) {
  if (j.is_null()) return -std::numeric_limits<double>::infinity();
  return j.get<double>();
}

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

}  // namespace

void to_json(json& j, const Premise& v) { j = v.text; }
void from_json(const json& j, Premise& v) { v.text = j.get<std::string>(); }

void to_json(json& j, const CharacterSheet& v) {
  j = {{"name", v.name}, {"description", v.description}, {"created_at", v.created_at}};
}
void from_json(const json& j, CharacterSheet& v) {
  j.at("name").get_to(v.name);
  j.at("description").get_to(v.description);
  get_opt(j, "created_at", v.created_at);
}

void to_json(json& j, const OutlineNode& v) {
  j = {{"label", v.label}, {"text", v.text}};
  if (!v.children.empty()) j["children"] = v.children;
}
void from_json(const json& j, OutlineNode& v) {
  j.at("label").get_to(v.label);
  j.at("text").get_to(v.text);
  v.children.clear();
  get_opt(j, "children", v.children);
}

void to_json(json& j, const Plan& v) {
  j = {{"premise", v.premise}, {"setting", v.setting}, {"characters", v.characters}, {"outline", v.outline}};
}
void from_json(const json& j, Plan& v) {
  j.at("premise").get_to(v.premise);
  j.at("setting").get_to(v.setting);
  j.at("characters").get_to(v.characters);
  j.at("outline").get_to(v.outline);
}

void to_json(json& j, const Fact& v) {
  j = {{"character", v.character}, {"text", v.text}, {"passage_index", v.passage_index}};
}
void from_json(const json& j, Fact& v) {
  j.at("character").get_to(v.character);
  j.at("text").get_to(v.text);
  get_opt(j, "passage_index", v.passage_index);
}

void to_json(json& j, const AttributeEntry& v) {
  j = {{"key", v.key}, {"value", v.value}, {"source_fact", v.source_fact}, {"confidence", v.confidence}};
}
void from_json(const json& j, AttributeEntry& v) {
  j.at("key").get_to(v.key);
  j.at("value").get_to(v.value);
  j.at("source_fact").get_to(v.source_fact);
  get_opt(j, "confidence", v.confidence);
}

void to_json(json& j, const Passage& v) {
  j = {{"index", v.index}, {"section", v.section_path}, {"token_count", v.token_count}, {"text", v.text}};
}
void from_json(const json& j, Passage& v) {
  j.at("index").get_to(v.index);
  j.at("section").get_to(v.section_path);
  j.at("token_count").get_to(v.token_count);
  j.at("text").get_to(v.text);
}

void to_json(json& j, const StoryState& v) {
  json kb = json::object();
  for (const auto& [name, dict] : v.kb) {
    json entries = json::array();
    for (const auto& [key, entry] : dict.entries) entries.push_back(entry);
    kb[name] = std::move(entries);
  }
  j = {{"plan", v.plan}, {"passages", v.passages}, {"kb", std::move(kb)}, {"current_leaf", v.current_leaf}};
}
void from_json(const json& j, StoryState& v) {
  j.at("plan").get_to(v.plan);
  j.at("passages").get_to(v.passages);
  v.kb.clear();
  for (const auto& [name, entries] : j.at("kb").items()) {
    auto& dict = v.kb[name];
    for (const auto& e : entries) {
      auto entry = e.get<AttributeEntry>();
      dict.entries[entry.key] = std::move(entry);
    }
  }
  get_opt(j, "current_leaf", v.current_leaf);
}

void to_json(json& j, const GenParams& v) {
  j = {{"max_tokens", v.max_tokens},
       {"temperature", v.temperature},
       {"num_samples", v.num_samples},
       {"stop", v.stop_sequences},
       {"sample_offset", v.sample_offset}};
}
void from_json(const json& j, GenParams& v) {
  get_opt(j, "max_tokens", v.max_tokens);
  get_opt(j, "temperature", v.temperature);
  get_opt(j, "num_samples", v.num_samples);
  get_opt(j, "stop", v.stop_sequences);
  get_opt(j, "sample_offset", v.sample_offset);
}

void to_json(json& j, const RunConfig& v) {
  j = json{
      {"mode", to_string(v.mode)},
      {"outline_points", v.outline_points ? json(*v.outline_points) : json(nullptr)},
      {"outline_depth", v.outline_depth},
      {"passages_per_leaf", v.passages_per_leaf},
      {"adaptive", v.adaptive},
      {"min_passages_per_leaf", v.min_passages_per_leaf},
      {"max_passages_per_leaf", v.max_passages_per_leaf},
      {"alignment_threshold", v.alignment_threshold},
      {"continuation_tokens", v.continuation_tokens},
      {"max_context", v.max_context},
      {"rolling_truncate", v.rolling_truncate},
      {"rolling_total", v.rolling_total},
      {"empty_retries", v.empty_retries},
      {"seed", v.seed},
      {"ablations",
       {{"no_plan", v.ablations.no_plan}, {"no_rerank", v.ablations.no_rerank}, {"no_edit", v.ablations.no_edit}}},
      {"plan",
       {{"num_characters", v.plan.num_characters},
        {"setting_retries", v.plan.setting_retries},
        {"description_retries", v.plan.description_retries},
        {"outline_retries", v.plan.outline_retries},
        {"min_children", v.plan.min_children},
        {"premise_temperature", v.plan.premise_temperature},
        {"plan_temperature", v.plan.plan_temperature},
        {"setting_max_tokens", v.plan.setting_max_tokens},
        {"name_max_tokens", v.plan.name_max_tokens},
        {"description_max_tokens", v.plan.description_max_tokens},
        {"outline_max_tokens", v.plan.outline_max_tokens},
        {"name_banned_substrings", v.plan.names.banned_substrings},
        {"name_prefer_word_count", v.plan.names.prefer_word_count},
        {"name_samples_per_round", v.plan.names.samples_per_round},
        {"name_max_rounds", v.plan.names.max_rounds}}},
      {"draft",
       {{"context_budget", v.draft.context_budget},
        {"summary_passages", v.draft.summary_passages},
        {"num_candidates", v.draft.num_candidates},
        {"temperature", v.draft.temperature},
        {"summary_max_tokens", v.draft.summary_max_tokens},
        {"description_max_tokens", v.draft.description_max_tokens}}},
      {"filters",
       {{"min_repeat_ngram", v.filters.min_repeat_ngram},
        {"sentence_similarity_ratio", v.filters.sentence_similarity_ratio},
        {"banned_strings_hard", v.filters.banned_strings_hard},
        {"banned_strings_soft", v.filters.banned_strings_soft},
        {"soft_threshold", v.filters.soft_threshold},
        {"colon_head_window", v.filters.colon_head_window}}},
      {"rerank", {{"coherence_weight", v.weights.coherence}, {"relevance_weight", v.weights.relevance}}},
      {"edit",
       {{"entail_threshold", v.edit.entail_threshold},
        {"contradict_threshold", v.edit.contradict_threshold},
        {"qa_threshold", v.edit.qa_threshold},
        {"fact_samples", v.edit.fact_samples},
        {"value_samples", v.edit.value_samples},
        {"example_count", v.edit.example_count},
        {"correction_attempts", v.edit.correction_attempts},
        {"max_length_ratio", v.edit.max_length_ratio},
        {"fact_max_tokens", v.edit.fact_max_tokens},
        {"key_max_tokens", v.edit.key_max_tokens},
        {"value_max_tokens", v.edit.value_max_tokens},
        {"temperature", v.edit.temperature}}},
  };
}

void from_json(const json& j, RunConfig& v) {
  v = RunConfig{};
  if (auto it = j.find("mode"); it != j.end()) v.mode = parse_run_mode(it->get<std::string>());
  if (auto it = j.find("outline_points"); it != j.end()) {
    v.outline_points = it->is_null() ? std::nullopt : std::optional<int>(it->get<int>());
  }
  get_opt(j, "outline_depth", v.outline_depth);
  get_opt(j, "passages_per_leaf", v.passages_per_leaf);
  get_opt(j, "adaptive", v.adaptive);
  get_opt(j, "min_passages_per_leaf", v.min_passages_per_leaf);
  get_opt(j, "max_passages_per_leaf", v.max_passages_per_leaf);
  get_opt(j, "alignment_threshold", v.alignment_threshold);
  get_opt(j, "continuation_tokens", v.continuation_tokens);
  get_opt(j, "max_context", v.max_context);
  get_opt(j, "rolling_truncate", v.rolling_truncate);
  get_opt(j, "rolling_total", v.rolling_total);
  get_opt(j, "empty_retries", v.empty_retries);
  get_opt(j, "seed", v.seed);
  if (auto it = j.find("ablations"); it != j.end()) {
    get_opt(*it, "no_plan", v.ablations.no_plan);
    get_opt(*it, "no_rerank", v.ablations.no_rerank);
    get_opt(*it, "no_edit", v.ablations.no_edit);
  }
  if (auto it = j.find("plan"); it != j.end()) {
    const auto& p = *it;
    get_opt(p, "num_characters", v.plan.num_characters);
    get_opt(p, "setting_retries", v.plan.setting_retries);
    get_opt(p, "description_retries", v.plan.description_retries);
    get_opt(p, "outline_retries", v.plan.outline_retries);
    get_opt(p, "min_children", v.plan.min_children);
    get_opt(p, "premise_temperature", v.plan.premise_temperature);
    get_opt(p, "plan_temperature", v.plan.plan_temperature);
    get_opt(p, "setting_max_tokens", v.plan.setting_max_tokens);
    get_opt(p, "name_max_tokens", v.plan.name_max_tokens);
    get_opt(p, "description_max_tokens", v.plan.description_max_tokens);
    get_opt(p, "outline_max_tokens", v.plan.outline_max_tokens);
    get_opt(p, "name_banned_substrings", v.plan.names.banned_substrings);
    get_opt(p, "name_prefer_word_count", v.plan.names.prefer_word_count);
    get_opt(p, "name_samples_per_round", v.plan.names.samples_per_round);
    get_opt(p, "name_max_rounds", v.plan.names.max_rounds);
  }
  v.plan.required_points = v.outline_points;
  v.plan.outline_depth = v.outline_depth;
  if (auto it = j.find("draft"); it != j.end()) {
    const auto& d = *it;
    get_opt(d, "context_budget", v.draft.context_budget);
    get_opt(d, "summary_passages", v.draft.summary_passages);
    get_opt(d, "num_candidates", v.draft.num_candidates);
    get_opt(d, "temperature", v.draft.temperature);
    get_opt(d, "summary_max_tokens", v.draft.summary_max_tokens);
    get_opt(d, "description_max_tokens", v.draft.description_max_tokens);
  }
  v.draft.budget = v.max_context;
  v.draft.reserved_generation = v.continuation_tokens;
  if (auto it = j.find("filters"); it != j.end()) {
    const auto& f = *it;
    get_opt(f, "min_repeat_ngram", v.filters.min_repeat_ngram);
    get_opt(f, "sentence_similarity_ratio", v.filters.sentence_similarity_ratio);
    get_opt(f, "banned_strings_hard", v.filters.banned_strings_hard);
    get_opt(f, "banned_strings_soft", v.filters.banned_strings_soft);
    get_opt(f, "soft_threshold", v.filters.soft_threshold);
    get_opt(f, "colon_head_window", v.filters.colon_head_window);
  }
  if (auto it = j.find("rerank"); it != j.end()) {
    get_opt(*it, "coherence_weight", v.weights.coherence);
    get_opt(*it, "relevance_weight", v.weights.relevance);
  }
  if (auto it = j.find("edit"); it != j.end()) {
    const auto& e = *it;
    get_opt(e, "entail_threshold", v.edit.entail_threshold);
    get_opt(e, "contradict_threshold", v.edit.contradict_threshold);
    get_opt(e, "qa_threshold", v.edit.qa_threshold);
    get_opt(e, "fact_samples", v.edit.fact_samples);
    get_opt(e, "value_samples", v.edit.value_samples);
    get_opt(e, "example_count", v.edit.example_count);
    get_opt(e, "correction_attempts", v.edit.correction_attempts);
    get_opt(e, "max_length_ratio", v.edit.max_length_ratio);
    get_opt(e, "fact_max_tokens", v.edit.fact_max_tokens);
    get_opt(e, "key_max_tokens", v.edit.key_max_tokens);
    get_opt(e, "value_max_tokens", v.edit.value_max_tokens);
    get_opt(e, "temperature", v.edit.temperature);
  }
}

void to_json(json& j, const CandidateLog& v) {
  j = {{"text", v.text}, {"verdict", v.verdict}, {"detail", v.detail}, {"scored", v.scored}};
  if (v.scored) {
    j["coherence_lp"] = score_value(v.coherence_lp);
    j["relevance_lp"] = score_value(v.relevance_lp);
    j["composite"] = score_value(v.composite);
  }
}
void from_json(const json& j, CandidateLog& v) {
  j.at("text").get_to(v.text);
  j.at("verdict").get_to(v.verdict);
  get_opt(j, "detail", v.detail);
  get_opt(j, "scored", v.scored);
  if (v.scored) {
    v.coherence_lp = score_from(j.at("coherence_lp"));
    v.relevance_lp = score_from(j.at("relevance_lp"));
    v.composite = score_from(j.at("composite"));
  }
}

void to_json(json& j, const FlagLog& v) {
  j = {{"character", v.character},   {"key", v.key},           {"old_value", v.old_value},
       {"new_value", v.new_value},   {"p_contradict", v.p_contradict}, {"instruction", v.instruction},
       {"resolved", v.resolved},     {"attempts", v.attempts}};
}
void from_json(const json& j, FlagLog& v) {
  j.at("character").get_to(v.character);
  j.at("key").get_to(v.key);
  j.at("old_value").get_to(v.old_value);
  j.at("new_value").get_to(v.new_value);
  j.at("p_contradict").get_to(v.p_contradict);
  get_opt(j, "instruction", v.instruction);
  get_opt(j, "resolved", v.resolved);
  get_opt(j, "attempts", v.attempts);
}

void to_json(json& j, const StepLog& v) {
  j = {{"passage_index", v.passage_index},
       {"section", v.section},
       {"prompt", v.prompt},
       {"prompt_tokens", v.prompt_tokens},
       {"prompt_budget", v.prompt_budget},
       {"candidates", v.candidates},
       {"chosen", v.chosen},
       {"degraded", v.degraded},
       {"flags", v.flags},
       {"new_characters", v.new_characters}};
}
void from_json(const json& j, StepLog& v) {
  j.at("passage_index").get_to(v.passage_index);
  j.at("section").get_to(v.section);
  j.at("prompt").get_to(v.prompt);
  j.at("prompt_tokens").get_to(v.prompt_tokens);
  j.at("prompt_budget").get_to(v.prompt_budget);
  j.at("candidates").get_to(v.candidates);
  j.at("chosen").get_to(v.chosen);
  j.at("degraded").get_to(v.degraded);
  get_opt(j, "flags", v.flags);
  get_opt(j, "new_characters", v.new_characters);
}

void to_json(json& j, const AlignmentEvent& v) {
  j = {{"section", v.section},
       {"previous_lp", score_value(v.previous_lp)},
       {"new_lp", score_value(v.new_lp)},
       {"advanced", v.advanced},
       {"forced", v.forced}};
}
void from_json(const json& j, AlignmentEvent& v) {
  j.at("section").get_to(v.section);
  v.previous_lp = score_from(j.at("previous_lp"));
  v.new_lp = score_from(j.at("new_lp"));
  j.at("advanced").get_to(v.advanced);
  get_opt(j, "forced", v.forced);
}

void to_json(json& j, const StoryArtifact& v) {
  int total_tokens = 0;
  for (const auto& p : v.state.passages) total_tokens += p.token_count;
  j = {{"config", v.config},
       {"summary",
        {{"passages", v.state.passages.size()},
         {"tokens", total_tokens},
         {"degraded", v.degraded()},
         {"unresolved_flags", v.unresolved_flags()},
         {"aborted", v.aborted}}},
       {"state", v.state},
       {"steps", v.steps},
       {"alignment", v.alignment},
       {"ending", v.ending},
       {"ending_fallback", v.ending_fallback},
       {"final_text", v.final_text},
       {"aborted", v.aborted},
       {"error", v.error}};
}
void from_json(const json& j, StoryArtifact& v) {
  j.at("config").get_to(v.config);
  j.at("state").get_to(v.state);
  j.at("steps").get_to(v.steps);
  get_opt(j, "alignment", v.alignment);
  get_opt(j, "ending", v.ending);
  get_opt(j, "ending_fallback", v.ending_fallback);
  get_opt(j, "final_text", v.final_text);
  get_opt(j, "aborted", v.aborted);
  get_opt(j, "error", v.error);
}

void to_json(json& j, const PromptRecord& v) {
  j = {{"kind", v.kind}, {"prompt", v.prompt}, {"params", v.params}};
  if (!v.aux.empty()) j["aux"] = v.aux;
}

void check_schema_version(const json& doc) {
  auto it = doc.find("schema_version");
  if (it == doc.end() || !it->is_number_integer()) throw ConfigError("document has no schema_version");
  if (it->get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(it->get<int>()));
  }
}

json plan_document(const Plan& plan) {
  json doc = {{"schema_version", kSchemaVersion}, {"kind", "plan"}};
  doc["plan"] = plan;
  return doc;
}

Plan plan_from_document(const json& doc) {
  check_schema_version(doc);
  return doc.at("plan").get<Plan>();
}

json artifact_document(const StoryArtifact& artifact) {
  json doc = artifact;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "story";
  return doc;
}

StoryArtifact artifact_from_document(const json& doc) {
  check_schema_version(doc);
  return doc.get<StoryArtifact>();
}

json prompts_document(const std::vector<PromptRecord>& records) {
  return {{"schema_version", kSchemaVersion}, {"kind", "prompts"}, {"records", records}};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

void write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw ConfigError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw ConfigError("cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace loom
