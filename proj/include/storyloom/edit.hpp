#pragma once

// Character-level consistency checking: facts are listed per character,
// turned into attribute/value pairs, merged into a per-character dictionary
// and checked for contradictions, which can then be repaired with the edit
// backend.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "storyloom/backends.hpp"
#include "storyloom/story_model.hpp"
#include "storyloom/templates.hpp"

namespace loom {

struct EditConfig {
  double entail_threshold = 0.5;
  double contradict_threshold = 0.5;
  double qa_threshold = 0.5;
  int fact_samples = 3;
  int value_samples = 3;
  int example_count = 5;
  int correction_attempts = 3;
  double max_length_ratio = 1.5;
  int fact_max_tokens = 128;
  int key_max_tokens = 64;
  int value_max_tokens = 16;
  double temperature = 0.7;
};

struct KeyExample {
  std::string character;
  std::string context;
  std::vector<std::string> lines;
};

// Blocks separated by "----" lines; each block is "Context (Name): text"
// followed by one output line per attribute. '#' lines are comments.
std::vector<KeyExample> parse_key_examples(const std::string& content);
std::vector<KeyExample> load_key_examples(const std::string& path);
// A small built-in bank, used when no file is configured.
const std::vector<KeyExample>& builtin_key_examples();

struct ContradictionFlag {
  std::string character;
  std::string key;
  AttributeEntry old_entry;
  AttributeEntry new_entry;
  double p_contradict = 0.0;
};

enum class MergeOutcome { added, kept_existing, replaced, flagged };
const char* to_string(MergeOutcome outcome);

struct MergeResult {
  MergeOutcome outcome = MergeOutcome::added;
  std::optional<ContradictionFlag> flag;
  bool conflict = false;     // the key already existed
  double p_contradict = 0.0; // max over both directions when `conflict`
};

// "Karen's" style keys name another character; everything else is a plain
// attribute such as "gender" or "friend's name".
bool is_possessive_key(const std::string& key);

// "Lucy is Karen's friend." / "Karen's gender is female."
std::string attribute_sentence(const std::string& character, const std::string& key, const std::string& value,
                               const TemplateSet& templates = default_templates());

std::vector<Fact> list_facts(const std::string& passage, const std::string& character, int passage_index,
                             const Backends& backends, const EditConfig& cfg,
                             const TemplateSet& templates = default_templates());

// Parses one generated line about `character`; returns the key or nullopt
// when the line has neither supported shape.
std::optional<std::string> parse_attribute_line(const std::string& line, const std::string& character);

// Keys for a fact. Possessive keys are canonicalized against `known` names.
std::vector<std::string> extract_attribute_keys(const Fact& fact, const std::string& passage,
                                                const std::vector<KeyExample>& bank,
                                                const std::vector<std::string>& known, const Backends& backends,
                                                const EditConfig& cfg,
                                                const TemplateSet& templates = default_templates());

std::optional<std::string> infer_value(const Fact& fact, const std::string& key, const Backends& backends,
                                       const EditConfig& cfg, const TemplateSet& templates = default_templates());

MergeResult merge_attribute(AttributeDictionary& dict, const std::string& character, const AttributeEntry& entry,
                            EntailmentModel& entailment, const EditConfig& cfg,
                            const TemplateSet& templates = default_templates());

struct RelationAddition {
  std::string character;
  std::string key;
  std::string value;
  MergeResult result;
};

// For a possessive key naming another known character, asks for the
// reciprocal relation and merges the implied entries into both dictionaries.
std::vector<RelationAddition> complete_relations(std::map<std::string, AttributeDictionary>& kb,
                                                 const std::string& character, const std::string& key,
                                                 const std::string& value, const Fact& fact,
                                                 const Backends& backends, const EditConfig& cfg,
                                                 const TemplateSet& templates = default_templates());

// Name from `known` that `mention` refers to (exact, then token-subset).
std::optional<std::string> resolve_character(const std::string& mention, const std::vector<std::string>& known);

enum class DetectMode { boolean, probability };

struct DetectResult {
  std::vector<ContradictionFlag> flags;
  double max_p_contradict = 0.0;
  std::vector<Fact> facts;
};

// Known characters mentioned in `passage` (full or first name), in name order.
std::vector<std::string> characters_in(const std::string& passage, const std::map<std::string, AttributeDictionary>& kb);

// Runs extraction for every known character in the passage and merges the
// results into state.kb.
DetectResult detect(const std::string& passage, int passage_index, StoryState& state,
                    const std::vector<KeyExample>& bank, const Backends& backends, const EditConfig& cfg,
                    DetectMode mode = DetectMode::boolean, const TemplateSet& templates = default_templates());

// Creates kb entries for every plan character and extracts attributes from
// their descriptions (passage_index -1).
void seed_knowledge_base(StoryState& state, const std::vector<KeyExample>& bank, const Backends& backends,
                         const EditConfig& cfg, const TemplateSet& templates = default_templates());

struct CorrectionResult {
  std::string text;
  bool resolved = false;
  int attempts = 0;
  std::string instruction;
};

CorrectionResult correct(const std::string& passage, const ContradictionFlag& flag, LanguageModel& lm,
                         const Tokenizer& tokenizer, const EditConfig& cfg,
                         const TemplateSet& templates = default_templates());

// "key: value" lines, one per entry.
std::string format_attributes(const AttributeDictionary& dict);

}  // namespace loom
