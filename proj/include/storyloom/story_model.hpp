#pragma once

// Core domain types shared by every stage of the pipeline.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace loom {

class Tokenizer;

struct Premise {
  std::string text;
};

// Throws PreconditionError unless the premise is non-empty and has no blank
// line inside it.
void validate_premise(const Premise& premise);

struct CharacterSheet {
  std::string name;
  std::string description;
  int created_at = 0;  // passage index; 0 for plan-time characters
};

struct OutlineNode {
  std::string text;
  std::string label;  // "2", "2.c", ...
  std::vector<OutlineNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct Plan {
  Premise premise;
  std::string setting;
  std::vector<CharacterSheet> characters;
  std::vector<OutlineNode> outline;
};

inline constexpr const char* kSettingPrefix = "The story is set";
inline constexpr int kDefaultMaxOutlineDepth = 2;

// Checks the setting prefix, non-empty outline, label/position consistency
// and the depth cap. Throws PreconditionError.
void validate_plan(const Plan& plan, int max_depth = kDefaultMaxOutlineDepth);

int outline_depth(const std::vector<OutlineNode>& outline);

// Label of the child at `index` under `parent_label`: numbers at the top
// level, then letters, then numbers again ("1", "1.a", "1.a.1").
std::string child_label(const std::string& parent_label, std::size_t index, int depth);

// Re-assigns every label from tree position.
void relabel(std::vector<OutlineNode>& outline);

struct OutlineLeaf {
  std::string label;
  std::string text;
  std::vector<std::string> ancestor_texts;  // outermost first
  std::vector<std::string> ancestor_labels;
};

// Leaves in depth-first order. Precondition: non-empty outline.
std::vector<OutlineLeaf> flatten_outline(const Plan& plan);

// Finds a node by label, or nullptr.
const OutlineNode* find_node(const std::vector<OutlineNode>& outline, const std::string& label);

struct Fact {
  std::string character;
  std::string text;
  int passage_index = -1;  // -1: derived from the plan
};

struct AttributeEntry {
  std::string key;
  std::string value;
  Fact source_fact;
  double confidence = 1.0;
};

// One value per key.
struct AttributeDictionary {
  std::map<std::string, AttributeEntry> entries;
};

struct Passage {
  std::string text;
  std::string section_path;  // label of the outline leaf it expands ("" in rolling mode)
  int index = 0;
  int token_count = 0;
};

struct StoryState {
  Plan plan;
  std::vector<Passage> passages;
  std::map<std::string, AttributeDictionary> kb;
  std::size_t current_leaf = 0;

  // Appends a passage with the next index and its token count.
  const Passage& append(std::string text, std::string section_path, const Tokenizer& tokenizer);
};

inline constexpr const char* kPassageSeparator = "\n\n";

// Passage texts in order joined by a blank line; `last_k` keeps only the
// most recent k passages.
std::string story_text(const StoryState& state, std::optional<std::size_t> last_k = std::nullopt);

}  // namespace loom
