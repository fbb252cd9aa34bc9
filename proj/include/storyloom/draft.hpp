#pragma once

// Prompt composition for each drafting step, candidate generation, and
// registration of characters that appear mid-story.

#include <string>
#include <vector>

#include "storyloom/backends.hpp"
#include "storyloom/story_model.hpp"
#include "storyloom/templates.hpp"

namespace loom {

struct DraftConfig {
  int budget = 1024;
  int reserved_generation = 256;
  int context_budget = 384;    // initial cap for the relevant-context segment
  int summary_passages = 2;    // penultimate passages folded into the recent summary
  int num_candidates = 10;
  double temperature = 0.8;
  int summary_max_tokens = 128;
  int description_max_tokens = 96;

  int prompt_budget() const { return budget - reserved_generation; }
};

// Throws PreconditionError on non-positive budgets or counts.
void validate(const DraftConfig& cfg);

enum class SegmentRole {
  header,
  relevant_context,
  narration_note,
  previous_outline,
  recent_summary,
  current_outline,
  autoregressive_context,
};

const char* to_string(SegmentRole role);

struct PromptSegment {
  SegmentRole role;
  std::string text;
};

struct PromptSpec {
  std::vector<PromptSegment> segments;
  int budget = 1024;
  int reserved_generation = 256;

  // Segments joined by a blank line.
  std::string render() const;
  const PromptSegment* find(SegmentRole role) const;
};

// Plan items in plan order: premise, setting, then every character
// description (mid-story characters included).
std::vector<std::string> plan_context_items(const Plan& plan);

// All plan items for an empty story; otherwise the items most relevant to
// the latest passage, greedily by rank until `budget_tokens` is used, and
// returned in plan order.
std::vector<std::string> select_relevant_context(const Plan& plan, const StoryState& state,
                                                 int budget_tokens, const Backends& backends);

// Summary of the up to `k` passages before the latest one; "" when there are
// none. Falls back to their first sentences if the model call fails.
std::string summarize_recent(const StoryState& state, int k, LanguageModel& lm, const DraftConfig& cfg,
                             const TemplateSet& templates = default_templates());

// Texts of the outline points finished before `current_leaf`, joined by
// spaces. Major points whose sub-points are all finished are collapsed into
// the major point's own text.
std::string previous_outline_summary(const Plan& plan, std::size_t current_leaf);

// "The business is a success" -> "the business is a success"; names keep
// their capital.
std::string lowercase_leading_function_word(const std::string& s);

// Builds the prompt for drafting `leaf` of the flattened outline. Throws
// PromptBudgetError when even the minimal prompt exceeds the budget.
PromptSpec compose_prompt(const StoryState& state, std::size_t leaf, const DraftConfig& cfg,
                          const Backends& backends, const TemplateSet& templates = default_templates());

// Prompt for the planless variant: premise, blank line, the most recent
// story text left-truncated to fit `prompt_budget` tokens.
std::string compose_rolling_prompt(const StoryState& state, int prompt_budget, const Tokenizer& tokenizer,
                                   const TemplateSet& templates = default_templates());

std::vector<std::string> generate_candidates(LanguageModel& lm, const Tokenizer& tokenizer,
                                             const std::string& prompt, const DraftConfig& cfg,
                                             int sample_offset = 0);

// Detects people in `passage_text` that are not yet known, writes a
// description for each and records them in state.plan.characters and
// state.kb. Returns the names added.
std::vector<std::string> register_new_entities(const std::string& passage_text, int passage_index,
                                               StoryState& state, const Backends& backends,
                                               const DraftConfig& cfg,
                                               const TemplateSet& templates = default_templates());

// True when `detected` names a character already in `known` (token-subset
// match, case-insensitive).
bool matches_known_character(const std::string& detected, const std::vector<std::string>& known);

}  // namespace loom
