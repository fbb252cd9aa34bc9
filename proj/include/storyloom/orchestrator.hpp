#pragma once

// End-to-end story generation: the plan/draft/rewrite/edit loop, the
// planless rolling baseline, adaptive leaf advancement and the ending.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "storyloom/backends.hpp"
#include "storyloom/draft.hpp"
#include "storyloom/edit.hpp"
#include "storyloom/plan.hpp"
#include "storyloom/rewrite.hpp"
#include "storyloom/story_model.hpp"
#include "storyloom/templates.hpp"

namespace loom {

enum class RunMode { recursive, rolling };

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& s);

struct Ablations {
  bool no_plan = false;
  bool no_rerank = false;
  bool no_edit = false;
};

struct RunConfig {
  RunMode mode = RunMode::recursive;
  std::optional<int> outline_points = 3;
  int outline_depth = 1;
  int passages_per_leaf = 4;
  bool adaptive = false;
  int min_passages_per_leaf = 1;
  int max_passages_per_leaf = 8;
  double alignment_threshold = 1.0;
  int continuation_tokens = 256;
  int max_context = 1024;
  int rolling_truncate = 768;
  int rolling_total = 3072;
  int empty_retries = 5;
  Ablations ablations;
  std::uint64_t seed = 0;

  PlanConfig plan;
  DraftConfig draft;
  FilterConfig filters;
  RerankWeights weights;
  EditConfig edit;
};

// Throws ConfigError on inconsistent settings.
void validate(const RunConfig& cfg);

struct CandidateLog {
  std::string text;
  std::string verdict;  // "pass" or the failed filter
  std::string detail;
  bool scored = false;
  double coherence_lp = 0.0;
  double relevance_lp = 0.0;
  double composite = 0.0;
};

struct FlagLog {
  std::string character;
  std::string key;
  std::string old_value;
  std::string new_value;
  double p_contradict = 0.0;
  std::string instruction;
  bool resolved = false;
  int attempts = 0;
};

struct StepLog {
  int passage_index = 0;
  std::string section;
  std::string prompt;
  int prompt_tokens = 0;
  int prompt_budget = 0;
  std::vector<CandidateLog> candidates;  // in sample order
  std::size_t chosen = 0;               // sample index of the accepted text
  bool degraded = false;                 // no candidate passed the filters
  std::vector<FlagLog> flags;
  std::vector<std::string> new_characters;
};

// Adaptive mode: one event per scored continuation after the first in a leaf.
struct AlignmentEvent {
  std::string section;
  double previous_lp = 0.0;
  double new_lp = 0.0;
  bool advanced = false;
  bool forced = false;  // advanced because the per-leaf maximum was reached
};

struct StoryArtifact {
  RunConfig config;
  StoryState state;
  std::vector<StepLog> steps;
  std::vector<AlignmentEvent> alignment;
  std::string ending;      // bridge text produced before "The End."
  std::string final_text;  // story, bridge and "The End."
  bool ending_fallback = false;
  bool aborted = false;
  std::string error;

  bool degraded() const;
  int unresolved_flags() const;
};

// Process exit status for a finished or aborted run: 0 success, 2 degraded,
// 1 aborted.
int exit_code(const StoryArtifact& artifact);

class RunAborted : public std::runtime_error {
 public:
  RunAborted(StoryArtifact partial, const std::string& what)
      : std::runtime_error(what), artifact_(std::move(partial)) {}
  const StoryArtifact& artifact() const { return artifact_; }

 private:
  StoryArtifact artifact_;
};

struct RunResources {
  Backends backends;
  TemplateSet templates;
  std::vector<KeyExample> key_examples = builtin_key_examples();
};

inline constexpr const char* kEndMarker = "The End.";

// Dispatches on cfg.mode and cfg.ablations.no_plan.
StoryArtifact run_story(const Premise& premise, const RunConfig& cfg, const RunResources& res);

// Plan, then draft every outline leaf. With ablations.no_plan this becomes
// the planless loop with rewrite/edit still applied.
StoryArtifact run_re3(const Premise& premise, const RunConfig& cfg, const RunResources& res);

// Uses a plan generated elsewhere.
StoryArtifact run_re3_with_plan(const Plan& plan, const RunConfig& cfg, const RunResources& res);

// Premise plus story so far as the prompt, one continuation at a time, until
// rolling_total tokens have been generated.
StoryArtifact run_rolling(const Premise& premise, const RunConfig& cfg, const RunResources& res);

// Advance iff prev - new > threshold. Without a previous score: stay.
bool outline_alignment_step(std::optional<double> prev_best_lp, double new_best_lp, double threshold);

struct Ending {
  std::string bridge;
  std::string final_text;
  bool fallback = false;
};

Ending end_story(const StoryState& state, LanguageModel& lm, const Tokenizer& tokenizer, const RunConfig& cfg);

// Named configurations for the ablation study: full, no_plan, no_rerank,
// no_edit and rolling.
std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base);

}  // namespace loom
