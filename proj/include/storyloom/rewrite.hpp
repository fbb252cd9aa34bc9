#pragma once

// Rule-based candidate filters and coherence/relevance reranking.

#include <optional>
#include <string>
#include <vector>

#include "storyloom/backends.hpp"

namespace loom {

struct FilterConfig {
  int min_repeat_ngram = 5;
  double sentence_similarity_ratio = 0.2;
  std::vector<std::string> banned_strings_hard = {"\nComment", "copyright"};
  std::vector<std::string> banned_strings_soft = {"chapter", "author's note", "summary",
                                                  "full text", "outline", "premise"};
  int soft_threshold = 2;
  int colon_head_window = 4;
};

void validate(const FilterConfig& cfg);

enum class FilterReason { none, empty, repetition, narration, person };

const char* to_string(FilterReason reason);

struct FilterVerdict {
  FilterReason reason = FilterReason::none;
  std::string detail;

  bool passed() const { return reason == FilterReason::none; }
};

FilterVerdict heuristic_filter(const std::string& candidate, const std::string& prompt,
                               const FilterConfig& cfg = {});

// Individual checks, exposed for testing. Each returns a description of the
// first problem found, or nullopt.
std::optional<std::string> find_repetition(const std::string& candidate, const std::string& prompt,
                                           const FilterConfig& cfg);
std::optional<std::string> find_narration_artifact(const std::string& candidate, const FilterConfig& cfg);
std::optional<std::string> find_non_third_person(const std::string& candidate);

struct Candidate {
  std::size_t index = 0;  // sample index within its batch
  std::string text;
  FilterVerdict verdict;
  bool scored = false;
  double coherence_lp = 0.0;
  double relevance_lp = 0.0;
  double composite = 0.0;  // -infinity when a scorer returned 0
};

struct RerankWeights {
  double coherence = 1.0;
  double relevance = 1.0;
};

// Fills the log-probabilities and composite score.
void score_candidate(Candidate& candidate, const std::string& previous_passage, const std::string& outline_text,
                     PassageScorer& scorer, const RerankWeights& weights = {});

struct RerankResult {
  std::size_t best = 0;            // position in `ranked`, always 0
  std::vector<Candidate> ranked;   // best first
  bool degraded = false;           // nothing passed the filters

  const Candidate& best_candidate() const { return ranked.at(best); }
};

// Filters, scores the survivors and sorts them by composite (ties: lower
// sample index). When no candidate passes, every candidate is scored and the
// best is returned with `degraded` set.
RerankResult rerank(const std::vector<std::string>& texts, const std::string& prompt,
                    const std::string& previous_passage, const std::string& outline_text,
                    PassageScorer& scorer, const FilterConfig& cfg = {}, const RerankWeights& weights = {});

}  // namespace loom
