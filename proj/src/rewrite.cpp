#include "storyloom/rewrite.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

void validate(const FilterConfig& cfg) {
  if (cfg.min_repeat_ngram < 1 || cfg.sentence_similarity_ratio <= 0.0 || cfg.soft_threshold < 1 ||
      cfg.colon_head_window < 1) {
    throw ConfigError("filter thresholds must be positive");
  }
}

const char* to_string(FilterReason reason) {
  switch (reason) {
    case FilterReason::none: return "pass";
    case FilterReason::empty: return "empty";
    case FilterReason::repetition: return "repetition";
    case FilterReason::narration: return "narration";
    case FilterReason::person: return "person";
  }
  return "unknown";
}

namespace {

std::set<std::string> ngrams(const std::vector<std::string>& words, std::size_t n) {
  std::set<std::string> out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string g = words[i];
    for (std::size_t j = 1; j < n; ++j) g += " " + words[i + j];
    out.insert(std::move(g));
  }
  return out;
}

}  // namespace

std::optional<std::string> find_repetition(const std::string& candidate, const std::string& prompt,
                                           const FilterConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.min_repeat_ngram);
  const auto words = text::normalized_words(candidate);
  std::set<std::string> seen;
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::string g = words[i];
    for (std::size_t j = 1; j < n; ++j) g += " " + words[i + j];
    if (!seen.insert(g).second) return "repeated " + std::to_string(n) + "-gram '" + g + "'";
  }
  if (!prompt.empty()) {
    const auto from_prompt = ngrams(text::normalized_words(prompt), n);
    for (const auto& g : seen) {
      if (from_prompt.contains(g)) return std::to_string(n) + "-gram shared with prompt '" + g + "'";
    }
  }

  std::vector<std::vector<std::string>> sentences;
  for (const auto& s : text::split_sentences(candidate)) {
    auto w = text::normalized_words(s);
    if (!w.empty()) sentences.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (std::size_t j = i + 1; j < sentences.size(); ++j) {
      const double longest = static_cast<double>(std::max(sentences[i].size(), sentences[j].size()));
      const auto d = text::word_edit_distance(sentences[i], sentences[j]);
      if (static_cast<double>(d) <= cfg.sentence_similarity_ratio * longest) {
        return "sentences " + std::to_string(i) + " and " + std::to_string(j) + " are near duplicates";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> find_narration_artifact(const std::string& candidate, const FilterConfig& cfg) {
  for (const auto& s : cfg.banned_strings_hard) {
    if (text::contains_ci(candidate, s)) return "banned string '" + text::escape_line(s) + "'";
  }
  std::vector<std::string> soft_hits;
  for (const auto& s : cfg.banned_strings_soft) {
    if (text::contains_ci(candidate, s)) soft_hits.push_back(s);
  }
  if (static_cast<int>(soft_hits.size()) >= cfg.soft_threshold) {
    return "soft banned strings '" + text::join(soft_hits, "', '") + "'";
  }
  for (const auto& para : text::split_paragraphs(candidate)) {
    const auto words = text::split_words(para);
    const std::size_t window = std::min(words.size(), static_cast<std::size_t>(cfg.colon_head_window));
    for (std::size_t i = 0; i < window; ++i) {
      if (words[i].find(':') != std::string::npos) return "colon near paragraph start";
    }
  }
  return std::nullopt;
}

std::optional<std::string> find_non_third_person(const std::string& candidate) {
  bool quoted = false;
  std::string word;
  auto check = [&]() -> std::optional<std::string> {
    std::optional<std::string> hit;
    if (word == "I") {
      hit = "first person 'I'";
    } else {
      const std::string lower = text::to_lower(word);
      if (lower == "we" || lower == "you") hit = "'" + word + "' outside quotes";
    }
    word.clear();
    return hit;
  };
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(candidate[i]);
    // Curly double quotes (U+201C, U+201D) arrive as three UTF-8 bytes.
    const bool curly = c == 0xE2 && i + 2 < candidate.size() &&
                       static_cast<unsigned char>(candidate[i + 1]) == 0x80 &&
                       (static_cast<unsigned char>(candidate[i + 2]) == 0x9C ||
                        static_cast<unsigned char>(candidate[i + 2]) == 0x9D);
    if (std::isalnum(c)) {
      if (!quoted) word += static_cast<char>(c);
      continue;
    }
    if (auto hit = check()) return hit;
    if (c == '"' || curly) quoted = !quoted;
    if (curly) i += 2;
  }
  return check();
}

FilterVerdict heuristic_filter(const std::string& candidate, const std::string& prompt, const FilterConfig& cfg) {
  if (text::trim(candidate).empty()) return {FilterReason::empty, "empty continuation"};
  if (auto r = find_repetition(candidate, prompt, cfg)) return {FilterReason::repetition, *r};
  if (auto r = find_narration_artifact(candidate, cfg)) return {FilterReason::narration, *r};
  if (auto r = find_non_third_person(candidate)) return {FilterReason::person, *r};
  return {};
}

namespace {

double safe_log(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractViolation("scorer returned a probability outside [0, 1]");
  return p == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(p);
}

}  // namespace

void score_candidate(Candidate& candidate, const std::string& previous_passage, const std::string& outline_text,
                     PassageScorer& scorer, const RerankWeights& weights) {
  candidate.coherence_lp = safe_log(scorer.coherence(previous_passage, candidate.text));
  candidate.relevance_lp = safe_log(scorer.relevance(outline_text, candidate.text));
  candidate.composite = weights.coherence * candidate.coherence_lp + weights.relevance * candidate.relevance_lp;
  candidate.scored = true;
}

RerankResult rerank(const std::vector<std::string>& texts, const std::string& prompt,
                    const std::string& previous_passage, const std::string& outline_text, PassageScorer& scorer,
                    const FilterConfig& cfg, const RerankWeights& weights) {
  if (texts.empty()) throw PreconditionError("rerank needs at least one candidate");
  validate(cfg);
  std::vector<Candidate> all;
  all.reserve(texts.size());
  bool any_passed = false;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Candidate c;
    c.index = i;
    c.text = texts[i];
    c.verdict = heuristic_filter(c.text, prompt, cfg);
    any_passed = any_passed || c.verdict.passed();
    all.push_back(std::move(c));
  }

  RerankResult result;
  result.degraded = !any_passed;
  for (auto& c : all) {
    if (c.verdict.passed() || result.degraded) score_candidate(c, previous_passage, outline_text, scorer, weights);
  }
  std::stable_sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.scored != b.scored) return a.scored;
    if (a.scored && a.composite != b.composite) return a.composite > b.composite;
    return a.index < b.index;
  });
  result.ranked = std::move(all);
  return result;
}

}  // namespace loom
