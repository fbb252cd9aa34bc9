#include "storyloom/backends.hpp"

#include <cctype>
#include <cmath>
#include <mutex>

namespace loom {

void validate(const GenParams& params) {
  if (params.max_tokens < 1) throw PreconditionError("max_tokens must be >= 1");
  if (params.num_samples < 1) throw PreconditionError("num_samples must be >= 1");
  if (params.temperature < 0.0) throw PreconditionError("temperature must be non-negative");
}

bool is_valid(const EntailmentVerdict& v) {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  return in_unit(v.p_entail) && in_unit(v.p_neutral) && in_unit(v.p_contradict) &&
         std::abs(v.p_entail + v.p_neutral + v.p_contradict - 1.0) <= 1e-6;
}

namespace {

// Start offsets of tokens, by a classifier that maps each byte to a token
// class: 0 whitespace, otherwise tokens break whenever the class changes or
// the class is "single" (punctuation).
template <typename Classify>
std::vector<std::size_t> token_starts(std::string_view text, Classify classify) {
  std::vector<std::size_t> starts;
  int prev = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const int cls = classify(static_cast<unsigned char>(text[i]));
    if (cls != 0 && (cls != prev || cls == 3)) starts.push_back(i);
    prev = cls;
  }
  return starts;
}

int whitespace_class(unsigned char c) { return std::isspace(c) ? 0 : 1; }

int pretoken_class(unsigned char c) {
  if (std::isspace(c)) return 0;
  if (std::isdigit(c)) return 2;
  if (std::ispunct(c) && c != '\'') return 3;
  return 1;  // letters, apostrophes, non-ASCII bytes
}

template <typename Classify>
std::string truncate_by_starts(std::string_view text, int budget, Classify classify) {
  if (budget < 0) throw PreconditionError("truncate_left: budget must be >= 0");
  const auto starts = token_starts(text, classify);
  if (static_cast<int>(starts.size()) <= budget) return std::string(text);
  if (budget == 0) return {};
  return std::string(text.substr(starts[starts.size() - static_cast<std::size_t>(budget)]));
}

}  // namespace

int WhitespaceTokenizer::count_tokens(std::string_view text) const {
  return static_cast<int>(token_starts(text, whitespace_class).size());
}

std::string WhitespaceTokenizer::truncate_left(std::string_view text, int budget) const {
  return truncate_by_starts(text, budget, whitespace_class);
}

int PretokenTokenizer::count_tokens(std::string_view text) const {
  return static_cast<int>(token_starts(text, pretoken_class).size());
}

std::string PretokenTokenizer::truncate_left(std::string_view text, int budget) const {
  return truncate_by_starts(text, budget, pretoken_class);
}

double relevance(const std::vector<float>& query, const std::vector<float>& doc) {
  if (query.size() != doc.size()) throw PreconditionError("relevance: dimension mismatch");
  double dot = 0.0;
  for (std::size_t i = 0; i < query.size(); ++i) dot += static_cast<double>(query[i]) * doc[i];
  return dot;
}

void Backends::require_all() const {
  if (!lm) throw ConfigError("backend set has no language model");
  if (!embedder) throw ConfigError("backend set has no embedder");
  if (!entailment) throw ConfigError("backend set has no entailment model");
  if (!qa) throw ConfigError("backend set has no question answerer");
  if (!ner) throw ConfigError("backend set has no entity recognizer");
  if (!scorer) throw ConfigError("backend set has no passage scorer");
  if (!tokenizer) throw ConfigError("backend set has no tokenizer");
}

void check_completion_request(const LanguageModel& lm, const Tokenizer& tokenizer,
                              std::string_view prompt, const GenParams& params) {
  validate(params);
  const int needed = tokenizer.count_tokens(prompt) + params.max_tokens;
  if (needed > lm.context_limit()) {
    throw ContractViolation("prompt (" + std::to_string(tokenizer.count_tokens(prompt)) +
                            " tokens) + max_tokens " + std::to_string(params.max_tokens) +
                            " exceeds context limit " + std::to_string(lm.context_limit()));
  }
}

struct RecordingLanguageModel::Impl {
  mutable std::mutex mu;
  std::vector<PromptRecord> records;

  void add(PromptRecord r) {
    std::lock_guard lock(mu);
    records.push_back(std::move(r));
  }
};

RecordingLanguageModel::RecordingLanguageModel(std::shared_ptr<LanguageModel> inner)
    : inner_(std::move(inner)), impl_(std::make_shared<Impl>()) {}

std::vector<std::string> RecordingLanguageModel::complete(const std::string& prompt,
                                                          const GenParams& params) {
  impl_->add({"complete", prompt, "", params});
  return inner_->complete(prompt, params);
}

std::string RecordingLanguageModel::insert(const std::string& prefix, const std::string& suffix,
                                           const GenParams& params) {
  impl_->add({"insert", prefix, suffix, params});
  return inner_->insert(prefix, suffix, params);
}

std::string RecordingLanguageModel::edit(const std::string& text, const std::string& instruction) {
  GenParams none;
  impl_->add({"edit", text, instruction, none});
  return inner_->edit(text, instruction);
}

std::vector<PromptRecord> RecordingLanguageModel::records() const {
  std::lock_guard lock(impl_->mu);
  return impl_->records;
}

}  // namespace loom
