#pragma once

// Interfaces to every model capability the engine consumes. Implementations
// live in mock_backend.hpp (deterministic, offline) and http_backend.hpp.
// All implementations must be safe to call from several threads at once.

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "storyloom/errors.hpp"

namespace loom {

struct GenParams {
  int max_tokens = 256;
  double temperature = 1.0;
  int num_samples = 1;
  std::vector<std::string> stop_sequences;
  // Index of the first requested sample. Callers that resample bump this so
  // deterministic backends return fresh samples; sampling backends ignore it.
  int sample_offset = 0;
};

// Throws PreconditionError on max_tokens < 1, num_samples < 1 or negative
// temperature.
void validate(const GenParams& params);

struct EntailmentVerdict {
  double p_entail = 0.0;
  double p_neutral = 1.0;
  double p_contradict = 0.0;
};

bool is_valid(const EntailmentVerdict& v);

struct QAResult {
  std::string answer;  // empty: abstained
  double confidence = 0.0;
};

struct Entity {
  std::string name;
  bool is_person = true;

  bool operator==(const Entity&) const = default;
};

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual int count_tokens(std::string_view text) const = 0;
  // Keeps the trailing tokens so that count_tokens(result) <= budget. The
  // result is a verbatim suffix of `text`.
  virtual std::string truncate_left(std::string_view text, int budget) const = 0;
};

// One token per maximal run of non-whitespace characters.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  int count_tokens(std::string_view text) const override;
  std::string truncate_left(std::string_view text, int budget) const override;
};

// Approximates subword tokenizers: words, digit runs and individual
// punctuation marks each count as one token.
class PretokenTokenizer final : public Tokenizer {
 public:
  int count_tokens(std::string_view text) const override;
  std::string truncate_left(std::string_view text, int budget) const override;
};

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual std::vector<std::string> complete(const std::string& prompt, const GenParams& params) = 0;
  virtual std::string insert(const std::string& prefix, const std::string& suffix,
                             const GenParams& params) = 0;
  virtual std::string edit(const std::string& text, const std::string& instruction) = 0;
  virtual int context_limit() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

double relevance(const std::vector<float>& query, const std::vector<float>& doc);

class EntailmentModel {
 public:
  virtual ~EntailmentModel() = default;
  virtual EntailmentVerdict entail(const std::string& premise, const std::string& hypothesis) = 0;
};

class QuestionAnswerer {
 public:
  virtual ~QuestionAnswerer() = default;
  virtual QAResult answer(const std::string& question, const std::string& context) = 0;
};

class EntityRecognizer {
 public:
  virtual ~EntityRecognizer() = default;
  virtual std::vector<Entity> detect_entities(const std::string& text) = 0;
};

// Probabilities in [0, 1] from the coherence and relevance rerankers.
class PassageScorer {
 public:
  virtual ~PassageScorer() = default;
  virtual double coherence(const std::string& prefix, const std::string& continuation) = 0;
  virtual double relevance(const std::string& summary, const std::string& passage) = 0;
};

// The capability bundle handed to every pipeline stage.
struct Backends {
  std::shared_ptr<LanguageModel> lm;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<EntailmentModel> entailment;
  std::shared_ptr<QuestionAnswerer> qa;
  std::shared_ptr<EntityRecognizer> ner;
  std::shared_ptr<PassageScorer> scorer;
  std::shared_ptr<Tokenizer> tokenizer;

  // Throws ConfigError naming the first missing capability.
  void require_all() const;
};

// Throws ContractViolation when the prompt plus requested tokens overflows
// the model context, PreconditionError on invalid params.
void check_completion_request(const LanguageModel& lm, const Tokenizer& tokenizer,
                              std::string_view prompt, const GenParams& params);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

// Runs `fn`, retrying TransportError up to policy.max_retries times with
// exponential backoff. Other exceptions propagate immediately.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn,
                  const std::function<void(std::chrono::milliseconds)>& sleep = {}) -> decltype(fn());

// Records every generation call (complete, insert, edit) for auditing.
struct PromptRecord {
  std::string kind;  // "complete" | "insert" | "edit"
  std::string prompt;
  std::string aux;  // insert suffix or edit instruction
  GenParams params;
};

class RecordingLanguageModel final : public LanguageModel {
 public:
  explicit RecordingLanguageModel(std::shared_ptr<LanguageModel> inner);

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string insert(const std::string& prefix, const std::string& suffix,
                     const GenParams& params) override;
  std::string edit(const std::string& text, const std::string& instruction) override;
  int context_limit() const override { return inner_->context_limit(); }

  std::vector<PromptRecord> records() const;

 private:
  struct Impl;
  std::shared_ptr<LanguageModel> inner_;
  std::shared_ptr<Impl> impl_;
};

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn,
                  const std::function<void(std::chrono::milliseconds)>& sleep) -> decltype(fn()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= policy.max_retries) throw;
    }
    if (sleep) {
      sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
    delay = std::chrono::milliseconds(static_cast<long long>(delay.count() * policy.multiplier));
  }
}

}  // namespace loom
