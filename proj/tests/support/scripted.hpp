#pragma once

// Hand-controlled backend doubles for tests that need exact call counts or
// scripted scores.

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "storyloom/backends.hpp"

namespace loom::support {

// Forwards to another model and counts calls per kind.
class CountingLanguageModel final : public LanguageModel {
 public:
  explicit CountingLanguageModel(std::shared_ptr<LanguageModel> inner) : inner_(std::move(inner)) {}

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string insert(const std::string& prefix, const std::string& suffix, const GenParams& params) override;
  std::string edit(const std::string& text, const std::string& instruction) override;
  int context_limit() const override { return inner_->context_limit(); }

  int completes() const { return completes_; }
  int inserts() const { return inserts_; }
  int edits() const { return edits_; }
  int total() const { return completes_ + inserts_ + edits_; }

 private:
  std::shared_ptr<LanguageModel> inner_;
  std::atomic<int> completes_{0};
  std::atomic<int> inserts_{0};
  std::atomic<int> edits_{0};
};

class CountingEntailment final : public EntailmentModel {
 public:
  explicit CountingEntailment(std::shared_ptr<EntailmentModel> inner) : inner_(std::move(inner)) {}
  EntailmentVerdict entail(const std::string& premise, const std::string& hypothesis) override {
    ++calls_;
    return inner_->entail(premise, hypothesis);
  }
  int calls() const { return calls_; }

 private:
  std::shared_ptr<EntailmentModel> inner_;
  std::atomic<int> calls_{0};
};

class CountingEmbedder final : public Embedder {
 public:
  explicit CountingEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override {
    ++calls_;
    return inner_->embed(texts);
  }
  int calls() const { return calls_; }

 private:
  std::shared_ptr<Embedder> inner_;
  std::atomic<int> calls_{0};
};

// Appends " [draft N]" to every sample of completion calls that request
// exactly `batch` samples, N counting such calls from zero.
class BatchTaggingLanguageModel final : public LanguageModel {
 public:
  BatchTaggingLanguageModel(std::shared_ptr<LanguageModel> inner, int batch)
      : inner_(std::move(inner)), batch_(batch) {}

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string insert(const std::string& prefix, const std::string& suffix, const GenParams& params) override {
    return inner_->insert(prefix, suffix, params);
  }
  std::string edit(const std::string& text, const std::string& instruction) override {
    return inner_->edit(text, instruction);
  }
  int context_limit() const override { return inner_->context_limit(); }

  int batches() const { return batches_; }

 private:
  std::shared_ptr<LanguageModel> inner_;
  int batch_;
  std::atomic<int> batches_{0};
};

// Reads the " [draft N]" tag and returns exp(lp[N]) as the coherence
// probability; relevance is always 1, so a candidate's composite is lp[N].
class ScheduleScorer final : public PassageScorer {
 public:
  explicit ScheduleScorer(std::vector<double> lp) : lp_(std::move(lp)) {}
  double coherence(const std::string& prefix, const std::string& continuation) override;
  double relevance(const std::string&, const std::string&) override { return 1.0; }

 private:
  std::vector<double> lp_;
};

// Returns fixed probabilities keyed by exact continuation text.
class TableScorer final : public PassageScorer {
 public:
  TableScorer(std::map<std::string, double> coherence, std::map<std::string, double> relevance)
      : coherence_(std::move(coherence)), relevance_(std::move(relevance)) {}
  double coherence(const std::string&, const std::string& continuation) override {
    return coherence_.at(continuation);
  }
  double relevance(const std::string&, const std::string& passage) override { return relevance_.at(passage); }

 private:
  std::map<std::string, double> coherence_;
  std::map<std::string, double> relevance_;
};

// Language model driven by a callback; handy for failure injection.
class LambdaLanguageModel final : public LanguageModel {
 public:
  using CompleteFn = std::function<std::vector<std::string>(const std::string&, const GenParams&)>;
  using EditFn = std::function<std::string(const std::string&, const std::string&)>;

  explicit LambdaLanguageModel(CompleteFn complete, EditFn edit = {}, int context_limit = 2048)
      : complete_(std::move(complete)), edit_(std::move(edit)), limit_(context_limit) {}

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override {
    return complete_(prompt, params);
  }
  std::string insert(const std::string&, const std::string&, const GenParams&) override {
    throw TransportError("insert not scripted");
  }
  std::string edit(const std::string& text, const std::string& instruction) override {
    if (!edit_) throw TransportError("edit not scripted");
    return edit_(text, instruction);
  }
  int context_limit() const override { return limit_; }

 private:
  CompleteFn complete_;
  EditFn edit_;
  int limit_;
};

}  // namespace loom::support
