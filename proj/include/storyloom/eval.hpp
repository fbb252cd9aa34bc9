#pragma once

// Contradiction-detection evaluation over (s, s', t, t') tuples: two
// sentence-level entailment baselines, the attribute-dictionary detector,
// and ROC-AUC scoring.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "storyloom/backends.hpp"
#include "storyloom/edit.hpp"
#include "storyloom/mock_backend.hpp"
#include "storyloom/templates.hpp"

namespace loom {

struct EvalTuple {
  std::string id;
  std::string s;        // setup
  std::string s_prime;  // setup contradicting s
  std::string t;        // story written for s
  std::string t_prime;  // story written for s'
};

// Throws PreconditionError when a text is empty.
void validate(const EvalTuple& tuple);

struct LabeledPair {
  std::string tuple_id;
  std::string kind;  // "s,t", "s',t'", "s,t'" or "s',t"
  std::string setup;
  std::string story;
  bool contradictory = false;
};

// (s,t) and (s',t') are consistent; (s,t') and (s',t) are contradictory.
std::vector<LabeledPair> expand_tuples(const std::vector<EvalTuple>& tuples);

// JSON array of {id, s, s_prime, t, t_prime}.
std::vector<EvalTuple> parse_tuples(const nlohmann::json& doc);
std::vector<EvalTuple> load_tuples(const std::string& path);
nlohmann::json tuples_to_json(const std::vector<EvalTuple>& tuples);

// Max p_contradict over every (setup sentence, story sentence) pair.
double entailment_baseline(const std::string& setup, const std::string& story, EntailmentModel& entailment);

// Each story sentence is checked only against its most relevant setup
// sentence by embedding similarity (ties: earlier setup sentence).
double entailment_dpr_baseline(const std::string& setup, const std::string& story, Embedder& embedder,
                               EntailmentModel& entailment);

// Numbered items in the setup ("1. Name is ...") are character descriptions;
// the name is the item's leading run of capitalized words.
std::vector<CharacterSheet> parse_setup_characters(const std::string& setup);

struct StructuredOptions {
  EditConfig edit;
  std::vector<KeyExample> bank = builtin_key_examples();
  TemplateSet templates;
};

// Seeds a dictionary from the setup's character descriptions and returns
// the largest contradiction probability observed while merging the story's
// attributes (0 when nothing conflicts).
double structured_detector(const std::string& setup, const std::string& story, const Backends& backends,
                           const StructuredOptions& options = {});

// Rank-sum ROC-AUC with ties counted as one half. labels are 0/1; throws
// PreconditionError unless both classes are present and sizes match.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct EvalMethod {
  std::string name;
  std::function<double(const std::string& setup, const std::string& story)> score;
};

// "entailment", "entailment-dpr" or "structured". Throws ConfigError otherwise.
EvalMethod make_method(const std::string& name, const Backends& backends, const StructuredOptions& options = {});

struct PairScore {
  std::size_t pair = 0;
  bool ok = false;
  double score = 0.0;
  std::string error;
};

struct MethodResult {
  std::string method;
  double auc = 0.0;
  bool auc_defined = false;
  std::size_t scored = 0;
  std::size_t excluded = 0;
  std::vector<PairScore> pairs;
};

struct EvalReport {
  std::vector<LabeledPair> pairs;
  std::vector<MethodResult> results;
};

// Scores every pair with every method, `threads` pairs at a time; results
// are stored in pair order regardless of completion order.
EvalReport evaluate(const std::vector<EvalTuple>& tuples, const std::vector<EvalMethod>& methods,
                    unsigned threads = 1);

std::string format_table(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

// Entailment model that ignores its input.
class ConstantEntailment final : public EntailmentModel {
 public:
  explicit ConstantEntailment(EntailmentVerdict verdict = {0.0, 1.0, 0.0}) : verdict_(verdict) {}
  EntailmentVerdict entail(const std::string&, const std::string&) override { return verdict_; }

 private:
  EntailmentVerdict verdict_;
};

// Wraps another model and injects spurious contradictions between unrelated
// sentences. When the inner verdict is mostly neutral and the texts differ,
// with probability `rate` the contradiction probability is replaced by a
// uniform draw (a pure function of the texts and seed); the other two
// components are rescaled to keep the triple normalized.
class NoisyEntailment final : public EntailmentModel {
 public:
  NoisyEntailment(std::shared_ptr<EntailmentModel> inner, std::uint64_t seed, double rate);
  EntailmentVerdict entail(const std::string& premise, const std::string& hypothesis) override;

 private:
  std::shared_ptr<EntailmentModel> inner_;
  std::uint64_t seed_;
  double rate_;
};

struct SyntheticSet {
  std::vector<EvalTuple> tuples;
  MockFixtures fixtures;  // oracle: entailment encodes the ground truth
};

// Tuples whose characters carry one attribute that s and s' disagree on,
// together with the mock fixtures that let the attribute pipeline read them.
SyntheticSet generate_synthetic_tuples(int count, std::uint64_t seed,
                                       const TemplateSet& templates = default_templates());

}  // namespace loom
