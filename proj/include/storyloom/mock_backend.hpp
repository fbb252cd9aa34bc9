#pragma once

// Deterministic offline implementation of every backend capability.
//
// Behaviour is a pure function of (inputs, seed, fixtures). Fixture tables
// override the built-in behaviour; the fixture file format is one record per
// line, fields separated by TAB, with "\n", "\t" and "\\" escapes:
//
//   complete   <prompt substring>   <response>          (repeat to add samples)
//   insert     <suffix>  <prefix substring or *>  <bridge>
//   edit       <instruction>  <find>  <replace>
//   entail     <premise>  <hypothesis>  <p_entail>  <p_neutral>  <p_contradict>
//   qa         <question>  <context substring or *>  <answer>  <confidence>
//   coherence  <continuation substring>  <probability>
//   relevance  <passage substring>  <probability>
//   nonperson  <entity name>
//
// Lines starting with '#' and blank lines are ignored.
//
// Without a matching rule the language model recognizes the shipped prompt
// templates by their cue lines and synthesizes plausible, seed-dependent
// output for each (premises, settings, names, outlines, story passages,
// summaries, fact lists, attribute completions).

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "storyloom/backends.hpp"

namespace loom {

struct MockFixtures {
  struct CompleteRule {
    std::string match;
    std::vector<std::string> responses;
  };
  struct InsertRule {
    std::string suffix;
    std::string prefix_match;
    std::string bridge;
  };
  struct EditRule {
    std::string instruction;
    std::string find;
    std::string replace;
  };
  struct QaRule {
    std::string question;
    std::string context_match;
    std::string answer;
    double confidence = 0.0;
  };
  struct ScoreRule {
    std::string match;
    double probability = 0.0;
  };

  std::vector<CompleteRule> complete;
  std::vector<InsertRule> insert;
  std::vector<EditRule> edit;
  std::map<std::pair<std::string, std::string>, EntailmentVerdict> entail;
  std::vector<QaRule> qa;
  std::vector<ScoreRule> coherence;
  std::vector<ScoreRule> relevance;
  std::set<std::string> non_person;

  void add_completion(const std::string& match, const std::string& response);
  // Later rules win over earlier ones for the same key.
  void merge(const MockFixtures& other);
  std::string to_text() const;
};

// Throws ConfigError with the line number on malformed input.
MockFixtures parse_fixtures(const std::string& content);
MockFixtures load_fixtures(const std::string& path);

struct MockOptions {
  std::uint64_t seed = 0;
  int context_limit = 2048;
  EntailmentVerdict neutral_default{0.04, 0.92, 0.04};
  EntailmentVerdict reflexive{0.94, 0.04, 0.02};
  int embedding_dim = 256;
};

class MockBackend final : public LanguageModel,
                          public Embedder,
                          public EntailmentModel,
                          public QuestionAnswerer,
                          public EntityRecognizer,
                          public PassageScorer {
 public:
  explicit MockBackend(MockFixtures fixtures = {}, MockOptions options = {});

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string insert(const std::string& prefix, const std::string& suffix,
                     const GenParams& params) override;
  std::string edit(const std::string& text, const std::string& instruction) override;
  int context_limit() const override { return options_.context_limit; }

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
  EntailmentVerdict entail(const std::string& premise, const std::string& hypothesis) override;
  QAResult answer(const std::string& question, const std::string& context) override;
  std::vector<Entity> detect_entities(const std::string& text) override;
  double coherence(const std::string& prefix, const std::string& continuation) override;
  double relevance(const std::string& summary, const std::string& passage) override;

  const MockFixtures& fixtures() const { return fixtures_; }
  const WhitespaceTokenizer& tokenizer() const { return tokenizer_; }

 private:
  std::string synthesize(const std::string& prompt, const GenParams& params, int sample) const;

  MockFixtures fixtures_;
  MockOptions options_;
  WhitespaceTokenizer tokenizer_;
};

// A backend bundle where every capability is served by one MockBackend and
// tokens are whitespace-delimited.
Backends make_mock_backends(MockFixtures fixtures = {}, MockOptions options = {});

}  // namespace loom
