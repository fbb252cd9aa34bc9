// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any check fails. Everything runs on mock backends.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "scenarios.hpp"
#include "storyloom/cli.hpp"
#include "storyloom/serialize.hpp"

namespace fs = std::filesystem;
using namespace loom;
using namespace loom::support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

Outcome non_reproducibility() {
  // Human ratings and absolute detection AUCs need large models, trained
  // scorers and annotators. What can be checked is that this binary never
  // leaves the mock backends.
  const RunResources res = mock_resources(0);
  res.backends.require_all();
  const bool mock = dynamic_cast<MockBackend*>(res.backends.lm.get()) != nullptr &&
                    dynamic_cast<MockBackend*>(res.backends.scorer.get()) != nullptr;
  return {mock,
          "human-rated quality and absolute detection AUCs are not reproduced at desk scale; "
          "acceptance rests on the property and oracle checks below (mock backends only)"};
}

Outcome end_to_end_determinism() {
  const fs::path root = fs::temp_directory_path() / ("storyloom-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string config = source_dir() + "/config/default.ini";
  double slowest = 0.0;
  for (const char* run : {"a", "b"}) {
    const std::string out_dir = (root / run).string();
    const char* argv[] = {"storyloom", "generate", "--config", config.c_str(), "--seed", "7", "--premise",
                          kPremise,    "--output-dir", out_dir.c_str()};
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli(static_cast<int>(std::size(argv)), argv, out, err);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    spdlog::set_level(spdlog::level::err);
    if (code != kExitOk) return {false, "generate exited with " + std::to_string(code) + ": " + err.str()};
  }
  bool identical = true;
  for (const char* file : {"story.json", "story.txt"}) {
    identical = identical && read_file((root / "a" / file).string()) == read_file((root / "b" / file).string());
  }
  const StoryArtifact art = artifact_from_document(json::parse(read_file((root / "a" / "story.json").string())));
  fs::remove_all(root);

  int longest = 0;
  for (const auto& p : art.state.passages) longest = std::max(longest, p.token_count);
  const bool ends = art.final_text.ends_with(kEndMarker);
  const bool ok = art.state.passages.size() == 12 && longest <= 256 && ends && identical && slowest < 5.0;
  std::ostringstream d;
  d << art.state.passages.size() << " passages (want 12), longest " << longest << " tokens (<= 256), ends with "
    << "\"The End.\": " << (ends ? "yes" : "no") << ", byte-identical: " << (identical ? "yes" : "no")
    << ", slowest run " << fmt("%.2f", slowest) << " s (< 5)";
  return {ok, d.str()};
}

Outcome budget_invariant() {
  int draft_max = 0;
  int rolling_max = 0;
  int violations = 0;
  const StoryArtifact full = run_default_story(7);
  for (const auto& s : full.steps) {
    draft_max = std::max(draft_max, s.prompt_tokens);
    violations += s.prompt_tokens > 1024 - 256 ? 1 : 0;
  }
  RunConfig cfg;
  cfg.seed = 7;
  const StoryArtifact rolling = run_rolling(Premise{kPremise}, cfg, mock_resources(7));
  for (const auto& s : rolling.steps) {
    rolling_max = std::max(rolling_max, s.prompt_tokens);
    violations += s.prompt_tokens > 768 ? 1 : 0;
  }
  const BudgetReport prop = run_budget_property(200, 11);
  violations += prop.draft_violations + prop.rolling_violations;
  draft_max = std::max(draft_max, prop.max_draft_tokens);
  rolling_max = std::max(rolling_max, prop.max_rolling_tokens);
  std::ostringstream d;
  d << "end-to-end runs + " << prop.cases << " random cases: " << violations
    << " violations; largest draft prompt " << draft_max << "/768, largest rolling prompt " << rolling_max
    << "/768";
  if (!prop.failures.empty()) d << "; first: " << prop.failures.front();
  return {violations == 0 && prop.cases >= 200, d.str()};
}

Outcome filter_suite() {
  int correct = 0;
  std::string first_miss;
  for (const auto& c : filter_cases()) {
    FilterConfig cfg;
    if (c.similarity_ratio) cfg.sentence_similarity_ratio = *c.similarity_ratio;
    const FilterVerdict v = heuristic_filter(c.candidate, c.prompt, cfg);
    const bool ok = v.reason == c.expected &&
                    (c.detail_contains.empty() || v.detail.find(c.detail_contains) != std::string::npos);
    if (ok) {
      ++correct;
    } else if (first_miss.empty()) {
      first_miss = c.name + " -> " + to_string(v.reason) + " (" + v.detail + ")";
    }
  }
  std::mt19937_64 rng(2024);
  const int sentences = 500;
  int agree = 0;
  int rejected = 0;
  for (int i = 0; i < sentences; ++i) {
    const std::string s = random_person_sentence(rng);
    const bool oracle = person_oracle_rejects(s);
    rejected += oracle ? 1 : 0;
    agree += oracle == find_non_third_person(s).has_value() ? 1 : 0;
  }
  const int total = static_cast<int>(filter_cases().size());
  std::ostringstream d;
  d << correct << "/" << total << " table cases; person filter agrees with the oracle on " << agree << "/"
    << sentences << " random sentences (" << rejected << " rejected)";
  if (!first_miss.empty()) d << "; first miss: " << first_miss;
  return {correct == total && total >= 30 && agree == sentences, d.str()};
}

Outcome roc_equivalence() {
  std::mt19937_64 rng(99);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = std::uniform_int_distribution<int>(2, 50)(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    const bool grid = i % 2 == 0;  // half the instances are tie-heavy
    for (int k = 0; k < n; ++k) {
      scores[static_cast<std::size_t>(k)] = grid ? std::uniform_int_distribution<int>(0, 5)(rng) / 5.0
                                                 : std::uniform_real_distribution<double>(-3, 3)(rng);
      labels[static_cast<std::size_t>(k)] = std::uniform_int_distribution<int>(0, 1)(rng);
    }
    labels[0] = 1;
    labels[1] = 0;
    worst = std::max(worst, std::abs(roc_auc(scores, labels) - brute_force_auc(scores, labels)));
  }
  double worst_transform = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int n = std::uniform_int_distribution<int>(2, 50)(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      scores[static_cast<std::size_t>(k)] = std::uniform_int_distribution<int>(-20, 20)(rng);
      labels[static_cast<std::size_t>(k)] = std::uniform_int_distribution<int>(0, 1)(rng);
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = roc_auc(scores, labels);
    for (const auto& f : std::vector<std::function<double(double)>>{
             [](double x) { return 3.0 * x + 1.0; }, [](double x) { return std::exp(x / 4.0); },
             [](double x) { return x * x * x; }, [](double x) { return std::atan(x); }}) {
      std::vector<double> t(scores.size());
      for (std::size_t k = 0; k < scores.size(); ++k) t[k] = f(scores[k]);
      worst_transform = std::max(worst_transform, std::abs(roc_auc(t, labels) - base));
    }
  }
  return {worst <= 1e-12 && worst_transform <= 1e-12,
          fmt("1000 instances: max |auc - brute force| = %.1e; 100 instances x 4 monotone transforms: max change "
              "%.1e (tolerance 1e-12)",
              worst, worst_transform)};
}

Outcome merge_table() {
  int matched = 0;
  std::string first_miss;
  for (const auto& cell : merge_truth_table()) {
    MockFixtures fx;
    const std::string old_s = attribute_sentence("Beth", "role", "mother");
    const std::string new_s = attribute_sentence("Beth", "role", "friend");
    fx.entail[{old_s, new_s}] = verdict_for(cell.old_to_new);
    fx.entail[{new_s, old_s}] = verdict_for(cell.new_to_old);
    MockBackend mock(fx);
    AttributeDictionary dict;
    merge_attribute(dict, "Beth", {"role", "mother", {"Beth", "Beth is Julie's mother.", -1}, 1.0}, mock, {});
    const MergeResult r =
        merge_attribute(dict, "Beth", {"role", "friend", {"Beth", "Beth is Julie's friend.", 3}, 1.0}, mock, {});
    const std::string value = dict.entries.at("role").value;
    const std::string want_value = cell.expected == MergeOutcome::replaced ? "friend" : "mother";
    const bool ok = r.outcome == cell.expected && value == want_value &&
                    (cell.expected != MergeOutcome::flagged || (r.flag && std::abs(r.flag->p_contradict - 0.9) < 1e-12));
    if (ok) {
      ++matched;
    } else if (first_miss.empty()) {
      first_miss = std::string(to_string(cell.old_to_new)) + "/" + to_string(cell.new_to_old) + " gave " +
                   to_string(r.outcome);
    }
  }
  std::ostringstream d;
  d << matched << "/9 cells match the hand-written table";
  if (!first_miss.empty()) d << "; first miss: " << first_miss;
  return {matched == 9, d.str()};
}

Outcome synthetic_separation() {
  const MethodAucs oracle = synthetic_aucs(20, 7, EntailmentFlavor::oracle);
  const MethodAucs constant = synthetic_aucs(20, 7, EntailmentFlavor::constant);
  int ordered = 0;
  for (std::uint64_t s = 1; s <= 10; ++s) ordered += synthetic_aucs(20, 7, EntailmentFlavor::noisy, s, 0.2).ordered();
  const bool ok = oracle.structured == 1.0 && oracle.entailment >= 0.9 && oracle.dpr >= 0.9 &&
                  constant.entailment == 0.5 && constant.dpr == 0.5 && constant.structured == 0.5 && ordered >= 8;
  return {ok, fmt("oracle: structured %.3f, entailment %.3f, entailment-dpr %.3f; ", oracle.structured,
                  oracle.entailment, oracle.dpr) +
                  fmt("constant: %.3f / %.3f / %.3f; ", constant.entailment, constant.dpr, constant.structured) +
                  "noisy ordering structured >= dpr >= entailment held in " + std::to_string(ordered) +
                  "/10 seeds (need 8)"};
}

Outcome baseline_equivalence() {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.ablations = {true, true, true};
  const StoryArtifact ablated = run_re3(Premise{kPremise}, cfg, mock_resources(7));
  const StoryArtifact rolling = run_rolling(Premise{kPremise}, cfg, mock_resources(7));
  const std::string diff = first_step_difference(ablated, rolling);
  std::ostringstream d;
  d << ablated.steps.size() << " vs " << rolling.steps.size() << " steps; "
    << (diff.empty() ? "identical prompts, candidates and outputs" : diff);
  return {diff.empty() && !ablated.steps.empty(), d.str()};
}

Outcome hierarchical_mode() {
  const RunResources res = mock_resources(7);
  PlanConfig pc;
  Plan plan = three_point_plan();
  plan = expand_outline(*res.backends.lm, plan, 2, pc, res.templates);
  const std::size_t leaves = flatten_outline(plan).size();

  const AdaptiveScenario scenario = adaptive_scenario();
  const StoryArtifact art = run_adaptive_scenario(scenario, 7);
  const std::string diff = compare_events(art.alignment, scenario.expected_events);
  std::vector<int> per_leaf(3, 0);
  for (const auto& p : art.state.passages) per_leaf[static_cast<std::size_t>(std::stoi(p.section_path) - 1)]++;
  const bool counts = per_leaf == scenario.expected_passages_per_leaf;
  std::ostringstream d;
  d << "3-point outline expanded to " << leaves << " leaves (need >= 6); adaptive run: " << art.alignment.size()
    << " alignment events, " << (diff.empty() ? "exact match" : diff) << ", passages per leaf " << per_leaf[0] << "/"
    << per_leaf[1] << "/" << per_leaf[2] << (counts ? " as scheduled" : " (unexpected)");
  return {leaves >= 6 && diff.empty() && counts, d.str()};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  report("non-reproducibility", non_reproducibility);
  report("end-to-end determinism", end_to_end_determinism);
  report("budget invariant", budget_invariant);
  report("filter suite", filter_suite);
  report("roc-auc oracle", roc_equivalence);
  report("merge truth table", merge_table);
  report("synthetic separation", synthetic_separation);
  report("baseline equivalence", baseline_equivalence);
  report("hierarchical mode", hierarchical_mode);
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
