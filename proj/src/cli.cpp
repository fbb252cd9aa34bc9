#include "storyloom/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <future>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "storyloom/config.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/eval.hpp"
#include "storyloom/http_backend.hpp"
#include "storyloom/mock_backend.hpp"
#include "storyloom/orchestrator.hpp"
#include "storyloom/plan.hpp"
#include "storyloom/serialize.hpp"
#include "storyloom/text.hpp"

#ifndef STORYLOOM_CONFIG_DIR
#define STORYLOOM_CONFIG_DIR "config"
#endif

namespace loom {

std::string default_config_dir() {
  if (const char* env = std::getenv("STORYLOOM_CONFIG_DIR"); env != nullptr && *env != '\0') return env;
  return STORYLOOM_CONFIG_DIR;
}

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string premise;
  std::string premise_file;
  bool generate_premise = false;
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output_dir = "out";
  std::string backend;
  std::string fixtures;
  std::string templates;
  bool dump_prompts = false;
  std::string plan_path;
  std::string tuples;
  std::string methods = "entailment,entailment-dpr,structured";
  int synthetic = 0;
  double noise = 0.0;
  unsigned threads = 0;
  bool verbose = false;
};

void setup_logging(bool verbose) {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("storyloom");
    l->set_pattern("[%l] %v");
    return l;
  }();
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
}

AppConfig load_app_config(const Options& o) {
  AppConfig cfg;
  if (!o.config.empty()) cfg = load_config(resolve_config_path(o.config, default_config_dir()));
  if (o.seed_set) cfg.run.seed = o.seed;
  if (!o.backend.empty()) {
    if (o.backend != "mock" && o.backend != "http") throw UsageError("--backend must be mock or http");
    cfg.backend.kind = o.backend;
  }
  if (!o.fixtures.empty()) cfg.backend.fixtures = o.fixtures;
  if (!o.templates.empty()) cfg.templates_dir = o.templates;
  validate(cfg.run);
  return cfg;
}

Backends build_backends(const AppConfig& cfg, const MockFixtures& extra = {}) {
  if (cfg.backend.kind == "http") {
    HttpOptions h;
    h.completion_url = cfg.backend.completion_url;
    h.model = cfg.backend.model;
    h.edit_model = cfg.backend.edit_model;
    h.scorer_url = cfg.backend.scorer_url;
    if (const char* key = std::getenv(cfg.backend.api_key_env.c_str())) h.api_key = key;
    h.timeout = std::chrono::milliseconds(cfg.backend.timeout_ms);
    h.retry.max_retries = cfg.backend.max_retries;
    h.context_limit = cfg.backend.context_limit;
    std::shared_ptr<Tokenizer> tok;
    if (cfg.backend.tokenizer == "pretoken") {
      tok = std::make_shared<PretokenTokenizer>();
    } else {
      tok = std::make_shared<WhitespaceTokenizer>();
    }
    return make_http_backends(h, tok);
  }
  MockFixtures fx;
  if (!cfg.backend.fixtures.empty()) fx = load_fixtures(cfg.backend.fixtures);
  fx.merge(extra);
  MockOptions mo;
  mo.seed = cfg.run.seed;
  mo.context_limit = cfg.backend.context_limit;
  return make_mock_backends(std::move(fx), mo);
}

RunResources build_resources(const AppConfig& cfg, Backends backends) {
  RunResources res;
  res.backends = std::move(backends);
  if (!cfg.templates_dir.empty()) res.templates.load_directory(cfg.templates_dir);
  if (!cfg.key_examples_path.empty()) res.key_examples = load_key_examples(cfg.key_examples_path);
  return res;
}

int premise_sources(const Options& o) {
  return (o.premise.empty() ? 0 : 1) + (o.premise_file.empty() ? 0 : 1) + (o.generate_premise ? 1 : 0);
}

Premise resolve_premise(const Options& o, const AppConfig& cfg, const RunResources& res) {
  if (premise_sources(o) != 1) {
    throw UsageError("exactly one of --premise, --premise-file or --generate-premise is required");
  }
  Premise p;
  if (!o.premise.empty()) {
    p.text = o.premise;
  } else if (!o.premise_file.empty()) {
    p.text = text::trim(read_file(o.premise_file));
  } else {
    p = generate_premise(*res.backends.lm, cfg.run.plan, res.templates);
  }
  validate_premise(p);
  return p;
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int total_tokens(const StoryArtifact& a) {
  int n = 0;
  for (const auto& p : a.state.passages) n += p.token_count;
  return n;
}

const char* status_of(const StoryArtifact& a) {
  switch (exit_code(a)) {
    case 0: return "ok";
    case 2: return "degraded";
    default: return "aborted";
  }
}

void write_story(const std::string& dir, const StoryArtifact& art, const RecordingLanguageModel* recorder) {
  write_file(path_in(dir, "story.json"), dump(artifact_document(art)));
  write_file(path_in(dir, "story.txt"), art.final_text.empty() ? story_text(art.state) + "\n" : art.final_text + "\n");
  if (recorder) write_file(path_in(dir, "prompts.json"), dump(prompts_document(recorder->records())));
}

// Runs one story with its own recorder so concurrent runs never share one.
StoryArtifact run_one(const Premise& premise, const RunConfig& cfg, RunResources res, bool dump_prompts,
                      std::shared_ptr<RecordingLanguageModel>* recorder_out,
                      const std::optional<Plan>& plan = std::nullopt) {
  std::shared_ptr<RecordingLanguageModel> recorder;
  if (dump_prompts) {
    recorder = std::make_shared<RecordingLanguageModel>(res.backends.lm);
    res.backends.lm = recorder;
  }
  if (recorder_out) *recorder_out = recorder;
  try {
    if (plan) return run_re3_with_plan(*plan, cfg, res);
    return run_story(premise, cfg, res);
  } catch (const RunAborted& e) {
    spdlog::error("run aborted: {}", e.what());
    return e.artifact();
  }
}

int cmd_plan(const Options& o, std::ostream& out) {
  const AppConfig cfg = load_app_config(o);
  RunResources res = build_resources(cfg, build_backends(cfg));
  std::shared_ptr<RecordingLanguageModel> recorder;
  if (o.dump_prompts) {
    recorder = std::make_shared<RecordingLanguageModel>(res.backends.lm);
    res.backends.lm = recorder;
  }
  const Premise premise = resolve_premise(o, cfg, res);
  PlanConfig pc = cfg.run.plan;
  pc.required_points = cfg.run.outline_points;
  pc.outline_depth = cfg.run.outline_depth;
  Plan plan;
  try {
    plan = generate_plan(*res.backends.lm, premise, pc, res.templates);
  } catch (const Error& e) {
    out << "plan: failed: " << e.what() << "\n";
    return kExitAborted;
  }
  write_file(path_in(o.output_dir, "plan.json"), dump(plan_document(plan)));
  write_file(path_in(o.output_dir, "plan.txt"), plan.premise.text + "\n\n" + plan.setting + "\n\nCharacters:\n" +
                                                    render_characters(plan.characters) + "\n\nOutline:\n" +
                                                    render_outline(plan.outline));
  if (recorder) write_file(path_in(o.output_dir, "prompts.json"), dump(prompts_document(recorder->records())));
  out << "plan: " << plan.characters.size() << " characters, " << flatten_outline(plan).size()
      << " outline leaves -> " << path_in(o.output_dir, "plan.json") << "\n";
  return kExitOk;
}

int cmd_generate(const Options& o, std::ostream& out, bool rolling) {
  AppConfig cfg = load_app_config(o);
  if (rolling) cfg.run.mode = RunMode::rolling;
  RunResources res = build_resources(cfg, build_backends(cfg));
  std::optional<Plan> plan;
  Premise premise;
  if (!o.plan_path.empty()) {
    if (rolling) throw UsageError("--plan cannot be used with rolling");
    if (premise_sources(o) != 0) throw UsageError("--plan replaces the premise options");
    plan = plan_from_document(json::parse(read_file(o.plan_path)));
    premise = plan->premise;
  } else {
    premise = resolve_premise(o, cfg, res);
  }
  std::shared_ptr<RecordingLanguageModel> recorder;
  const StoryArtifact art = run_one(premise, cfg.run, res, o.dump_prompts, &recorder, plan);
  write_story(o.output_dir, art, recorder.get());
  out << (rolling ? "rolling" : "generate") << ": " << art.state.passages.size() << " passages, "
      << total_tokens(art) << " tokens, " << art.unresolved_flags() << " unresolved flags, " << status_of(art)
      << " -> " << path_in(o.output_dir, "story.json") << "\n";
  return exit_code(art);
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const AppConfig cfg = load_app_config(o);
  RunResources res = build_resources(cfg, build_backends(cfg));
  const Premise premise = resolve_premise(o, cfg, res);

  struct Outcome {
    std::string name;
    StoryArtifact art;
    std::shared_ptr<RecordingLanguageModel> recorder;
  };
  std::vector<std::future<Outcome>> runs;
  for (const auto& [name, rc] : ablation_configs(cfg.run)) {
    // Each run gets fresh backends: nothing is shared between threads.
    runs.push_back(std::async(std::launch::async, [&, name = name, rc = rc] {
      Outcome oc{name, {}, nullptr};
      RunResources own = res;
      own.backends = build_backends(cfg);
      oc.art = run_one(premise, rc, own, o.dump_prompts, &oc.recorder);
      return oc;
    }));
  }
  int code = kExitOk;
  for (auto& f : runs) {
    Outcome oc = f.get();
    write_story(path_in(o.output_dir, oc.name), oc.art, oc.recorder.get());
    out << "ablate " << oc.name << ": " << oc.art.state.passages.size() << " passages, " << total_tokens(oc.art)
        << " tokens, " << oc.art.unresolved_flags() << " unresolved flags, " << status_of(oc.art) << "\n";
    const int c = exit_code(oc.art);
    if (c == kExitAborted || (c == kExitDegraded && code == kExitOk)) code = c;
  }
  return code;
}

int cmd_eval(const Options& o, std::ostream& out) {
  if ((o.tuples.empty() ? 0 : 1) + (o.synthetic > 0 ? 1 : 0) != 1) {
    throw UsageError("exactly one of --tuples or --synthetic is required");
  }
  const AppConfig cfg = load_app_config(o);
  std::vector<EvalTuple> tuples;
  MockFixtures extra;
  if (o.synthetic > 0) {
    if (cfg.backend.kind != "mock") throw UsageError("--synthetic needs the mock backend");
    auto set = generate_synthetic_tuples(o.synthetic, cfg.run.seed);
    tuples = std::move(set.tuples);
    extra = std::move(set.fixtures);
    write_file(path_in(o.output_dir, "tuples.json"), dump(tuples_to_json(tuples)));
  } else {
    tuples = load_tuples(o.tuples);
  }
  Backends backends = build_backends(cfg, extra);
  if (o.noise > 0.0) {
    backends.entailment = std::make_shared<NoisyEntailment>(backends.entailment, cfg.run.seed, o.noise);
  }
  const RunResources res = build_resources(cfg, backends);
  StructuredOptions so;
  so.edit = cfg.run.edit;
  so.bank = res.key_examples;
  so.templates = res.templates;

  std::vector<EvalMethod> methods;
  std::string list = o.methods;
  for (auto& name : text::split_words(text::replace_all(list, ",", " "))) {
    methods.push_back(make_method(name, backends, so));
  }
  if (methods.empty()) throw UsageError("--methods is empty");
  const unsigned threads = o.threads > 0 ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  const EvalReport report = evaluate(tuples, methods, threads);
  const std::string table = format_table(report);
  write_file(path_in(o.output_dir, "eval.json"), dump(report_to_json(report)));
  write_file(path_in(o.output_dir, "eval.txt"), table);
  out << table;
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Plan-driven long story generation with reranking and consistency edits", "storyloom"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");
  Options o;

  auto common = [&](CLI::App* sub, bool premise, bool story) {
    sub->add_option("--config", o.config, "Config file, or a name looked up in " + default_config_dir());
    sub->add_option("--seed", o.seed, "Seed for the run and the mock backend")
        ->each([&](const std::string&) { o.seed_set = true; });
    sub->add_option("--output-dir", o.output_dir, "Directory for artifacts")->capture_default_str();
    sub->add_option("--backend", o.backend, "Backend profile: mock or http");
    sub->add_option("--fixtures", o.fixtures, "Mock fixture file");
    sub->add_option("--templates", o.templates, "Directory of prompt template overrides");
    sub->add_flag("-v,--verbose", o.verbose, "Debug logging on stderr");
    if (premise) {
      sub->add_option("--premise", o.premise, "Premise text");
      sub->add_option("--premise-file", o.premise_file, "File holding the premise")->check(CLI::ExistingFile);
      sub->add_flag("--generate-premise", o.generate_premise, "Ask the language model for a premise");
    }
    if (story) sub->add_flag("--dump-prompts", o.dump_prompts, "Write every generation request to prompts.json");
  };

  auto* plan = app.add_subcommand("plan", "Generate setting, characters and outline");
  common(plan, true, true);
  auto* generate = app.add_subcommand("generate", "Plan and write a full story");
  common(generate, true, true);
  generate->add_option("--plan", o.plan_path, "Use a plan.json from the plan command")->check(CLI::ExistingFile);
  auto* rolling = app.add_subcommand("rolling", "Rolling-window baseline story");
  common(rolling, true, true);
  auto* ablate = app.add_subcommand("ablate", "Run the full system and every ablation concurrently");
  common(ablate, true, true);
  auto* eval = app.add_subcommand("eval-edit", "Contradiction detection ROC-AUC over setup/story tuples");
  common(eval, false, false);
  eval->add_option("--tuples", o.tuples, "JSON array of {id, s, s_prime, t, t_prime}")->check(CLI::ExistingFile);
  eval->add_option("--synthetic", o.synthetic, "Generate this many synthetic tuples with oracle fixtures")
      ->check(CLI::PositiveNumber);
  eval->add_option("--methods", o.methods, "Comma-separated: entailment, entailment-dpr, structured")
      ->capture_default_str();
  eval->add_option("--noise", o.noise, "Spurious contradiction rate injected into entailment")
      ->check(CLI::Range(0.0, 1.0));
  eval->add_option("--threads", o.threads, "Worker threads (default: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    const auto& subs = app.get_subcommands();
    err << "\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  setup_logging(o.verbose);

  CLI::App* sub = app.get_subcommands().front();
  try {
    if (sub == plan) return cmd_plan(o, out);
    if (sub == generate) return cmd_generate(o, out, false);
    if (sub == rolling) return cmd_generate(o, out, true);
    if (sub == ablate) return cmd_ablate(o, out);
    return cmd_eval(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitAborted;
  }
}

}  // namespace loom
