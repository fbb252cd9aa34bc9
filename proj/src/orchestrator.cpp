#include "storyloom/orchestrator.hpp"

#include <spdlog/spdlog.h>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

const char* to_string(RunMode mode) {
  return mode == RunMode::rolling ? "rolling" : "recursive";
}

RunMode parse_run_mode(const std::string& s) {
  if (s == "recursive" || s == "re3") return RunMode::recursive;
  if (s == "rolling") return RunMode::rolling;
  throw ConfigError("unknown run mode '" + s + "' (expected recursive or rolling)");
}

void validate(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(cfg.continuation_tokens >= 1, "continuation_tokens must be >= 1");
  require(cfg.max_context > cfg.continuation_tokens, "max_context must exceed continuation_tokens");
  require(cfg.rolling_truncate >= 1, "rolling_truncate must be >= 1");
  require(cfg.rolling_truncate + cfg.continuation_tokens <= cfg.max_context,
          "rolling_truncate + continuation_tokens must not exceed max_context");
  require(cfg.rolling_total >= 1, "rolling_total must be >= 1");
  require(cfg.passages_per_leaf >= 1, "passages_per_leaf must be >= 1");
  require(cfg.min_passages_per_leaf >= 1, "min_passages_per_leaf must be >= 1");
  require(cfg.max_passages_per_leaf >= cfg.min_passages_per_leaf,
          "max_passages_per_leaf must be >= min_passages_per_leaf");
  require(!cfg.adaptive || cfg.alignment_threshold > 0.0, "alignment_threshold must be positive");
  require(!(cfg.adaptive && cfg.ablations.no_rerank), "adaptive mode needs reranking scores");
  require(!cfg.outline_points || *cfg.outline_points >= 1, "outline_points must be >= 1");
  require(cfg.outline_depth >= 1, "outline_depth must be >= 1");
  require(cfg.empty_retries >= 0, "empty_retries must be >= 0");
  validate(cfg.plan.names);
  validate(cfg.filters);
}

bool StoryArtifact::degraded() const {
  if (ending_fallback) return true;
  for (const auto& s : steps) {
    if (s.degraded) return true;
    for (const auto& f : s.flags) {
      if (!f.resolved) return true;
    }
  }
  return false;
}

int StoryArtifact::unresolved_flags() const {
  int n = 0;
  for (const auto& s : steps) {
    for (const auto& f : s.flags) n += f.resolved ? 0 : 1;
  }
  return n;
}

int exit_code(const StoryArtifact& artifact) {
  if (artifact.aborted) return 1;
  return artifact.degraded() ? 2 : 0;
}

bool outline_alignment_step(std::optional<double> prev_best_lp, double new_best_lp, double threshold) {
  if (!(threshold > 0.0)) throw PreconditionError("alignment threshold must be positive");
  if (!prev_best_lp) return false;
  return *prev_best_lp - new_best_lp > threshold;
}

Ending end_story(const StoryState& state, LanguageModel& lm, const Tokenizer& tokenizer, const RunConfig& cfg) {
  if (state.passages.empty()) throw PreconditionError("end_story needs at least one passage");
  const std::string story = story_text(state);
  const std::string prefix = tokenizer.truncate_left(story, cfg.max_context - cfg.continuation_tokens);
  Ending ending;
  try {
    GenParams params;
    params.max_tokens = cfg.continuation_tokens;
    params.temperature = cfg.draft.temperature;
    ending.bridge = text::trim(text::replace_all(lm.insert(prefix, kEndMarker, params), kEndMarker, ""));
  } catch (const Error& e) {
    spdlog::warn("ending insertion failed ({}); closing with the bare marker", e.what());
    ending.fallback = true;
    ending.bridge.clear();
  }
  ending.final_text = story;
  if (!ending.bridge.empty()) ending.final_text += kPassageSeparator + ending.bridge;
  ending.final_text += std::string(kPassageSeparator) + kEndMarker;
  return ending;
}

namespace {

struct Drafted {
  std::string text;
  StepLog log;
  std::optional<double> best_lp;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunResources& res) : cfg_(cfg), res_(res) {
    validate(cfg_);
    res_.backends.require_all();
    draft_ = cfg_.draft;
    draft_.budget = cfg_.max_context;
    draft_.reserved_generation = cfg_.continuation_tokens;
    art_.config = cfg_;
  }

  StoryArtifact recursive(const Plan& plan) {
    return guarded([&] {
      art_.state.plan = plan;
      init_kb();
      const auto leaves = flatten_outline(art_.state.plan);
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        art_.state.current_leaf = i;
        if (cfg_.adaptive) {
          adaptive_leaf(i, leaves[i]);
        } else {
          for (int p = 0; p < cfg_.passages_per_leaf; ++p) accept(recursive_draft(i, leaves[i]));
        }
      }
      finish();
    });
  }

  StoryArtifact planless(const Premise& premise) {
    return guarded([&] {
      validate_premise(premise);
      art_.state.plan.premise = premise;
      int generated = 0;
      while (generated < cfg_.rolling_total) {
        const std::string prompt =
            compose_rolling_prompt(art_.state, cfg_.rolling_truncate, *res_.backends.tokenizer, res_.templates);
        Drafted d = draft(prompt, cfg_.rolling_truncate, premise.text, "");
        generated += accept(std::move(d));
      }
      finish();
    });
  }

 private:
  template <typename Body>
  StoryArtifact guarded(Body&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      art_.aborted = true;
      art_.error = e.what();
      spdlog::error("run aborted: {}", e.what());
      throw RunAborted(art_, e.what());
    }
    return std::move(art_);
  }

  void init_kb() {
    for (const auto& c : art_.state.plan.characters) art_.state.kb[c.name];
    if (!cfg_.ablations.no_edit) {
      seed_knowledge_base(art_.state, res_.key_examples, res_.backends, cfg_.edit, res_.templates);
    }
  }

  Drafted recursive_draft(std::size_t leaf_index, const OutlineLeaf& leaf) {
    const PromptSpec spec = compose_prompt(art_.state, leaf_index, draft_, res_.backends, res_.templates);
    return draft(spec.render(), draft_.prompt_budget(), leaf.text, leaf.label);
  }

  Drafted draft(const std::string& prompt, int budget, const std::string& outline_text, const std::string& section) {
    const Tokenizer& tok = *res_.backends.tokenizer;
    Drafted d;
    d.log.passage_index = static_cast<int>(art_.state.passages.size());
    d.log.section = section;
    d.log.prompt = prompt;
    d.log.prompt_tokens = tok.count_tokens(prompt);
    d.log.prompt_budget = budget;
    if (d.log.prompt_tokens > budget) {
      throw ContractViolation("composed prompt has " + std::to_string(d.log.prompt_tokens) +
                              " tokens, budget is " + std::to_string(budget));
    }
    const std::string previous = art_.state.passages.empty() ? "" : art_.state.passages.back().text;

    DraftConfig dc = draft_;
    if (cfg_.ablations.no_rerank) dc.num_candidates = 1;
    for (int attempt = 0; attempt <= cfg_.empty_retries; ++attempt) {
      const auto texts = generate_candidates(*res_.backends.lm, tok, prompt, dc, attempt * dc.num_candidates);
      d.log.candidates.clear();
      if (cfg_.ablations.no_rerank) {
        const FilterVerdict v = heuristic_filter(texts.front(), prompt, cfg_.filters);
        d.log.candidates.push_back({texts.front(), to_string(v.reason), v.detail, false, 0, 0, 0});
        d.log.chosen = 0;
        d.text = texts.front();
        d.best_lp.reset();
      } else {
        const RerankResult r =
            rerank(texts, prompt, previous, outline_text, *res_.backends.scorer, cfg_.filters, cfg_.weights);
        d.log.candidates.resize(texts.size());
        for (const auto& c : r.ranked) {
          d.log.candidates[c.index] = {c.text, to_string(c.verdict.reason), c.verdict.detail,
                                       c.scored, c.coherence_lp, c.relevance_lp, c.composite};
        }
        const Candidate& best = r.best_candidate();
        d.log.chosen = best.index;
        d.log.degraded = r.degraded;
        d.text = best.text;
        d.best_lp = best.composite;
      }
      if (!text::trim(d.text).empty()) return d;
      spdlog::debug("empty continuation at passage {}, resampling", d.log.passage_index);
    }
    throw Error("no non-empty continuation after " + std::to_string(cfg_.empty_retries + 1) + " attempts");
  }

  // Edits, appends and registers the drafted passage. Returns its token count.
  int accept(Drafted d) {
    std::string text = std::move(d.text);
    const int index = d.log.passage_index;
    if (!cfg_.ablations.no_edit) {
      const DetectResult found = detect(text, index, art_.state, res_.key_examples, res_.backends, cfg_.edit,
                                        DetectMode::boolean, res_.templates);
      for (const auto& flag : found.flags) {
        const CorrectionResult fix =
            correct(text, flag, *res_.backends.lm, *res_.backends.tokenizer, cfg_.edit, res_.templates);
        if (fix.resolved) text = fix.text;
        d.log.flags.push_back({flag.character, flag.key, flag.old_entry.value, flag.new_entry.value,
                               flag.p_contradict, fix.instruction, fix.resolved, fix.attempts});
      }
    }
    const Passage& p = art_.state.append(text, d.log.section, *res_.backends.tokenizer);
    if (!cfg_.ablations.no_plan || !cfg_.ablations.no_edit) {
      d.log.new_characters =
          register_new_entities(p.text, p.index, art_.state, res_.backends, draft_, res_.templates);
    }
    art_.steps.push_back(std::move(d.log));
    return p.token_count;
  }

  void adaptive_leaf(std::size_t leaf_index, const OutlineLeaf& leaf) {
    std::optional<double> prev;
    int count = 0;
    while (true) {
      Drafted d = recursive_draft(leaf_index, leaf);
      const double lp = *d.best_lp;
      if (count >= cfg_.min_passages_per_leaf && prev) {
        const bool advance = outline_alignment_step(prev, lp, cfg_.alignment_threshold);
        art_.alignment.push_back({leaf.label, *prev, lp, advance, false});
        if (advance) return;  // the weaker continuation is discarded
      }
      accept(std::move(d));
      prev = lp;
      if (++count >= cfg_.max_passages_per_leaf) {
        art_.alignment.push_back({leaf.label, lp, lp, true, true});
        return;
      }
    }
  }

  void finish() {
    const Ending e = end_story(art_.state, *res_.backends.lm, *res_.backends.tokenizer, cfg_);
    art_.ending = e.bridge;
    art_.final_text = e.final_text;
    art_.ending_fallback = e.fallback;
  }

  const RunConfig& cfg_;
  const RunResources& res_;
  DraftConfig draft_;
  StoryArtifact art_;
};

}  // namespace

StoryArtifact run_re3_with_plan(const Plan& plan, const RunConfig& cfg, const RunResources& res) {
  return Runner(cfg, res).recursive(plan);
}

StoryArtifact run_re3(const Premise& premise, const RunConfig& cfg, const RunResources& res) {
  if (cfg.ablations.no_plan) return Runner(cfg, res).planless(premise);
  Plan plan;
  try {
    validate(cfg);
    PlanConfig pc = cfg.plan;
    pc.required_points = cfg.outline_points;
    pc.outline_depth = cfg.outline_depth;
    plan = generate_plan(*res.backends.lm, premise, pc, res.templates);
  } catch (const std::exception& e) {
    StoryArtifact partial;
    partial.config = cfg;
    partial.state.plan.premise = premise;
    partial.aborted = true;
    partial.error = e.what();
    throw RunAborted(partial, e.what());
  }
  return run_re3_with_plan(plan, cfg, res);
}

StoryArtifact run_rolling(const Premise& premise, const RunConfig& cfg, const RunResources& res) {
  RunConfig rc = cfg;
  rc.mode = RunMode::rolling;
  rc.ablations = {true, true, true};
  rc.adaptive = false;
  return Runner(rc, res).planless(premise);
}

StoryArtifact run_story(const Premise& premise, const RunConfig& cfg, const RunResources& res) {
  return cfg.mode == RunMode::rolling ? run_rolling(premise, cfg, res) : run_re3(premise, cfg, res);
}

std::vector<std::pair<std::string, RunConfig>> ablation_configs(const RunConfig& base) {
  std::vector<std::pair<std::string, RunConfig>> out;
  RunConfig full = base;
  full.mode = RunMode::recursive;
  full.ablations = {};
  out.emplace_back("full", full);
  RunConfig c = full;
  c.ablations.no_plan = true;
  c.adaptive = false;
  out.emplace_back("no_plan", c);
  c = full;
  c.ablations.no_rerank = true;
  c.adaptive = false;
  out.emplace_back("no_rerank", c);
  c = full;
  c.ablations.no_edit = true;
  out.emplace_back("no_edit", c);
  c = full;
  c.mode = RunMode::rolling;
  out.emplace_back("rolling", c);
  return out;
}

}  // namespace loom
