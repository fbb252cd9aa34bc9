#include "storyloom/draft.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

void validate(const DraftConfig& cfg) {
  if (cfg.budget < 1 || cfg.reserved_generation < 1 || cfg.prompt_budget() < 1) {
    throw PreconditionError("draft budget must exceed the reserved generation length");
  }
  if (cfg.num_candidates < 1) throw PreconditionError("num_candidates must be >= 1");
  if (cfg.summary_passages < 0) throw PreconditionError("summary_passages must be >= 0");
  if (cfg.context_budget < 0) throw PreconditionError("context_budget must be >= 0");
}

const char* to_string(SegmentRole role) {
  switch (role) {
    case SegmentRole::header: return "header";
    case SegmentRole::relevant_context: return "relevant_context";
    case SegmentRole::narration_note: return "narration_note";
    case SegmentRole::previous_outline: return "previous_outline";
    case SegmentRole::recent_summary: return "recent_summary";
    case SegmentRole::current_outline: return "current_outline";
    case SegmentRole::autoregressive_context: return "autoregressive_context";
  }
  return "unknown";
}

std::string PromptSpec::render() const {
  std::vector<std::string> parts;
  parts.reserve(segments.size());
  for (const auto& s : segments) parts.push_back(s.text);
  return text::join(parts, "\n\n");
}

const PromptSegment* PromptSpec::find(SegmentRole role) const {
  for (const auto& s : segments) {
    if (s.role == role) return &s;
  }
  return nullptr;
}

std::vector<std::string> plan_context_items(const Plan& plan) {
  std::vector<std::string> items{plan.premise.text, plan.setting};
  for (const auto& c : plan.characters) {
    if (!c.description.empty()) items.push_back(c.description);
  }
  return items;
}

namespace {

// Item indices sorted by relevance to the latest passage, best first.
std::vector<std::size_t> rank_items(const std::vector<std::string>& items, const std::string& query,
                                    Embedder& embedder) {
  std::vector<std::string> texts{query};
  texts.insert(texts.end(), items.begin(), items.end());
  const auto vecs = embedder.embed(texts);
  std::vector<double> score(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) score[i] = relevance(vecs[0], vecs[i + 1]);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

std::vector<std::size_t> greedy_take(const std::vector<std::string>& items,
                                     const std::vector<std::size_t>& ranked, int budget,
                                     const Tokenizer& tokenizer) {
  std::vector<std::size_t> taken;
  int used = 0;
  for (std::size_t idx : ranked) {
    const int cost = tokenizer.count_tokens(items[idx]) + 1;
    if (used + cost > budget) break;
    used += cost;
    taken.push_back(idx);
  }
  return taken;
}

std::vector<std::string> in_plan_order(const std::vector<std::string>& items, std::vector<std::size_t> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(items[i]);
  return out;
}

const std::set<std::string>& function_words() {
  static const std::set<std::string> words = {
      "The", "A", "An", "They", "He", "She", "It", "His", "Her", "Their", "Its", "This", "These",
      "Those", "There", "When", "After", "Before", "As", "While", "One", "Some", "Everyone",
      "Finally", "Then", "In", "On", "At", "With", "Together", "Eventually", "Meanwhile", "Soon",
      "Both", "All", "Everything", "Nothing", "Someone", "Later", "Once", "During"};
  return words;
}

}  // namespace

std::vector<std::string> select_relevant_context(const Plan& plan, const StoryState& state,
                                                 int budget_tokens, const Backends& backends) {
  const auto items = plan_context_items(plan);
  if (state.passages.empty()) return items;
  const auto ranked = rank_items(items, state.passages.back().text, *backends.embedder);
  return in_plan_order(items, greedy_take(items, ranked, budget_tokens, *backends.tokenizer));
}

std::string summarize_recent(const StoryState& state, int k, LanguageModel& lm, const DraftConfig& cfg,
                             const TemplateSet& templates) {
  const int n = static_cast<int>(state.passages.size());
  if (k <= 0 || n < 2) return "";
  const int begin = std::max(0, n - 1 - k);
  std::vector<std::string> texts;
  for (int i = begin; i < n - 1; ++i) texts.push_back(state.passages[static_cast<std::size_t>(i)].text);

  GenParams params;
  params.max_tokens = cfg.summary_max_tokens;
  params.temperature = 0.0;
  params.stop_sequences = {"\n\n"};
  try {
    const std::string prompt = templates.render("summarize", {{"passages", text::join(texts, "\n\n")}});
    const std::string summary = text::trim(lm.complete(prompt, params).front());
    if (!summary.empty()) return summary;
    spdlog::warn("recent summary came back empty; using first sentences");
  } catch (const Error& e) {
    spdlog::warn("recent summary failed ({}); using first sentences", e.what());
  }
  std::vector<std::string> firsts;
  for (const auto& t : texts) firsts.push_back(text::first_sentences(t, 1));
  return text::join(firsts, " ");
}

namespace {

// Appends finished texts under `nodes`; returns true when every leaf below
// is finished. `next_leaf` walks leaves in depth-first order.
bool collect_finished(const std::vector<OutlineNode>& nodes, std::size_t current_leaf, std::size_t& next_leaf,
                      std::vector<std::string>& out) {
  bool all_done = true;
  for (const auto& node : nodes) {
    if (node.is_leaf()) {
      const bool done = next_leaf++ < current_leaf;
      if (done) {
        out.push_back(node.text);
      } else {
        all_done = false;
      }
      continue;
    }
    std::vector<std::string> inner;
    if (collect_finished(node.children, current_leaf, next_leaf, inner)) {
      out.push_back(node.text);
    } else {
      all_done = false;
      out.insert(out.end(), inner.begin(), inner.end());
    }
  }
  return all_done;
}

}  // namespace

std::string previous_outline_summary(const Plan& plan, std::size_t current_leaf) {
  std::vector<std::string> parts;
  std::size_t next = 0;
  collect_finished(plan.outline, current_leaf, next, parts);
  return text::join(parts, " ");
}

std::string lowercase_leading_function_word(const std::string& s) {
  const auto words = text::split_words(s);
  if (words.empty()) return s;
  std::string first = words.front();
  while (!first.empty() && std::ispunct(static_cast<unsigned char>(first.back()))) first.pop_back();
  if (!function_words().contains(first)) return s;
  std::string out = s;
  const auto pos = out.find_first_not_of(" \t\n");
  out[pos] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[pos])));
  return out;
}

namespace {

PromptSpec setup_prompt(const StoryState& state, const OutlineLeaf& leaf, const DraftConfig& cfg,
                        const TemplateSet& templates) {
  PromptSpec spec;
  spec.budget = cfg.budget;
  spec.reserved_generation = cfg.reserved_generation;
  spec.segments.push_back({SegmentRole::header, text::join(plan_context_items(state.plan), "\n")});
  spec.segments.push_back({SegmentRole::narration_note, templates.raw("narration_note")});
  spec.segments.push_back({SegmentRole::current_outline, templates.render("setup_outline", {{"point", leaf.text}})});
  spec.segments.push_back({SegmentRole::autoregressive_context, templates.raw("setup_tail")});
  return spec;
}

}  // namespace

PromptSpec compose_prompt(const StoryState& state, std::size_t leaf_index, const DraftConfig& cfg,
                          const Backends& backends, const TemplateSet& templates) {
  validate(cfg);
  const auto leaves = flatten_outline(state.plan);
  if (leaf_index >= leaves.size()) throw PreconditionError("compose_prompt: leaf index out of range");
  const OutlineLeaf& leaf = leaves[leaf_index];
  const Tokenizer& tok = *backends.tokenizer;
  const int limit = cfg.prompt_budget();

  if (state.passages.empty()) {
    PromptSpec spec = setup_prompt(state, leaf, cfg, templates);
    const int n = tok.count_tokens(spec.render());
    if (n > limit) {
      throw PromptBudgetError("opening prompt needs " + std::to_string(n) + " tokens, budget is " +
                              std::to_string(limit));
    }
    return spec;
  }

  const auto items = plan_context_items(state.plan);
  const auto ranked = rank_items(items, state.passages.back().text, *backends.embedder);
  std::vector<std::size_t> chosen = greedy_take(items, ranked, cfg.context_budget, tok);

  std::string point = lowercase_leading_function_word(leaf.text);
  if (leaf_index + 1 == leaves.size()) point += " " + templates.raw("final_outline_marker");
  const std::string previous = previous_outline_summary(state.plan, leaf_index);
  const std::string tail = state.passages.back().text;

  auto build = [&](const std::vector<std::size_t>& ctx, const std::string& recent, const std::string& tail_text) {
    PromptSpec spec;
    spec.budget = cfg.budget;
    spec.reserved_generation = cfg.reserved_generation;
    const auto ctx_items = in_plan_order(items, ctx);
    if (!ctx_items.empty()) {
      spec.segments.push_back({SegmentRole::relevant_context,
                               templates.raw("relevant_context_header") + "\n" + text::join(ctx_items, "\n")});
    }
    spec.segments.push_back({SegmentRole::narration_note, templates.raw("narration_note")});
    if (!previous.empty()) {
      spec.segments.push_back({SegmentRole::previous_outline,
                               templates.render("previous_outline", {{"summary", previous}})});
    }
    if (!recent.empty()) {
      spec.segments.push_back({SegmentRole::recent_summary, templates.render("recent_summary", {{"summary", recent}})});
    }
    spec.segments.push_back({SegmentRole::current_outline, templates.render("current_outline", {{"point", point}})});
    spec.segments.push_back({SegmentRole::autoregressive_context,
                             templates.render("autoregressive", {{"passage", tail_text}})});
    return spec;
  };

  int k = cfg.summary_passages;
  std::string recent = summarize_recent(state, k, *backends.lm, cfg, templates);
  PromptSpec spec = build(chosen, recent, tail);
  auto fits = [&](const PromptSpec& s) { return tok.count_tokens(s.render()) <= limit; };

  while (!fits(spec) && !chosen.empty()) {
    chosen.pop_back();  // lowest-ranked first
    spec = build(chosen, recent, tail);
  }
  while (!fits(spec) && k > 0) {
    --k;
    recent = summarize_recent(state, k, *backends.lm, cfg, templates);
    spec = build(chosen, recent, tail);
  }
  if (!fits(spec)) {
    const int without_tail = tok.count_tokens(build(chosen, recent, "").render());
    const int room = limit - without_tail;
    if (room < 1) {
      throw PromptBudgetError("fixed prompt segments need " + std::to_string(without_tail) +
                              " tokens, budget is " + std::to_string(limit));
    }
    // Separators can merge with the truncated text, so tighten until it fits.
    for (int b = room; b >= 1; --b) {
      spec = build(chosen, recent, tok.truncate_left(tail, b));
      if (fits(spec)) return spec;
    }
    throw PromptBudgetError("prompt does not fit the budget of " + std::to_string(limit) + " tokens");
  }
  return spec;
}

std::string compose_rolling_prompt(const StoryState& state, int prompt_budget, const Tokenizer& tokenizer,
                                   const TemplateSet& templates) {
  const std::string story = story_text(state);
  if (story.empty()) return state.plan.premise.text;
  const std::string head = templates.render("rolling", {{"premise", state.plan.premise.text}, {"story", ""}});
  const int room = prompt_budget - tokenizer.count_tokens(head);
  if (room < 1) throw PromptBudgetError("premise alone exceeds the rolling prompt budget");
  return templates.render("rolling", {{"premise", state.plan.premise.text},
                                      {"story", tokenizer.truncate_left(story, room)}});
}

std::vector<std::string> generate_candidates(LanguageModel& lm, const Tokenizer& tokenizer,
                                             const std::string& prompt, const DraftConfig& cfg,
                                             int sample_offset) {
  validate(cfg);
  const int n = tokenizer.count_tokens(prompt);
  if (n > cfg.prompt_budget()) {
    throw PromptBudgetError("prompt has " + std::to_string(n) + " tokens, budget is " +
                            std::to_string(cfg.prompt_budget()));
  }
  GenParams params;
  params.max_tokens = cfg.reserved_generation;
  params.temperature = cfg.temperature;
  params.num_samples = cfg.num_candidates;
  params.sample_offset = sample_offset;
  return lm.complete(prompt, params);
}

bool matches_known_character(const std::string& detected, const std::vector<std::string>& known) {
  const auto words = text::split_words(text::to_lower(detected));
  if (words.empty()) return false;
  for (const auto& name : known) {
    const auto name_words = text::split_words(text::to_lower(name));
    const bool subset = std::all_of(words.begin(), words.end(), [&](const std::string& w) {
      return std::find(name_words.begin(), name_words.end(), w) != name_words.end();
    });
    if (subset || text::contains_ci(name, detected)) return true;
  }
  return false;
}

std::vector<std::string> register_new_entities(const std::string& passage_text, int passage_index,
                                               StoryState& state, const Backends& backends,
                                               const DraftConfig& cfg, const TemplateSet& templates) {
  std::vector<std::string> added;
  if (text::trim(passage_text).empty()) return added;
  for (const auto& entity : backends.ner->detect_entities(passage_text)) {
    if (!entity.is_person) continue;
    std::vector<std::string> known;
    for (const auto& c : state.plan.characters) known.push_back(c.name);
    for (const auto& [name, dict] : state.kb) known.push_back(name);
    if (matches_known_character(entity.name, known)) continue;

    std::string description;
    try {
      GenParams params;
      params.max_tokens = cfg.description_max_tokens;
      params.temperature = cfg.temperature;
      params.stop_sequences = {"\n\n"};
      const std::string prompt =
          templates.render("new_character", {{"passage", passage_text}, {"name", entity.name}});
      const std::string body = text::trim(backends.lm->complete(prompt, params).front());
      if (!body.empty()) description = text::first_sentences(entity.name + " is " + body, 3);
    } catch (const Error& e) {
      spdlog::warn("description for new character {} failed: {}", entity.name, e.what());
    }
    state.plan.characters.push_back({entity.name, description, passage_index});
    state.kb[entity.name];
    added.push_back(entity.name);
  }
  return added;
}

}  // namespace loom
