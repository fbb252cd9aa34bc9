#include "storyloom/plan.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

#include <spdlog/spdlog.h>

#include "storyloom/errors.hpp"
#include "storyloom/text.hpp"

namespace loom {

void validate(const NameFilterConfig& cfg) {
  if (cfg.samples_per_round < 1) throw PreconditionError("samples_per_round must be >= 1");
  if (cfg.max_rounds < 1) throw PreconditionError("max_rounds must be >= 1");
}

namespace {

std::string first_paragraph(const std::string& s) {
  const auto paras = text::split_paragraphs(s);
  return paras.empty() ? std::string() : paras.front();
}

std::string first_line(const std::string& s) {
  const std::string t = text::trim(s);
  return text::trim(t.substr(0, t.find('\n')));
}

bool has_punctuation(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::ispunct(static_cast<unsigned char>(c)); });
}

std::string character_entries(const std::vector<CharacterSheet>& prior, const TemplateSet& templates) {
  std::string out;
  for (std::size_t i = 0; i < prior.size(); ++i) {
    out += templates.render("character_entry", {{"number", std::to_string(i + 1)},
                                                {"name", prior[i].name},
                                                {"description", prior[i].description}});
  }
  return out;
}

std::map<std::string, std::string> plan_vars(const Plan& plan) {
  return {{"premise", plan.premise.text},
          {"setting", plan.setting},
          {"characters", render_characters(plan.characters)},
          {"outline", render_outline(plan.outline)}};
}

}  // namespace

std::vector<Premise> generate_premises(LanguageModel& lm, int count, const PlanConfig& cfg,
                                       const TemplateSet& templates) {
  if (count < 1) throw PreconditionError("generate_premises: count must be >= 1");
  const std::string prompt = templates.raw("premise");
  GenParams params;
  params.max_tokens = 128;
  params.temperature = cfg.premise_temperature;
  params.num_samples = count;
  std::vector<Premise> out;
  int offset = 0;
  for (int attempt = 0; attempt <= cfg.setting_retries && static_cast<int>(out.size()) < count; ++attempt) {
    params.sample_offset = offset;
    params.num_samples = count - static_cast<int>(out.size());
    offset += params.num_samples;
    for (const auto& raw : lm.complete(prompt, params)) {
      std::string p = first_paragraph(raw);
      if (!p.empty()) out.push_back({std::move(p)});
    }
  }
  if (static_cast<int>(out.size()) < count) throw Error("premise generation returned empty text");
  return out;
}

Premise generate_premise(LanguageModel& lm, const PlanConfig& cfg, const TemplateSet& templates) {
  return generate_premises(lm, 1, cfg, templates).front();
}

std::string generate_setting(LanguageModel& lm, const Premise& premise, const PlanConfig& cfg,
                             const TemplateSet& templates) {
  validate_premise(premise);
  const std::string prompt = templates.render("setting", {{"premise", premise.text}});
  GenParams params;
  params.max_tokens = cfg.setting_max_tokens;
  params.temperature = cfg.plan_temperature;
  params.stop_sequences = {"\n\n"};
  for (int attempt = 0; attempt <= cfg.setting_retries; ++attempt) {
    params.sample_offset = attempt;
    const std::string body = text::trim(lm.complete(prompt, params).front());
    if (body.empty()) continue;
    const std::string sentence = text::first_sentences("The story is set in " + body, 1);
    return sentence;
  }
  throw SettingGenerationFailed("setting generation returned empty text " +
                                std::to_string(cfg.setting_retries + 1) + " times");
}

std::optional<std::string> select_character_name(const std::vector<std::string>& candidates,
                                                 const Premise& premise, const NameFilterConfig& cfg,
                                                 const std::vector<std::string>& taken) {
  std::vector<std::string> clean;
  for (const auto& raw : candidates) {
    const std::string name = first_line(raw);
    if (name.empty()) continue;
    bool banned = false;
    for (const auto& b : cfg.banned_substrings) banned = banned || text::contains_ci(name, b);
    if (banned || has_punctuation(name)) continue;
    clean.push_back(name);
  }
  std::map<std::string, int> counts;
  for (const auto& n : clean) ++counts[n];
  std::vector<std::string> survivors;
  for (const auto& n : clean) {
    if (counts[n] > 1 && premise.text.find(n) == std::string::npos) continue;
    if (std::find(taken.begin(), taken.end(), n) != taken.end()) continue;
    survivors.push_back(n);
  }
  if (survivors.empty()) return std::nullopt;
  for (const auto& n : survivors) {
    if (static_cast<int>(text::split_words(n).size()) == cfg.prefer_word_count) return n;
  }
  return survivors.front();
}

std::string sample_character_name(LanguageModel& lm, const Premise& premise, const std::string& setting,
                                  const std::vector<CharacterSheet>& prior, const PlanConfig& cfg,
                                  const TemplateSet& templates) {
  validate(cfg.names);
  const std::string prompt = templates.render(
      "character_name", {{"premise", premise.text},
                         {"setting", setting},
                         {"characters", character_entries(prior, templates)},
                         {"number", std::to_string(prior.size() + 1)}});
  std::vector<std::string> taken;
  for (const auto& c : prior) taken.push_back(c.name);

  GenParams params;
  params.max_tokens = cfg.name_max_tokens;
  params.temperature = cfg.plan_temperature;
  params.num_samples = cfg.names.samples_per_round;
  params.stop_sequences = {"\n"};
  for (int round = 0; round < cfg.names.max_rounds; ++round) {
    params.sample_offset = round * cfg.names.samples_per_round;
    if (auto name = select_character_name(lm.complete(prompt, params), premise, cfg.names, taken)) {
      return *name;
    }
    spdlog::debug("name round {} produced no usable name", round);
  }
  throw NameSamplingExhausted("no character name survived filtering after " +
                              std::to_string(cfg.names.max_rounds) + " rounds");
}

std::string generate_character_description(LanguageModel& lm, const std::string& name,
                                           const Premise& premise, const std::string& setting,
                                           const std::vector<CharacterSheet>& prior,
                                           const PlanConfig& cfg, const TemplateSet& templates) {
  if (text::trim(name).empty() || name.find('\n') != std::string::npos) {
    throw PreconditionError("character name must be a non-empty single line");
  }
  const std::string prompt = templates.render(
      "character_description", {{"premise", premise.text},
                                {"setting", setting},
                                {"characters", character_entries(prior, templates)},
                                {"number", std::to_string(prior.size() + 1)},
                                {"name", name}});
  GenParams params;
  params.max_tokens = cfg.description_max_tokens;
  params.temperature = cfg.plan_temperature;
  params.stop_sequences = {"\n\n"};
  for (int attempt = 0; attempt <= cfg.description_retries; ++attempt) {
    params.sample_offset = attempt;
    const std::string body = text::trim(lm.complete(prompt, params).front());
    if (body.empty()) continue;
    return text::first_sentences(name + " is " + body, 3);
  }
  throw DescriptionGenerationFailed("no description generated for " + name);
}

std::optional<std::vector<std::string>> parse_numbered_list(const std::string& raw) {
  static const std::regex item(R"(^(\d+)\.\s*(.*)$)");
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(raw)) {
    const std::string t = text::trim(line);
    if (t.empty()) continue;
    std::smatch m;
    if (!std::regex_match(t, m, item)) return std::nullopt;
    if (std::stoul(m[1].str()) != out.size() + 1) return std::nullopt;
    std::string body = text::trim(m[2].str());
    if (body.empty()) return std::nullopt;
    out.push_back(std::move(body));
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::string render_numbered_list(const std::vector<std::string>& points) {
  std::string out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + points[i];
  }
  return out;
}

namespace {

void render_nodes(const std::vector<OutlineNode>& nodes, int depth, std::string& out) {
  for (const auto& n : nodes) {
    const std::string& label = n.label;
    const auto dot = label.rfind('.');
    const std::string own = dot == std::string::npos ? label : label.substr(dot + 1);
    out += std::string(static_cast<std::size_t>(4 * depth), ' ') + own + ". " + n.text + "\n";
    render_nodes(n.children, depth + 1, out);
  }
}

}  // namespace

std::string render_outline(const std::vector<OutlineNode>& outline) {
  std::string out;
  render_nodes(outline, 0, out);
  if (!out.empty()) out.pop_back();
  return out;
}

std::string render_characters(const std::vector<CharacterSheet>& characters) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < characters.size(); ++i) {
    lines.push_back(std::to_string(i + 1) + ". " + characters[i].description);
  }
  return text::join(lines, "\n");
}

std::vector<OutlineNode> generate_outline(LanguageModel& lm, const Plan& context,
                                          std::optional<int> required_points, const PlanConfig& cfg,
                                          const TemplateSet& templates) {
  if (context.premise.text.empty() || context.setting.empty() || context.characters.empty()) {
    throw PreconditionError("generate_outline needs a premise, setting and characters");
  }
  const std::string prompt = templates.render("outline", plan_vars(context));
  GenParams params;
  params.max_tokens = cfg.outline_max_tokens;
  params.temperature = cfg.plan_temperature;
  for (int attempt = 0; attempt < cfg.outline_retries; ++attempt) {
    params.sample_offset = attempt;
    const auto points = parse_numbered_list("1." + lm.complete(prompt, params).front());
    if (!points) continue;
    if (required_points && static_cast<int>(points->size()) != *required_points) {
      spdlog::debug("outline attempt {} had {} points", attempt, points->size());
      continue;
    }
    std::vector<OutlineNode> outline;
    for (const auto& p : *points) outline.push_back({p, "", {}});
    relabel(outline);
    return outline;
  }
  throw OutlineGenerationFailed("no acceptable outline after " + std::to_string(cfg.outline_retries) +
                                " attempts");
}

namespace {

void expand_level(LanguageModel& lm, const Plan& snapshot, std::vector<OutlineNode>& nodes, int depth,
                  int target_depth, const PlanConfig& cfg, const TemplateSet& templates) {
  for (auto& node : nodes) {
    if (!node.is_leaf()) {
      expand_level(lm, snapshot, node.children, depth + 1, target_depth, cfg, templates);
      continue;
    }
    if (depth >= target_depth) continue;
    auto vars = plan_vars(snapshot);
    vars["point"] = node.text;
    const std::string prompt = templates.render("outline_expand", vars);
    GenParams params;
    params.max_tokens = cfg.outline_max_tokens;
    params.temperature = cfg.plan_temperature;
    bool done = false;
    for (int attempt = 0; attempt < cfg.outline_retries && !done; ++attempt) {
      params.sample_offset = attempt;
      const auto points = parse_numbered_list("1." + lm.complete(prompt, params).front());
      if (!points || static_cast<int>(points->size()) < cfg.min_children) continue;
      for (const auto& p : *points) node.children.push_back({p, "", {}});
      done = true;
    }
    if (!done) throw OutlineGenerationFailed("could not expand outline node " + node.label);
    if (depth + 1 < target_depth) {
      expand_level(lm, snapshot, node.children, depth + 1, target_depth, cfg, templates);
    }
  }
}

}  // namespace

Plan expand_outline(LanguageModel& lm, Plan plan, int target_depth, const PlanConfig& cfg,
                    const TemplateSet& templates) {
  if (plan.outline.empty()) throw PreconditionError("expand_outline: empty outline");
  if (target_depth < outline_depth(plan.outline)) {
    throw PreconditionError("expand_outline: target depth below current depth");
  }
  const Plan snapshot = plan;
  expand_level(lm, snapshot, plan.outline, 1, target_depth, cfg, templates);
  relabel(plan.outline);
  return plan;
}

Plan generate_plan(LanguageModel& lm, const Premise& premise, const PlanConfig& cfg,
                   const TemplateSet& templates) {
  validate_premise(premise);
  Plan plan;
  plan.premise = premise;
  plan.setting = generate_setting(lm, premise, cfg, templates);
  for (int i = 0; i < cfg.num_characters; ++i) {
    std::string name;
    try {
      name = sample_character_name(lm, premise, plan.setting, plan.characters, cfg, templates);
    } catch (const NameSamplingExhausted&) {
      if (plan.characters.empty()) throw;
      spdlog::info("stopping at {} characters: name sampling exhausted", plan.characters.size());
      break;
    }
    std::string description =
        generate_character_description(lm, name, premise, plan.setting, plan.characters, cfg, templates);
    plan.characters.push_back({name, std::move(description), 0});
  }
  plan.outline = generate_outline(lm, plan, cfg.required_points, cfg, templates);
  if (cfg.outline_depth > 1) plan = expand_outline(lm, std::move(plan), cfg.outline_depth, cfg, templates);
  validate_plan(plan, std::max(cfg.outline_depth, kDefaultMaxOutlineDepth));
  return plan;
}

}  // namespace loom
