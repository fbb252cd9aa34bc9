#pragma once

// Premise, setting, characters and outline generation.

#include <optional>
#include <string>
#include <vector>

#include "storyloom/backends.hpp"
#include "storyloom/story_model.hpp"
#include "storyloom/templates.hpp"

namespace loom {

struct NameFilterConfig {
  std::vector<std::string> banned_substrings = {
      "protagonist", "age", "gender", "name", "character", "unknown", "narrator", "antagonist"};
  int prefer_word_count = 2;
  int samples_per_round = 10;
  int max_rounds = 3;
};

struct PlanConfig {
  NameFilterConfig names;
  int num_characters = 3;
  int setting_retries = 5;
  int description_retries = 3;
  int outline_retries = 20;
  std::optional<int> required_points = 3;
  int outline_depth = 1;  // 2 expands every point into minor points
  int min_children = 2;
  double premise_temperature = 1.2;
  double plan_temperature = 0.8;
  int setting_max_tokens = 64;
  int name_max_tokens = 16;
  int description_max_tokens = 96;
  int outline_max_tokens = 256;
};

// Throws PreconditionError unless samples_per_round >= 1 and max_rounds >= 1.
void validate(const NameFilterConfig& cfg);

std::vector<Premise> generate_premises(LanguageModel& lm, int count, const PlanConfig& cfg,
                                       const TemplateSet& templates = default_templates());
Premise generate_premise(LanguageModel& lm, const PlanConfig& cfg,
                         const TemplateSet& templates = default_templates());

// Always one sentence starting with "The story is set in".
std::string generate_setting(LanguageModel& lm, const Premise& premise, const PlanConfig& cfg,
                             const TemplateSet& templates = default_templates());

// Applies the name filters to one round of samples and returns the chosen
// name, or nullopt when nothing survives. Names already used by `taken`
// are rejected too.
std::optional<std::string> select_character_name(const std::vector<std::string>& candidates,
                                                 const Premise& premise,
                                                 const NameFilterConfig& cfg,
                                                 const std::vector<std::string>& taken = {});

std::string sample_character_name(LanguageModel& lm, const Premise& premise, const std::string& setting,
                                  const std::vector<CharacterSheet>& prior, const PlanConfig& cfg,
                                  const TemplateSet& templates = default_templates());

// Returns "<name> is ...", at most three sentences.
std::string generate_character_description(LanguageModel& lm, const std::string& name,
                                           const Premise& premise, const std::string& setting,
                                           const std::vector<CharacterSheet>& prior,
                                           const PlanConfig& cfg,
                                           const TemplateSet& templates = default_templates());

// "1. A\n2. B" -> {"A", "B"}. Lines must be numbered 1, 2, ... in order with
// non-empty bodies; blank lines between items are allowed. Returns nullopt
// for anything else.
std::optional<std::vector<std::string>> parse_numbered_list(const std::string& raw);

// Inverse of parse_numbered_list.
std::string render_numbered_list(const std::vector<std::string>& points);

// Indented outline rendering: "1. x\n    a. y\n".
std::string render_outline(const std::vector<OutlineNode>& outline);

// "1. Name is ...\n2. ..." block used by outline prompts.
std::string render_characters(const std::vector<CharacterSheet>& characters);

std::vector<OutlineNode> generate_outline(LanguageModel& lm, const Plan& context,
                                          std::optional<int> required_points, const PlanConfig& cfg,
                                          const TemplateSet& templates = default_templates());

// Gives every leaf shallower than target_depth at least cfg.min_children
// children. Throws OutlineGenerationFailed naming the node on exhaustion.
Plan expand_outline(LanguageModel& lm, Plan plan, int target_depth, const PlanConfig& cfg,
                    const TemplateSet& templates = default_templates());

// Setting, characters and outline for a premise.
Plan generate_plan(LanguageModel& lm, const Premise& premise, const PlanConfig& cfg,
                   const TemplateSet& templates = default_templates());

}  // namespace loom
