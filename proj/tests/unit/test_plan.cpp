#include <gtest/gtest.h>

#include <random>

#include "scenarios.hpp"
#include "scripted.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/mock_backend.hpp"
#include "storyloom/plan.hpp"
#include "storyloom/text.hpp"

using namespace loom;
using loom::support::LambdaLanguageModel;

namespace {

const Premise kPremise{"Cathy returns to her hometown after twenty years to sell her late father's bakery."};

bool passes_name_rules(const std::string& name, const std::vector<std::string>& round, const Premise& premise,
                       const NameFilterConfig& cfg) {
  for (const auto& b : cfg.banned_substrings) {
    if (text::contains_ci(name, b)) return false;
  }
  for (char c : name) {
    if (std::ispunct(static_cast<unsigned char>(c))) return false;
  }
  const auto copies = std::count(round.begin(), round.end(), name);
  return !(copies > 1 && premise.text.find(name) == std::string::npos);
}

}  // namespace

TEST(Names, BannedRoleWordsAreDropped) {
  EXPECT_EQ(select_character_name({"protagonist", "Diane Chambers"}, kPremise, {}), "Diane Chambers");
  EXPECT_EQ(select_character_name({"Main Character", "Unknown", "Gender female", "Ray"}, kPremise, {}), "Ray");
}

TEST(Names, RepeatedNamesSurviveOnlyWhenInThePremise) {
  EXPECT_EQ(select_character_name({"Cathy", "Cathy", "Bo"}, kPremise, {}), "Cathy");
  EXPECT_EQ(select_character_name({"Bob!", "Ann Lee", "Ann Lee"}, kPremise, {}), std::nullopt);
}

TEST(Names, PreferTwoWordNamesThenFirstSurvivor) {
  EXPECT_EQ(select_character_name({"Mara", "Owen Hart", "Lila Sato"}, kPremise, {}), "Owen Hart");
  EXPECT_EQ(select_character_name({"Mara", "Owen"}, kPremise, {}), "Mara");
  NameFilterConfig three;
  three.prefer_word_count = 3;
  EXPECT_EQ(select_character_name({"Owen Hart", "Ada May Lin"}, kPremise, three), "Ada May Lin");
}

TEST(Names, OnlyTheFirstLineCountsAndTakenNamesAreSkipped) {
  EXPECT_EQ(select_character_name({" Owen Hart\nCharacter Portrait"}, kPremise, {}), "Owen Hart");
  EXPECT_EQ(select_character_name({"Owen Hart", "Lila Sato"}, kPremise, {}, {"Owen Hart"}), "Lila Sato");
  EXPECT_EQ(select_character_name({"", "  "}, kPremise, {}), std::nullopt);
}

TEST(Names, RandomRoundsOnlyReturnNamesThatPassEveryRule) {
  const std::vector<std::string> pool = {"Cathy",      "Owen Hart", "Dr. Price", "the narrator", "Ann Lee",
                                         "Lila",       "Age 30",    "Bo",        "Mara Sato",    "Hugo",
                                         "Name: Bea",  "Ray Moss"};
  std::mt19937_64 rng(12);
  const NameFilterConfig cfg;
  for (int round = 0; round < 300; ++round) {
    std::vector<std::string> candidates;
    for (int i = 0; i < 10; ++i) candidates.push_back(pool[rng() % pool.size()]);
    const auto chosen = select_character_name(candidates, kPremise, cfg);
    bool any_valid = false;
    for (const auto& c : candidates) any_valid = any_valid || passes_name_rules(c, candidates, kPremise, cfg);
    ASSERT_EQ(chosen.has_value(), any_valid);
    if (chosen) {
      ASSERT_TRUE(passes_name_rules(*chosen, candidates, kPremise, cfg)) << *chosen;
      if (text::split_words(*chosen).size() != 2) {
        for (const auto& c : candidates) {
          ASSERT_FALSE(passes_name_rules(c, candidates, kPremise, cfg) && text::split_words(c).size() == 2);
        }
      }
    }
  }
}

TEST(Names, SamplingResamplesThenGivesUp) {
  int calls = 0;
  LambdaLanguageModel lm([&](const std::string&, const GenParams& p) {
    ++calls;
    std::vector<std::string> out(static_cast<std::size_t>(p.num_samples), "the protagonist");
    if (calls == 2) out[3] = "Ann Lee";
    return out;
  });
  PlanConfig cfg;
  EXPECT_EQ(sample_character_name(lm, kPremise, "The story is set in a town.", {}, cfg), "Ann Lee");
  EXPECT_EQ(calls, 2);

  LambdaLanguageModel junk([&](const std::string&, const GenParams& p) {
    return std::vector<std::string>(static_cast<std::size_t>(p.num_samples), "Age: 40");
  });
  EXPECT_THROW(sample_character_name(junk, kPremise, "The story is set in a town.", {}, cfg), NameSamplingExhausted);
  cfg.names.max_rounds = 0;
  EXPECT_THROW(sample_character_name(junk, kPremise, "x", {}, cfg), PreconditionError);
}

TEST(Setting, OneSentenceWithThePrefix) {
  MockFixtures fx;
  fx.add_completion("Describe the setting", " a harbor town. It rains a lot.");
  MockBackend mock(fx);
  EXPECT_EQ(generate_setting(mock, kPremise, {}), "The story is set in a harbor town.");

  MockBackend synth({}, MockOptions{5});
  EXPECT_TRUE(generate_setting(synth, kPremise, {}).starts_with("The story is set in"));
}

TEST(Setting, EmptyOutputsExhaustRetries) {
  int calls = 0;
  LambdaLanguageModel lm([&](const std::string&, const GenParams&) {
    ++calls;
    return std::vector<std::string>{"  "};
  });
  PlanConfig cfg;
  cfg.setting_retries = 5;
  EXPECT_THROW(generate_setting(lm, kPremise, cfg), SettingGenerationFailed);
  EXPECT_EQ(calls, 6);
}

TEST(Descriptions, AtMostThreeSentencesStartingWithTheName) {
  MockFixtures fx;
  fx.add_completion("Character Portrait: Owen Hart is", " a baker. He is kind. He is tall. He sings.");
  MockBackend mock(fx);
  EXPECT_EQ(generate_character_description(mock, "Owen Hart", kPremise, "The story is set in a town.", {}, {}),
            "Owen Hart is a baker. He is kind. He is tall.");
  EXPECT_THROW(generate_character_description(mock, "", kPremise, "x", {}, {}), PreconditionError);

  LambdaLanguageModel empty([](const std::string&, const GenParams&) { return std::vector<std::string>{""}; });
  EXPECT_THROW(generate_character_description(empty, "Owen", kPremise, "x", {}, {}), DescriptionGenerationFailed);
}

TEST(NumberedLists, ParseRules) {
  EXPECT_EQ(parse_numbered_list("1. A\n2. B"), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(parse_numbered_list("1. A\n\n2.   B  \n"), (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(parse_numbered_list("1. A\n3. B"), std::nullopt);
  EXPECT_EQ(parse_numbered_list("2. A"), std::nullopt);
  EXPECT_EQ(parse_numbered_list("1. A\nnot numbered"), std::nullopt);
  EXPECT_EQ(parse_numbered_list("1. "), std::nullopt);
  EXPECT_EQ(parse_numbered_list(""), std::nullopt);
}

TEST(NumberedLists, RenderRoundTrip) {
  std::mt19937_64 rng(21);
  const std::vector<std::string> words = {"Nora", "finds", "the", "map", "2.", "storm", "ends", "a."};
  for (int round = 0; round < 200; ++round) {
    std::vector<std::string> points;
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < n; ++i) {
      std::string p = words[rng() % 4];
      const int extra = std::uniform_int_distribution<int>(0, 6)(rng);
      for (int k = 0; k < extra; ++k) p += " " + words[rng() % words.size()];
      points.push_back(p);
    }
    ASSERT_EQ(parse_numbered_list(render_numbered_list(points)), points);
  }
}

TEST(Outline, RenderingIndentsMinorPoints) {
  Plan plan = support::three_point_plan();
  plan.outline[0].children = {{"x", "", {}}, {"y", "", {}}};
  relabel(plan.outline);
  const std::string r = render_outline(plan.outline);
  EXPECT_TRUE(r.starts_with("1. " + plan.outline[0].text + "\n    a. x\n    b. y\n2. "));
  EXPECT_EQ(render_characters({{"A", "A is one.", 0}, {"B", "B is two.", 0}}), "1. A is one.\n2. B is two.");
}

TEST(Outline, RequiredPointCountResamples) {
  MockFixtures fx;
  fx.add_completion("Outline the main plot points", " a\n2. b\n3. c\n4. d");
  fx.add_completion("Outline the main plot points", " a\n2. b\n3. c");
  MockBackend mock(fx);
  const Plan ctx = support::three_point_plan();
  const auto three = generate_outline(mock, ctx, 3, {});
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[2].label, "3");
  EXPECT_EQ(generate_outline(mock, ctx, std::nullopt, {}).size(), 4u);

  PlanConfig cfg;
  cfg.outline_retries = 4;
  EXPECT_THROW(generate_outline(mock, ctx, 5, cfg), OutlineGenerationFailed);
  Plan missing = ctx;
  missing.characters.clear();
  EXPECT_THROW(generate_outline(mock, missing, 3, {}), PreconditionError);
}

TEST(Outline, RequiredPointsAlwaysExactWithTheSynthesizer) {
  const Plan ctx = support::three_point_plan();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    MockBackend mock({}, MockOptions{seed});
    for (int k : {2, 3, 4}) {
      try {
        EXPECT_EQ(static_cast<int>(generate_outline(mock, ctx, k, {}).size()), k);
      } catch (const OutlineGenerationFailed&) {
        // Allowed outcome; anything else would be a bug.
      }
    }
  }
}

TEST(Outline, ExpandFourSubPointsEach) {
  MockFixtures fx;
  fx.add_completion("List the minor events", " a\n2. b\n3. c\n4. d");
  MockBackend mock(fx);
  const Plan plan = expand_outline(mock, support::three_point_plan(), 2, {});
  const auto leaves = flatten_outline(plan);
  EXPECT_EQ(leaves.size(), 12u);
  EXPECT_EQ(leaves[5].label, "2.b");
  EXPECT_NO_THROW(validate_plan(plan));
}

TEST(Outline, ExpandToCurrentDepthIsIdentity) {
  MockBackend mock;
  const Plan plan = support::three_point_plan();
  const Plan same = expand_outline(mock, plan, 1, {});
  EXPECT_EQ(render_outline(same.outline), render_outline(plan.outline));
  EXPECT_THROW(expand_outline(mock, expand_outline(mock, plan, 2, {}), 1, {}), PreconditionError);
}

TEST(Outline, SingleItemSubListsAreResampled) {
  MockFixtures fx;
  fx.add_completion("List the minor events", " only one");
  fx.add_completion("List the minor events", " first\n2. second");
  MockBackend mock(fx);
  const Plan plan = expand_outline(mock, support::three_point_plan(), 2, {});
  EXPECT_EQ(flatten_outline(plan).size(), 6u);

  MockFixtures bad;
  bad.add_completion("List the minor events", " only one");
  MockBackend stuck(bad);
  PlanConfig cfg;
  cfg.outline_retries = 3;
  try {
    expand_outline(stuck, support::three_point_plan(), 2, cfg);
    FAIL() << "expected OutlineGenerationFailed";
  } catch (const OutlineGenerationFailed& e) {
    EXPECT_NE(std::string(e.what()).find("node 1"), std::string::npos);
  }
}

TEST(Outline, SynthesizedExpansionGivesAtLeastSixLeaves) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MockBackend mock({}, MockOptions{seed});
    const Plan plan = expand_outline(mock, support::three_point_plan(), 2, {});
    EXPECT_GE(flatten_outline(plan).size(), 6u);
  }
}

TEST(PlanGeneration, DeterministicAndValid) {
  MockBackend a({}, MockOptions{7});
  MockBackend b({}, MockOptions{7});
  PlanConfig cfg;
  const Plan pa = generate_plan(a, kPremise, cfg);
  const Plan pb = generate_plan(b, kPremise, cfg);
  EXPECT_NO_THROW(validate_plan(pa));
  EXPECT_EQ(render_outline(pa.outline), render_outline(pb.outline));
  EXPECT_EQ(pa.setting, pb.setting);
  ASSERT_EQ(pa.characters.size(), 3u);
  for (const auto& c : pa.characters) {
    EXPECT_TRUE(c.description.starts_with(c.name + " is ")) << c.description;
    EXPECT_TRUE(passes_name_rules(c.name, {c.name}, kPremise, cfg.names)) << c.name;
  }
  EXPECT_NE(pa.characters[0].name, pa.characters[1].name);
  EXPECT_EQ(pa.outline.size(), 3u);

  cfg.outline_depth = 2;
  const Plan deep = generate_plan(a, kPremise, cfg);
  EXPECT_GE(flatten_outline(deep).size(), 6u);
}

TEST(PlanGeneration, PremisesAreSingleParagraphs) {
  MockBackend mock({}, MockOptions{2});
  const auto premises = generate_premises(mock, 4, {});
  ASSERT_EQ(premises.size(), 4u);
  for (const auto& p : premises) EXPECT_NO_THROW(validate_premise(p));
  EXPECT_THROW(generate_premises(mock, 0, {}), PreconditionError);
}
