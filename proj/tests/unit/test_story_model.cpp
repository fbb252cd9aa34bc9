#include <gtest/gtest.h>

#include <random>

#include "scenarios.hpp"
#include "storyloom/backends.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/story_model.hpp"

using namespace loom;

TEST(Premise, Validation) {
  EXPECT_NO_THROW(validate_premise({"A short premise.\nStill one paragraph."}));
  EXPECT_THROW(validate_premise({""}), PreconditionError);
  EXPECT_THROW(validate_premise({"  \n "}), PreconditionError);
  EXPECT_THROW(validate_premise({"One.\n\nTwo."}), PreconditionError);
}

TEST(Outline, ChildLabels) {
  EXPECT_EQ(child_label("", 0, 1), "1");
  EXPECT_EQ(child_label("", 11, 1), "12");
  EXPECT_EQ(child_label("2", 2, 2), "2.c");
  EXPECT_EQ(child_label("2", 25, 2), "2.z");
  EXPECT_EQ(child_label("2", 26, 2), "2.aa");
  EXPECT_EQ(child_label("1.a", 0, 3), "1.a.1");
}

TEST(Outline, RelabelAndValidate) {
  Plan plan = support::three_point_plan();
  plan.outline[1].children = {{"first minor", "x", {}}, {"second minor", "y", {}}};
  EXPECT_THROW(validate_plan(plan), PreconditionError);
  relabel(plan.outline);
  EXPECT_NO_THROW(validate_plan(plan));
  EXPECT_EQ(plan.outline[1].children[1].label, "2.b");
  EXPECT_EQ(outline_depth(plan.outline), 2);

  Plan bad_setting = plan;
  bad_setting.setting = "It is set somewhere.";
  EXPECT_THROW(validate_plan(bad_setting), PreconditionError);

  Plan too_deep = plan;
  too_deep.outline[1].children[0].children = {{"deeper", "", {}}};
  relabel(too_deep.outline);
  EXPECT_THROW(validate_plan(too_deep), PreconditionError);
  EXPECT_NO_THROW(validate_plan(too_deep, 3));

  Plan empty_text = plan;
  empty_text.outline[0].text = " ";
  EXPECT_THROW(validate_plan(empty_text), PreconditionError);

  Plan no_outline = plan;
  no_outline.outline.clear();
  EXPECT_THROW(validate_plan(no_outline), PreconditionError);

  Plan bad_name = plan;
  bad_name.characters[0].name = "Two\nLines";
  EXPECT_THROW(validate_plan(bad_name), PreconditionError);
}

TEST(Outline, FlattenDepthFirstWithAncestors) {
  Plan plan = support::three_point_plan();
  plan.outline[0].children = {{"1a", "", {}}, {"1b", "", {}}};
  plan.outline[2].children = {{"3a", "", {}}, {"3b", "", {}}, {"3c", "", {}}};
  relabel(plan.outline);
  const auto leaves = flatten_outline(plan);
  ASSERT_EQ(leaves.size(), 6u);
  std::vector<std::string> labels;
  for (const auto& l : leaves) labels.push_back(l.label);
  EXPECT_EQ(labels, (std::vector<std::string>{"1.a", "1.b", "2", "3.a", "3.b", "3.c"}));
  EXPECT_EQ(leaves[0].ancestor_texts, std::vector<std::string>{plan.outline[0].text});
  EXPECT_EQ(leaves[0].ancestor_labels, std::vector<std::string>{"1"});
  EXPECT_TRUE(leaves[2].ancestor_texts.empty());

  EXPECT_EQ(find_node(plan.outline, "3.b")->text, "3b");
  EXPECT_EQ(find_node(plan.outline, "2")->text, plan.outline[1].text);
  EXPECT_EQ(find_node(plan.outline, "4"), nullptr);
  EXPECT_EQ(find_node(plan.outline, "1.z"), nullptr);

  Plan empty;
  EXPECT_THROW(flatten_outline(empty), PreconditionError);
}

TEST(Outline, RandomTreesFlattenToEveryLeafOnce) {
  std::mt19937_64 rng(3);
  for (int round = 0; round < 100; ++round) {
    Plan plan = support::three_point_plan();
    plan.outline.clear();
    std::size_t expected = 0;
    const int majors = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < majors; ++i) {
      OutlineNode node{"major", "", {}};
      const int kids = std::uniform_int_distribution<int>(0, 4)(rng);
      for (int k = 0; k < kids; ++k) node.children.push_back({"minor", "", {}});
      expected += kids == 0 ? 1 : static_cast<std::size_t>(kids);
      plan.outline.push_back(node);
    }
    relabel(plan.outline);
    ASSERT_NO_THROW(validate_plan(plan));
    const auto leaves = flatten_outline(plan);
    ASSERT_EQ(leaves.size(), expected);
    for (const auto& l : leaves) ASSERT_NE(find_node(plan.outline, l.label), nullptr);
  }
}

TEST(StoryState, AppendAndText) {
  WhitespaceTokenizer tok;
  StoryState state;
  EXPECT_EQ(story_text(state), "");
  state.append("One two three.", "1", tok);
  state.append("Four five.", "1", tok);
  const Passage& third = state.append("Six.", "2", tok);
  EXPECT_EQ(third.index, 2);
  EXPECT_EQ(state.passages[0].token_count, 3);
  EXPECT_EQ(state.passages[1].token_count, 2);
  EXPECT_EQ(story_text(state), "One two three.\n\nFour five.\n\nSix.");
  EXPECT_EQ(story_text(state, 2), "Four five.\n\nSix.");
  EXPECT_EQ(story_text(state, 10), story_text(state));
  EXPECT_EQ(story_text(state, 0), "");
}
