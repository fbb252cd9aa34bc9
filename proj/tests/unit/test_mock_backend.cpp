#include <gtest/gtest.h>

#include <cmath>

#include "scenarios.hpp"
#include "storyloom/draft.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/mock_backend.hpp"
#include "storyloom/templates.hpp"
#include "storyloom/text.hpp"

using namespace loom;

namespace {

GenParams samples(int n, int max_tokens = 64) {
  GenParams p;
  p.num_samples = n;
  p.max_tokens = max_tokens;
  return p;
}

const std::string kStoryPrompt =
    "Relevant Context:\nNora Vale is a cartographer.\nTomas Vale is her brother.\n\n"
    "The story is written in third person.\n\nIn the upcoming passage, Nora finds a map.\n\n"
    "Full text below:\nNora opened the drawer.";

}  // namespace

TEST(MockFixtures, ParseAndRoundTrip) {
  const std::string content =
      "# comment line\n"
      "\n"
      "complete\tHello\tWorld\\n!\n"
      "complete\tHello\tAgain\n"
      "insert\tThe End.\t*\tAnd so it ended.\n"
      "edit\tEdit so that: x\tfriend\tmother\n"
      "entail\tA\tB\t0.1\t0.2\t0.7\n"
      "qa\tWhat is Nora's job?\t*\tcartographer\t0.9\n"
      "coherence\tlantern\t0.25\n"
      "relevance\tmap\t0.5\n"
      "nonperson\tPort Alder\n";
  const MockFixtures fx = parse_fixtures(content);
  ASSERT_EQ(fx.complete.size(), 1u);
  EXPECT_EQ(fx.complete[0].responses, (std::vector<std::string>{"World\n!", "Again"}));
  EXPECT_EQ(fx.insert.at(0).bridge, "And so it ended.");
  EXPECT_EQ(fx.edit.at(0).replace, "mother");
  EXPECT_DOUBLE_EQ(fx.entail.at({"A", "B"}).p_contradict, 0.7);
  EXPECT_DOUBLE_EQ(fx.qa.at(0).confidence, 0.9);
  EXPECT_DOUBLE_EQ(fx.coherence.at(0).probability, 0.25);
  EXPECT_TRUE(fx.non_person.contains("Port Alder"));

  const MockFixtures again = parse_fixtures(fx.to_text());
  EXPECT_EQ(again.to_text(), fx.to_text());
}

TEST(MockFixtures, ErrorsNameTheLine) {
  auto message = [](const std::string& content) {
    try {
      parse_fixtures(content);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("complete\tonly-two\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("# ok\nentail\tA\tB\t0.5\t0.5\t0.5\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("qa\tq\t*\ta\t1.5\n").find("bad probability"), std::string::npos);
  EXPECT_NE(message("bogus\tx\n").find("unknown record"), std::string::npos);
  EXPECT_THROW(load_fixtures("/nonexistent/fixtures.tsv"), ConfigError);
}

TEST(MockFixtures, MergeAppendsAndOverrides) {
  MockFixtures a, b;
  a.add_completion("x", "1");
  a.entail[{"p", "h"}] = {1.0, 0.0, 0.0};
  b.add_completion("x", "2");
  b.entail[{"p", "h"}] = {0.0, 0.0, 1.0};
  a.merge(b);
  EXPECT_EQ(a.complete.at(0).responses, (std::vector<std::string>{"1", "2"}));
  EXPECT_DOUBLE_EQ(a.entail.at({"p", "h"}).p_contradict, 1.0);
}

TEST(MockBackend, LongestMatchWinsAndResponsesCycle) {
  MockFixtures fx;
  fx.add_completion("story", "short rule");
  fx.add_completion("long story prompt", "A");
  fx.add_completion("long story prompt", "B");
  MockBackend mock(fx);
  EXPECT_EQ(mock.complete("a long story prompt here", samples(3)), (std::vector<std::string>{"A", "B", "A"}));
  GenParams offset = samples(2);
  offset.sample_offset = 1;
  EXPECT_EQ(mock.complete("a long story prompt here", offset), (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(mock.complete("just a story", samples(1)).front(), "short rule");
}

TEST(MockBackend, StopsAndTokenLimit) {
  MockFixtures fx;
  fx.add_completion("cue", "one two three\nfour five");
  MockBackend mock(fx);
  GenParams p = samples(1, 2);
  EXPECT_EQ(mock.complete("cue", p).front(), "one two");
  p.max_tokens = 10;
  p.stop_sequences = {"\n"};
  EXPECT_EQ(mock.complete("cue", p).front(), "one two three");
}

TEST(MockBackend, SynthesisIsAPureFunctionOfPromptSampleAndSeed) {
  MockBackend a({}, MockOptions{1});
  MockBackend b({}, MockOptions{1});
  MockBackend c({}, MockOptions{2});
  const auto pa = a.complete(kStoryPrompt, samples(4, 256));
  EXPECT_EQ(pa, b.complete(kStoryPrompt, samples(4, 256)));
  EXPECT_NE(pa, c.complete(kStoryPrompt, samples(4, 256)));
  WhitespaceTokenizer tok;
  for (const auto& s : pa) EXPECT_LE(tok.count_tokens(s), 256);
  // Samples differ from each other and honour the offset.
  EXPECT_NE(pa[0], pa[1]);
  GenParams shifted = samples(2, 256);
  shifted.sample_offset = 2;
  EXPECT_EQ(a.complete(kStoryPrompt, shifted), (std::vector<std::string>{pa[2], pa[3]}));
}

TEST(MockBackend, SynthesizedPassagesUseCharactersFromThePrompt) {
  MockBackend mock({}, MockOptions{4});
  const auto outs = mock.complete(kStoryPrompt, samples(6, 200));
  int mentioning = 0;
  for (const auto& s : outs) mentioning += (s.find("Nora") != std::string::npos || s.find("Tomas") != std::string::npos);
  EXPECT_GE(mentioning, 5);
}

TEST(MockBackend, RecognizesPlanningPrompts) {
  MockBackend mock({}, MockOptions{3});
  const TemplateSet& t = default_templates();
  const std::string setting =
      mock.complete(t.render("setting", {{"premise", "A premise."}}), samples(1)).front();
  EXPECT_FALSE(text::trim(setting).empty());
  const std::string premise = mock.complete(t.raw("premise"), samples(1, 96)).front();
  EXPECT_FALSE(text::trim(premise).empty());
}

TEST(MockBackend, EntailmentDefaults) {
  MockFixtures fx;
  fx.entail[{"A", "B"}] = {0.1, 0.1, 0.8};
  MockBackend mock(fx);
  EXPECT_DOUBLE_EQ(mock.entail("A", "B").p_contradict, 0.8);
  EXPECT_DOUBLE_EQ(mock.entail("B", "A").p_neutral, 0.92);
  EXPECT_DOUBLE_EQ(mock.entail("Same.", " Same. ").p_entail, 0.94);
  EXPECT_THROW(mock.entail("", "x"), PreconditionError);
}

TEST(MockBackend, QuestionAnswering) {
  MockFixtures fx;
  fx.qa.push_back({"What is Nora's job?", "map", "cartographer", 0.8});
  fx.qa.push_back({"What is Nora's age?", "*", "thirty", 0.6});
  MockBackend mock(fx);
  EXPECT_EQ(mock.answer("What is Nora's job?", "She drew a map.").answer, "cartographer");
  EXPECT_EQ(mock.answer("What is Nora's job?", "She sang.").answer, "");
  EXPECT_DOUBLE_EQ(mock.answer(" What is Nora's age? ", "anything").confidence, 0.6);
  EXPECT_THROW(mock.answer("q", " "), PreconditionError);
}

TEST(MockBackend, NamedEntities) {
  MockFixtures fx;
  fx.non_person.insert("Port Alder");
  MockBackend mock(fx);
  const auto ents = mock.detect_entities(
      "At dawn Nora Vale walked to Port Alder. She met Tomas's friend Edith Marsh there. I waved. The sun rose.");
  std::vector<std::string> names;
  for (const auto& e : ents) names.push_back(e.name);
  EXPECT_NE(std::find(names.begin(), names.end(), "Nora Vale"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "Edith Marsh"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "Tomas"), names.end());
  EXPECT_EQ(std::find(names.begin(), names.end(), "I"), names.end());
  EXPECT_EQ(std::find(names.begin(), names.end(), "The"), names.end());
  // A capitalized run that opens a sentence is not taken as a name.
  EXPECT_EQ(std::find(names.begin(), names.end(), "At"), names.end());
  EXPECT_TRUE(mock.detect_entities("Hugo Brandt slept.").empty());
  for (const auto& e : ents) {
    if (e.name == "Port Alder") EXPECT_FALSE(e.is_person);
  }
}

TEST(MockBackend, EmbeddingsAreUnitLengthAndStable) {
  MockBackend mock;
  const auto v = mock.embed({"Nora drew a map", "nora DREW a map!", "The storm broke"});
  double norm = 0.0;
  for (float x : v[0]) norm += static_cast<double>(x) * x;
  EXPECT_NEAR(norm, 1.0, 1e-6);
  EXPECT_NEAR(relevance(v[0], v[1]), 1.0, 1e-6);
  EXPECT_LT(relevance(v[0], v[2]), 0.5);
  EXPECT_THROW(mock.embed({}), PreconditionError);
}

TEST(MockBackend, ScorersStayInRangeAndHonourFixtures) {
  MockFixtures fx;
  fx.coherence.push_back({"lantern", 0.0});
  fx.relevance.push_back({"map", 1.0});
  MockBackend mock(fx, MockOptions{9});
  for (int i = 0; i < 50; ++i) {
    const std::string c = "continuation number " + std::to_string(i);
    const double p = mock.coherence("prefix", c);
    EXPECT_GE(p, 0.2);
    EXPECT_LE(p, 0.95);
    EXPECT_DOUBLE_EQ(p, mock.coherence("prefix", c));
  }
  EXPECT_DOUBLE_EQ(mock.coherence("x", "a lantern"), 0.0);
  EXPECT_DOUBLE_EQ(mock.relevance("x", "the map"), 1.0);
}

TEST(MockBackend, EditAndInsert) {
  MockFixtures fx;
  fx.edit.push_back({"Edit so that: Beth is Julie's mother.", "friend", "mother"});
  fx.insert.push_back({"The End.", "harbor", "The boats came home."});
  MockBackend mock(fx);
  EXPECT_EQ(mock.edit("Beth was Julie's friend.", "Edit so that: Beth is Julie's mother."),
            "Beth was Julie's mother.");
  EXPECT_EQ(mock.edit("unchanged", "Edit so that: other"), "unchanged");
  EXPECT_THROW(mock.edit(" ", "x"), PreconditionError);
  EXPECT_EQ(mock.insert("Fog over the harbor.", "The End.", samples(1)), "The boats came home.");
  const std::string bridge = mock.insert("Nora Vale sat by the fire.", "The End.", samples(1, 256));
  EXPECT_EQ(bridge.find("The End."), std::string::npos);
  EXPECT_FALSE(bridge.empty());
  EXPECT_THROW(mock.insert("  ", "The End.", samples(1)), PreconditionError);
}

TEST(MockBackend, BundleSharesOneMock) {
  const Backends b = make_mock_backends();
  EXPECT_NO_THROW(b.require_all());
  EXPECT_EQ(static_cast<void*>(dynamic_cast<MockBackend*>(b.lm.get())),
            static_cast<void*>(dynamic_cast<MockBackend*>(b.scorer.get())));
}

TEST(MockBackend, ShippedExampleFixturesLoad) {
  const MockFixtures fx = load_fixtures(support::source_dir() + "/data/fixtures/example.tsv");
  EXPECT_EQ(fx.complete.size(), 2u);
  EXPECT_EQ(fx.entail.size(), 1u);
  EXPECT_TRUE(fx.non_person.contains("Port Alder"));
  MockBackend mock(fx);
  EXPECT_DOUBLE_EQ(mock.entail("Beth's role is mother.", "Beth's role is friend.").p_contradict, 0.90);
}
