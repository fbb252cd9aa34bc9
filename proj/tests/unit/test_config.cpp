#include <gtest/gtest.h>

#include <filesystem>

#include "scenarios.hpp"
#include "storyloom/config.hpp"
#include "storyloom/edit.hpp"
#include "storyloom/errors.hpp"
#include "storyloom/serialize.hpp"
#include "storyloom/templates.hpp"

using namespace loom;

TEST(Config, ShippedDefaultsMatchTheBuiltIns) {
  const AppConfig app = load_config(support::source_dir() + "/config/default.ini");
  EXPECT_EQ(json(app.run).dump(2), json(RunConfig{}).dump(2));
  EXPECT_EQ(app.backend.kind, "mock");
  EXPECT_TRUE(std::filesystem::is_directory(app.templates_dir)) << app.templates_dir;
  EXPECT_TRUE(std::filesystem::is_regular_file(app.key_examples_path)) << app.key_examples_path;
}

TEST(Config, EmptyTextGivesDefaults) {
  const AppConfig app = parse_config("");
  EXPECT_EQ(json(app.run).dump(), json(RunConfig{}).dump());
  EXPECT_TRUE(app.templates_dir.empty());
}

TEST(Config, ValuesAreParsed) {
  const AppConfig app = parse_config(
      "[run]\nmode = rolling\noutline_points = any\nadaptive = true\nseed = 9\n"
      "[filters]\nbanned_strings_soft = a|b\\nc\n[backend]\nkind = http\ntimeout_ms = 5\n");
  EXPECT_EQ(app.run.mode, RunMode::rolling);
  EXPECT_FALSE(app.run.outline_points.has_value());
  EXPECT_TRUE(app.run.adaptive);
  EXPECT_EQ(app.run.seed, 9u);
  EXPECT_EQ(app.run.filters.banned_strings_soft, (std::vector<std::string>{"a", "b\nc"}));
  EXPECT_EQ(app.backend.kind, "http");
  EXPECT_EQ(app.backend.timeout_ms, 5);
}

TEST(Config, MistakesAreReported) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[run]\npasages_per_leaf = 3\n").find("pasages_per_leaf"), std::string::npos);
  EXPECT_NE(message("[runn]\nseed = 1\n").find("runn"), std::string::npos);
  EXPECT_NE(message("[run]\npassages_per_leaf = many\n").find("passages_per_leaf"), std::string::npos);
  EXPECT_NE(message("[run]\nadaptive = maybe\n").find("adaptive"), std::string::npos);
  EXPECT_NE(message("[run]\nmax_context = 100\n"), "no error");
  EXPECT_NE(message("[backend]\nkind = carrier-pigeon\n"), "no error");
  EXPECT_THROW(load_config("/nonexistent/storyloom.ini"), ConfigError);
}

TEST(Config, NamesResolveInTheConfigDirectory) {
  const std::string dir = support::source_dir() + "/config";
  EXPECT_EQ(std::filesystem::path(resolve_config_path("default", dir)).filename(), "default.ini");
  const std::string full = dir + "/default.ini";
  EXPECT_EQ(resolve_config_path(full, "/elsewhere"), full);
}

TEST(Templates, ShippedFilesMatchTheBuiltIns) {
  TemplateSet loaded;
  loaded.load_directory(support::source_dir() + "/data/templates");
  const TemplateSet& builtin = default_templates();
  EXPECT_EQ(loaded.names(), builtin.names());
  for (const auto& name : builtin.names()) EXPECT_EQ(loaded.raw(name), builtin.raw(name)) << name;
}

TEST(Templates, RenderingAndErrors) {
  TemplateSet t;
  t.set("current_outline", "Hello {name}, {unknown}!");
  EXPECT_EQ(t.render("current_outline", {{"name", "Nora"}}), "Hello Nora, {unknown}!");
  EXPECT_THROW(t.set("greeting", "x"), ConfigError);
  EXPECT_THROW(t.raw("no-such-template"), ConfigError);
  EXPECT_THROW(t.load_directory("/nonexistent/templates"), ConfigError);
}

TEST(KeyExamples, ShippedFileCoversTheBuiltInBank) {
  const auto shipped = load_key_examples(support::source_dir() + "/data/key_examples.txt");
  for (const auto& ex : builtin_key_examples()) {
    const bool present = std::any_of(shipped.begin(), shipped.end(), [&](const KeyExample& s) {
      return s.character == ex.character && s.context == ex.context && s.lines == ex.lines;
    });
    EXPECT_TRUE(present) << ex.character;
  }
}
