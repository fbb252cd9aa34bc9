#include "storyloom/config.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "storyloom/errors.hpp"
#include "storyloom/serialize.hpp"
#include "storyloom/text.hpp"

namespace loom {

namespace {

using Setter = std::function<void(AppConfig&, const std::string&)>;

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto l = text::to_lower(v);
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto out = std::stoull(v, &used);
    if (used == v.size() && !v.starts_with('-')) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::vector<std::string> out;
  if (text::trim(v).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto bar = v.find('|', start);
    const auto item = text::unescape_line(text::trim(v.substr(start, bar - start)));
    if (!item.empty()) out.push_back(item);
    if (bar == std::string::npos) break;
    start = bar + 1;
  }
  return out;
}

#define INT_KEY(name, field) {name, [](AppConfig& c, const std::string& v) { c.field = to_int(name, v); }}
#define DBL_KEY(name, field) {name, [](AppConfig& c, const std::string& v) { c.field = to_double(name, v); }}
#define BOOL_KEY(name, field) {name, [](AppConfig& c, const std::string& v) { c.field = to_bool(name, v); }}
#define STR_KEY(name, field) {name, [](AppConfig& c, const std::string& v) { c.field = v; }}
#define LIST_KEY(name, field) {name, [](AppConfig& c, const std::string& v) { c.field = to_list(v); }}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.mode", [](AppConfig& c, const std::string& v) { c.run.mode = parse_run_mode(v); }},
      {"run.outline_points",
       [](AppConfig& c, const std::string& v) {
         c.run.outline_points = (v == "any" || v.empty()) ? std::nullopt
                                                          : std::optional<int>(to_int("run.outline_points", v));
       }},
      INT_KEY("run.outline_depth", run.outline_depth),
      INT_KEY("run.passages_per_leaf", run.passages_per_leaf),
      BOOL_KEY("run.adaptive", run.adaptive),
      INT_KEY("run.min_passages_per_leaf", run.min_passages_per_leaf),
      INT_KEY("run.max_passages_per_leaf", run.max_passages_per_leaf),
      DBL_KEY("run.alignment_threshold", run.alignment_threshold),
      INT_KEY("run.continuation_tokens", run.continuation_tokens),
      INT_KEY("run.max_context", run.max_context),
      INT_KEY("run.rolling_truncate", run.rolling_truncate),
      INT_KEY("run.rolling_total", run.rolling_total),
      INT_KEY("run.empty_retries", run.empty_retries),
      {"run.seed", [](AppConfig& c, const std::string& v) { c.run.seed = to_u64("run.seed", v); }},
      BOOL_KEY("ablations.no_plan", run.ablations.no_plan),
      BOOL_KEY("ablations.no_rerank", run.ablations.no_rerank),
      BOOL_KEY("ablations.no_edit", run.ablations.no_edit),

      INT_KEY("plan.num_characters", run.plan.num_characters),
      INT_KEY("plan.setting_retries", run.plan.setting_retries),
      INT_KEY("plan.description_retries", run.plan.description_retries),
      INT_KEY("plan.outline_retries", run.plan.outline_retries),
      INT_KEY("plan.min_children", run.plan.min_children),
      DBL_KEY("plan.premise_temperature", run.plan.premise_temperature),
      DBL_KEY("plan.plan_temperature", run.plan.plan_temperature),
      INT_KEY("plan.setting_max_tokens", run.plan.setting_max_tokens),
      INT_KEY("plan.name_max_tokens", run.plan.name_max_tokens),
      INT_KEY("plan.description_max_tokens", run.plan.description_max_tokens),
      INT_KEY("plan.outline_max_tokens", run.plan.outline_max_tokens),
      LIST_KEY("plan.name_banned_substrings", run.plan.names.banned_substrings),
      INT_KEY("plan.name_prefer_word_count", run.plan.names.prefer_word_count),
      INT_KEY("plan.name_samples_per_round", run.plan.names.samples_per_round),
      INT_KEY("plan.name_max_rounds", run.plan.names.max_rounds),

      INT_KEY("draft.context_budget", run.draft.context_budget),
      INT_KEY("draft.summary_passages", run.draft.summary_passages),
      INT_KEY("draft.num_candidates", run.draft.num_candidates),
      DBL_KEY("draft.temperature", run.draft.temperature),
      INT_KEY("draft.summary_max_tokens", run.draft.summary_max_tokens),
      INT_KEY("draft.description_max_tokens", run.draft.description_max_tokens),

      INT_KEY("filters.min_repeat_ngram", run.filters.min_repeat_ngram),
      DBL_KEY("filters.sentence_similarity_ratio", run.filters.sentence_similarity_ratio),
      LIST_KEY("filters.banned_strings_hard", run.filters.banned_strings_hard),
      LIST_KEY("filters.banned_strings_soft", run.filters.banned_strings_soft),
      INT_KEY("filters.soft_threshold", run.filters.soft_threshold),
      INT_KEY("filters.colon_head_window", run.filters.colon_head_window),

      DBL_KEY("rerank.coherence_weight", run.weights.coherence),
      DBL_KEY("rerank.relevance_weight", run.weights.relevance),

      DBL_KEY("edit.entail_threshold", run.edit.entail_threshold),
      DBL_KEY("edit.contradict_threshold", run.edit.contradict_threshold),
      DBL_KEY("edit.qa_threshold", run.edit.qa_threshold),
      INT_KEY("edit.fact_samples", run.edit.fact_samples),
      INT_KEY("edit.value_samples", run.edit.value_samples),
      INT_KEY("edit.example_count", run.edit.example_count),
      INT_KEY("edit.correction_attempts", run.edit.correction_attempts),
      DBL_KEY("edit.max_length_ratio", run.edit.max_length_ratio),
      INT_KEY("edit.fact_max_tokens", run.edit.fact_max_tokens),
      INT_KEY("edit.key_max_tokens", run.edit.key_max_tokens),
      INT_KEY("edit.value_max_tokens", run.edit.value_max_tokens),
      DBL_KEY("edit.temperature", run.edit.temperature),
      STR_KEY("edit.key_examples", key_examples_path),

      STR_KEY("templates.directory", templates_dir),

      STR_KEY("backend.kind", backend.kind),
      STR_KEY("backend.fixtures", backend.fixtures),
      INT_KEY("backend.context_limit", backend.context_limit),
      STR_KEY("backend.completion_url", backend.completion_url),
      STR_KEY("backend.model", backend.model),
      STR_KEY("backend.edit_model", backend.edit_model),
      STR_KEY("backend.scorer_url", backend.scorer_url),
      STR_KEY("backend.api_key_env", backend.api_key_env),
      INT_KEY("backend.timeout_ms", backend.timeout_ms),
      INT_KEY("backend.max_retries", backend.max_retries),
      STR_KEY("backend.tokenizer", backend.tokenizer),
  };
  return table;
}

#undef INT_KEY
#undef DBL_KEY
#undef BOOL_KEY
#undef STR_KEY
#undef LIST_KEY

// Values may be wrapped in double quotes to keep leading/trailing spaces.
std::string unquote(const std::string& v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

AppConfig parse_config(const std::string& content) {
  boost::property_tree::ptree tree;
  std::istringstream in(content);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  AppConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = table.find(full);
      if (it == table.end()) throw ConfigError("unknown config key '" + full + "'");
      it->second(cfg, unquote(value.data()));
    }
  }
  if (cfg.backend.kind != "mock" && cfg.backend.kind != "http") {
    throw ConfigError("backend.kind must be mock or http");
  }
  if (cfg.backend.tokenizer != "whitespace" && cfg.backend.tokenizer != "pretoken") {
    throw ConfigError("backend.tokenizer must be whitespace or pretoken");
  }
  validate(cfg.run);
  return cfg;
}

AppConfig load_config(const std::string& path) {
  AppConfig cfg = parse_config(read_file(path));
  // Relative paths inside the file are resolved against its directory.
  const auto base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(cfg.templates_dir);
  rebase(cfg.key_examples_path);
  rebase(cfg.backend.fixtures);
  return cfg;
}

std::string resolve_config_path(const std::string& name_or_path, const std::string& config_dir) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(name_or_path)) return name_or_path;
  const fs::path candidate = fs::path(config_dir) / (name_or_path + ".ini");
  if (fs::is_regular_file(candidate)) return candidate.string();
  throw ConfigError("config '" + name_or_path + "' not found (also tried " + candidate.string() + ")");
}

}  // namespace loom
