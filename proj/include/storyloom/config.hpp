#pragma once

// INI configuration: one section per module, flat keys. Every key is
// optional; unknown sections or keys are rejected so typos surface early.
// List values are separated by '|' and may use "\n" style escapes.

#include <string>

#include "storyloom/orchestrator.hpp"

namespace loom {

struct BackendProfile {
  std::string kind = "mock";  // "mock" | "http"
  // mock
  std::string fixtures;  // optional fixture file; the mock seed is run.seed
  int context_limit = 2048;
  // http
  std::string completion_url = "http://127.0.0.1:8000/v1";
  std::string model = "text-davinci-002";
  std::string edit_model = "text-davinci-edit-001";
  std::string scorer_url = "http://127.0.0.1:8500";
  std::string api_key_env = "STORYLOOM_API_KEY";
  int timeout_ms = 60000;
  int max_retries = 3;
  std::string tokenizer = "whitespace";  // "whitespace" | "pretoken"
};

struct AppConfig {
  RunConfig run;
  BackendProfile backend;
  std::string templates_dir;      // empty: built-in templates
  std::string key_examples_path;  // empty: built-in examples
};

// Throws ConfigError with the offending key.
AppConfig parse_config(const std::string& content);
AppConfig load_config(const std::string& path);

// A path to an existing file is used as is; otherwise `name_or_path` is
// looked up as "<name>.ini" in `config_dir`.
std::string resolve_config_path(const std::string& name_or_path, const std::string& config_dir);

}  // namespace loom
