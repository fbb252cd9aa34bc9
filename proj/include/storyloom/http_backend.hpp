#pragma once

// HTTP/JSON clients for the remote language model and the model server.
//
// Language model (OpenAI-style):
//   POST {completion_url}/completions  {model, prompt, max_tokens, temperature, n, stop[, suffix]}
//                                      -> {choices: [{index, text}]}
//   POST {completion_url}/edits        {model, input, instruction} -> {choices: [{text}]}
//
// Model server:
//   POST /score/coherence {prefix, continuation} -> {probability}
//   POST /score/relevance {summary, passage}     -> {probability}
//   POST /entail  {premise, hypothesis}          -> {entail, neutral, contradict}
//   POST /embed   {texts}                        -> {embeddings: [[float]]}
//   POST /qa      {question, context}            -> {answer, confidence}
//   POST /ner     {text}                         -> {entities: [{text, label}]}
//   GET  /healthz                                -> {status: "ok"}
//
// Connection failures and 5xx/429 responses raise TransportError and are
// retried; other 4xx responses and malformed bodies raise SchemaError.

#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "storyloom/backends.hpp"

namespace loom {

struct HttpEndpoint {
  std::string origin;  // "http://host:port"
  std::string prefix;  // path prefix without trailing slash, e.g. "/v1"
};

// Throws ConfigError for anything but http:// or https:// URLs.
HttpEndpoint parse_endpoint(const std::string& url);

struct HttpOptions {
  std::string completion_url = "http://127.0.0.1:8000/v1";
  std::string model = "text-davinci-002";
  std::string edit_model = "text-davinci-edit-001";
  std::string scorer_url = "http://127.0.0.1:8500";
  std::string api_key;  // sent as a bearer token when non-empty
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;
  int context_limit = 2048;
};

// One JSON request/response exchange with retries. Thread-safe: every call
// opens its own connection.
class JsonClient {
 public:
  JsonClient(const std::string& url, std::string api_key, std::chrono::milliseconds timeout, RetryPolicy retry);

  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  nlohmann::json get(const std::string& path) const;

 private:
  nlohmann::json exchange(const std::string& method, const std::string& path, const nlohmann::json* body) const;

  HttpEndpoint endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
};

class HttpLanguageModel final : public LanguageModel {
 public:
  explicit HttpLanguageModel(HttpOptions options);

  std::vector<std::string> complete(const std::string& prompt, const GenParams& params) override;
  std::string insert(const std::string& prefix, const std::string& suffix, const GenParams& params) override;
  std::string edit(const std::string& text, const std::string& instruction) override;
  int context_limit() const override { return options_.context_limit; }

 private:
  HttpOptions options_;
  JsonClient client_;
};

class HttpModelServer final : public Embedder,
                              public EntailmentModel,
                              public QuestionAnswerer,
                              public EntityRecognizer,
                              public PassageScorer {
 public:
  explicit HttpModelServer(HttpOptions options);

  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
  EntailmentVerdict entail(const std::string& premise, const std::string& hypothesis) override;
  QAResult answer(const std::string& question, const std::string& context) override;
  std::vector<Entity> detect_entities(const std::string& text) override;
  double coherence(const std::string& prefix, const std::string& continuation) override;
  double relevance(const std::string& summary, const std::string& passage) override;

  // True when GET /healthz answers {"status": "ok"}.
  bool healthy() const;

 private:
  HttpOptions options_;
  JsonClient client_;
};

// Language model plus model server; `tokenizer` is shared by the bundle.
Backends make_http_backends(const HttpOptions& options, std::shared_ptr<Tokenizer> tokenizer);

}  // namespace loom
