#include "storyloom/http_backend.hpp"

#include <cmath>
#include <regex>

#include <httplib.h>

#include "storyloom/errors.hpp"

namespace loom {

using nlohmann::json;

HttpEndpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw ConfigError("unsupported backend URL '" + url + "'");
  HttpEndpoint ep{m[1].str(), m[2].matched ? m[2].str() : ""};
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

JsonClient::JsonClient(const std::string& url, std::string api_key, std::chrono::milliseconds timeout,
                       RetryPolicy retry)
    : endpoint_(parse_endpoint(url)), api_key_(std::move(api_key)), timeout_(timeout), retry_(retry) {}

json JsonClient::post(const std::string& path, const json& body) const { return exchange("POST", path, &body); }

json JsonClient::get(const std::string& path) const { return exchange("GET", path, nullptr); }

json JsonClient::exchange(const std::string& method, const std::string& path, const json* body) const {
  const std::string full = endpoint_.prefix + path;
  return with_retries(retry_, [&]() -> json {
    httplib::Client cli(endpoint_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = method == "GET" ? cli.Get(full, headers)
                               : cli.Post(full, headers, body->dump(), "application/json");
    if (!res) {
      throw TransportError(method + " " + full + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError(method + " " + full + " returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw SchemaError(method + " " + full + " returned HTTP " + std::to_string(res->status) + ": " +
                        res->body.substr(0, 200));
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw SchemaError(method + " " + full + " returned invalid JSON: " + e.what());
    }
  });
}

namespace {

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": response is not an object");
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(where + ": missing '" + key + "'");
  return *it;
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_string()) throw SchemaError(where + ": '" + key + "' is not a string");
  return v.get<std::string>();
}

double probability_field(const json& j, const char* key, const std::string& where) {
  const auto& v = field(j, key, where);
  if (!v.is_number()) throw SchemaError(where + ": '" + key + "' is not a number");
  const double p = v.get<double>();
  if (!(p >= 0.0 && p <= 1.0)) throw SchemaError(where + ": '" + key + "' outside [0, 1]");
  return p;
}

std::vector<std::string> choice_texts(const json& res, std::size_t expected, const std::string& where) {
  const auto& choices = field(res, "choices", where);
  if (!choices.is_array() || choices.size() != expected) {
    throw SchemaError(where + ": expected " + std::to_string(expected) + " choices");
  }
  std::vector<std::string> out(expected);
  std::vector<bool> seen(expected, false);
  for (std::size_t i = 0; i < choices.size(); ++i) {
    std::size_t idx = i;
    if (auto it = choices[i].find("index"); it != choices[i].end()) {
      if (!it->is_number_unsigned() || it->get<std::size_t>() >= expected) {
        throw SchemaError(where + ": bad choice index");
      }
      idx = it->get<std::size_t>();
    }
    if (seen[idx]) throw SchemaError(where + ": duplicate choice index");
    seen[idx] = true;
    out[idx] = string_field(choices[i], "text", where);
  }
  return out;
}

json completion_body(const std::string& model, const std::string& prompt, const GenParams& params) {
  json body = {{"model", model},
               {"prompt", prompt},
               {"max_tokens", params.max_tokens},
               {"temperature", params.temperature},
               {"n", params.num_samples}};
  if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;
  return body;
}

}  // namespace

HttpLanguageModel::HttpLanguageModel(HttpOptions options)
    : options_(std::move(options)),
      client_(options_.completion_url, options_.api_key, options_.timeout, options_.retry) {}

std::vector<std::string> HttpLanguageModel::complete(const std::string& prompt, const GenParams& params) {
  validate(params);
  const auto res = client_.post("/completions", completion_body(options_.model, prompt, params));
  return choice_texts(res, static_cast<std::size_t>(params.num_samples), "completions");
}

std::string HttpLanguageModel::insert(const std::string& prefix, const std::string& suffix, const GenParams& params) {
  GenParams one = params;
  one.num_samples = 1;
  validate(one);
  json body = completion_body(options_.model, prefix, one);
  body["suffix"] = suffix;
  return choice_texts(client_.post("/completions", body), 1, "insert")[0];
}

std::string HttpLanguageModel::edit(const std::string& text, const std::string& instruction) {
  const json body = {{"model", options_.edit_model}, {"input", text}, {"instruction", instruction}};
  const auto res = client_.post("/edits", body);
  const auto& choices = field(res, "choices", "edits");
  if (!choices.is_array() || choices.empty()) throw SchemaError("edits: no choices");
  return string_field(choices[0], "text", "edits");
}

HttpModelServer::HttpModelServer(HttpOptions options)
    : options_(std::move(options)),
      client_(options_.scorer_url, options_.api_key, options_.timeout, options_.retry) {}

std::vector<std::vector<float>> HttpModelServer::embed(const std::vector<std::string>& texts) {
  const auto res = client_.post("/embed", {{"texts", texts}});
  const auto& rows = field(res, "embeddings", "embed");
  if (!rows.is_array() || rows.size() != texts.size()) throw SchemaError("embed: one embedding per text expected");
  std::vector<std::vector<float>> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.is_array() || row.empty()) throw SchemaError("embed: embedding is not a non-empty array");
    std::vector<float> v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) throw SchemaError("embed: non-numeric component");
      v.push_back(x.get<float>());
    }
    if (!out.empty() && v.size() != out.front().size()) throw SchemaError("embed: inconsistent dimensions");
    out.push_back(std::move(v));
  }
  return out;
}

EntailmentVerdict HttpModelServer::entail(const std::string& premise, const std::string& hypothesis) {
  const auto res = client_.post("/entail", {{"premise", premise}, {"hypothesis", hypothesis}});
  EntailmentVerdict v;
  v.p_entail = probability_field(res, "entail", "entail");
  v.p_neutral = probability_field(res, "neutral", "entail");
  v.p_contradict = probability_field(res, "contradict", "entail");
  if (!is_valid(v)) throw SchemaError("entail: probabilities do not sum to 1");
  return v;
}

QAResult HttpModelServer::answer(const std::string& question, const std::string& context) {
  const auto res = client_.post("/qa", {{"question", question}, {"context", context}});
  return {string_field(res, "answer", "qa"), probability_field(res, "confidence", "qa")};
}

std::vector<Entity> HttpModelServer::detect_entities(const std::string& text) {
  const auto res = client_.post("/ner", {{"text", text}});
  const auto& ents = field(res, "entities", "ner");
  if (!ents.is_array()) throw SchemaError("ner: 'entities' is not an array");
  std::vector<Entity> out;
  for (const auto& e : ents) {
    out.push_back({string_field(e, "text", "ner"), string_field(e, "label", "ner") == "PERSON"});
  }
  return out;
}

double HttpModelServer::coherence(const std::string& prefix, const std::string& continuation) {
  const auto res = client_.post("/score/coherence", {{"prefix", prefix}, {"continuation", continuation}});
  return probability_field(res, "probability", "score/coherence");
}

double HttpModelServer::relevance(const std::string& summary, const std::string& passage) {
  const auto res = client_.post("/score/relevance", {{"summary", summary}, {"passage", passage}});
  return probability_field(res, "probability", "score/relevance");
}

bool HttpModelServer::healthy() const {
  try {
    const auto res = client_.get("/healthz");
    return res.is_object() && res.value("status", "") == "ok";
  } catch (const Error&) {
    return false;
  }
}

Backends make_http_backends(const HttpOptions& options, std::shared_ptr<Tokenizer> tokenizer) {
  auto lm = std::make_shared<HttpLanguageModel>(options);
  auto server = std::make_shared<HttpModelServer>(options);
  Backends b;
  b.lm = lm;
  b.embedder = server;
  b.entailment = server;
  b.qa = server;
  b.ner = server;
  b.scorer = server;
  b.tokenizer = std::move(tokenizer);
  return b;
}

}  // namespace loom
