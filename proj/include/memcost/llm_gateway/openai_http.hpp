#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "memcost/core/error.hpp"
#include "memcost/llm_gateway/client.hpp"

namespace memcost::llm_gateway {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash, may be empty
};

inline ParsedUrl parse_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url '" + url + "' has no scheme");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("base_url '" + url + "' must be http or https");
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl p;
  p.origin = url.substr(0, path_start);
  p.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  if (p.origin.size() <= scheme_end + 3) throw ConfigError("base_url '" + url + "' has no host");
  return p;
}

/// Request body for POST {base_url}/chat/completions.
inline nlohmann::json chat_request_body(const ChatRequest& req) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body = {{"model", req.model}, {"messages", msgs}};
  if (const auto* e = std::get_if<ReasoningEffort>(&req.role_params)) {
    body["reasoning_effort"] = to_string(*e);
  } else {
    const auto& s = std::get<SamplingParams>(req.role_params);
    body["temperature"] = s.temperature;
    body["max_tokens"] = s.max_tokens;
  }
  return body;
}

/// Reads usage.prompt_tokens / completion_tokens and, when present,
/// usage.prompt_tokens_details.cached_tokens.
inline UsageRecord usage_from_json(const nlohmann::json& body) {
  if (!body.contains("usage") || !body.at("usage").is_object()) return {};
  const auto& u = body.at("usage");
  const std::int64_t prompt = u.value("prompt_tokens", std::int64_t{0});
  const std::int64_t completion = u.value("completion_tokens", std::int64_t{0});
  std::int64_t cached = 0;
  if (u.contains("prompt_tokens_details") && u.at("prompt_tokens_details").is_object()) {
    cached = u.at("prompt_tokens_details").value("cached_tokens", std::int64_t{0});
  }
  return UsageRecord(prompt, std::min(cached, prompt), completion);
}

inline ChatReply chat_reply_from_json(const nlohmann::json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    return {content.is_string() ? content.get<std::string>() : std::string(), usage_from_json(body)};
  } catch (const nlohmann::json::exception& e) {
    throw TransportFailure(-1, std::string("malformed chat completion response: ") + e.what());
  }
}

inline EmbeddingReply embedding_reply_from_json(const nlohmann::json& body) {
  try {
    const auto& data = body.at("data");
    std::vector<std::pair<std::int64_t, std::vector<float>>> items;
    for (std::size_t i = 0; i < data.size(); ++i) {
      items.emplace_back(data[i].value("index", static_cast<std::int64_t>(i)),
                         data[i].at("embedding").get<std::vector<float>>());
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    EmbeddingReply r;
    for (auto& [_, v] : items) r.vectors.push_back(std::move(v));
    r.usage = usage_from_json(body);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw TransportFailure(-1, std::string("malformed embeddings response: ") + e.what());
  }
}

namespace detail {

class OpenAiHttp {
 public:
  explicit OpenAiHttp(const BackendConfig& cfg) : cfg_(cfg), url_(parse_base_url(cfg.base_url)) {}

  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body, double timeout_s) const {
    // Key is read at call time so configs without it stay usable offline.
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable '" + cfg_.api_key_env + "' is not set");
    }
    httplib::Client cli(url_.origin);
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};
    auto res = cli.Post(url_.path + endpoint, headers, body.dump(), "application/json");
    if (!res) throw TransportFailure(0, "request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) {
      throw TransportFailure(res->status, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    }
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw TransportFailure(-1, "response body is not JSON");
    return parsed;
  }

 private:
  BackendConfig cfg_;
  ParsedUrl url_;
};

}  // namespace detail

/// OpenAI-compatible chat completions over HTTP(S).
class OpenAiChatTransport : public ChatTransport {
 public:
  explicit OpenAiChatTransport(const BackendConfig& cfg) : http_(cfg) {}

  ChatReply send(const ChatRequest& req) override {
    return chat_reply_from_json(http_.post("/chat/completions", chat_request_body(req), req.timeout_s));
  }

 private:
  detail::OpenAiHttp http_;
};

/// OpenAI-compatible embeddings over HTTP(S).
class OpenAiEmbeddingTransport : public EmbeddingTransport {
 public:
  explicit OpenAiEmbeddingTransport(const BackendConfig& cfg) : http_(cfg) {}

  EmbeddingReply send(const EmbeddingRequest& req) override {
    const nlohmann::json body = {{"model", req.model}, {"input", req.inputs}};
    return embedding_reply_from_json(http_.post("/embeddings", body, req.timeout_s));
  }

 private:
  detail::OpenAiHttp http_;
};

}  // namespace memcost::llm_gateway
