#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "memcost/core/error.hpp"
#include "memcost/core/pricing.hpp"

namespace memcost::llm_gateway {

enum class ReasoningEffort { low, medium, high };

inline const char* to_string(ReasoningEffort e) {
  switch (e) {
    case ReasoningEffort::low: return "low";
    case ReasoningEffort::medium: return "medium";
    case ReasoningEffort::high: return "high";
  }
  return "?";
}

inline ReasoningEffort reasoning_effort_from_string(std::string_view s) {
  if (s == "low") return ReasoningEffort::low;
  if (s == "medium") return ReasoningEffort::medium;
  if (s == "high") return ReasoningEffort::high;
  throw ConfigError("reasoning_effort must be low, medium or high (got '" + std::string(s) + "')");
}

/// For models that take temperature/max_tokens instead of reasoning_effort.
struct SamplingParams {
  double temperature = 0.0;
  std::int64_t max_tokens = 2000;

  bool operator==(const SamplingParams&) const = default;
};

using RoleParams = std::variant<ReasoningEffort, SamplingParams>;

struct RetryPolicy {
  int max_attempts = 4;
  double backoff_base_s = 1.0;

  bool operator==(const RetryPolicy&) const = default;
};

enum class BackendKind { mock, openai };

struct BackendConfig {
  BackendKind kind = BackendKind::mock;
  std::string base_url = "https://openrouter.ai/api/v1";
  std::string api_key_env = "OPENROUTER_API_KEY";  // the variable name, never the key
  std::string model_name;
  RoleParams role_params = ReasoningEffort::low;
  double timeout_s = 120.0;
  RetryPolicy retry;
  // Mock-only knobs (responder name, fixed text, failure injection, seed).
  nlohmann::json mock = nlohmann::json::object();
  // Embedders only.
  std::size_t dimension = 1536;

  bool operator==(const BackendConfig&) const = default;
};

/// Backend defaults per role: GPT-5-nano extractor at low effort, GPT-5-mini
/// reader at medium, long-context at low, judge at high; text-embedding-3-small.
inline BackendConfig default_backend(ModelRole role, BackendKind kind = BackendKind::mock) {
  BackendConfig c;
  c.kind = kind;
  switch (role) {
    case ModelRole::extractor:
      c.model_name = "openai/gpt-5-nano";
      c.role_params = ReasoningEffort::low;
      break;
    case ModelRole::reader:
      c.model_name = "openai/gpt-5-mini";
      c.role_params = ReasoningEffort::medium;
      break;
    case ModelRole::long_context:
      c.model_name = "openai/gpt-5-mini";
      c.role_params = ReasoningEffort::low;
      break;
    case ModelRole::judge:
      c.model_name = "openai/gpt-5-mini";
      c.role_params = ReasoningEffort::high;
      break;
    case ModelRole::embedder:
      c.model_name = "openai/text-embedding-3-small";
      c.role_params = ReasoningEffort::low;
      break;
  }
  return c;
}

inline nlohmann::json to_json(const BackendConfig& c) {
  nlohmann::json j = {
      {"kind", c.kind == BackendKind::mock ? "mock" : "openai"},
      {"base_url", c.base_url},
      {"api_key_env", c.api_key_env},
      {"model", c.model_name},
      {"timeout_s", c.timeout_s},
      {"retry", {{"max_attempts", c.retry.max_attempts}, {"backoff_base_s", c.retry.backoff_base_s}}},
      {"dimension", c.dimension},
  };
  if (const auto* e = std::get_if<ReasoningEffort>(&c.role_params)) {
    j["reasoning_effort"] = to_string(*e);
  } else {
    const auto& s = std::get<SamplingParams>(c.role_params);
    j["temperature"] = s.temperature;
    j["max_tokens"] = s.max_tokens;
  }
  if (!c.mock.empty()) j["mock"] = c.mock;
  return j;
}

/// Starts from default_backend(role) and overrides whatever `j` sets.
/// `where` names the config path for error messages.
inline BackendConfig backend_from_json(const nlohmann::json& j, ModelRole role, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": must be an object");
  BackendConfig c = default_backend(role);
  try {
    const std::string kind = j.value("kind", std::string("mock"));
    if (kind == "mock") {
      c.kind = BackendKind::mock;
    } else if (kind == "openai") {
      c.kind = BackendKind::openai;
    } else {
      throw ConfigError(where + ".kind: expected 'mock' or 'openai', got '" + kind + "'");
    }
    if (j.contains("api_key")) {
      throw ConfigError(where + ".api_key: keys are never stored in config; set api_key_env instead");
    }
    c.base_url = j.value("base_url", c.base_url);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.model_name = j.value("model", c.model_name);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.dimension = j.value("dimension", c.dimension);
    if (c.timeout_s <= 0) throw ConfigError(where + ".timeout_s: must be positive");
    if (c.dimension == 0) throw ConfigError(where + ".dimension: must be positive");
    if (j.contains("retry")) {
      const auto& r = j.at("retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.backoff_base_s = r.value("backoff_base_s", c.retry.backoff_base_s);
      if (c.retry.max_attempts < 1) throw ConfigError(where + ".retry.max_attempts: must be >= 1");
      if (c.retry.backoff_base_s < 0) throw ConfigError(where + ".retry.backoff_base_s: must be >= 0");
    }
    const bool has_effort = j.contains("reasoning_effort");
    const bool has_sampling = j.contains("temperature") || j.contains("max_tokens");
    if (has_effort && has_sampling) {
      throw ConfigError(where + ": set either reasoning_effort or temperature/max_tokens, not both");
    }
    if (has_effort) {
      c.role_params = reasoning_effort_from_string(j.at("reasoning_effort").get<std::string>());
    } else if (has_sampling) {
      SamplingParams s;
      s.temperature = j.value("temperature", s.temperature);
      s.max_tokens = j.value("max_tokens", s.max_tokens);
      if (s.max_tokens < 1) throw ConfigError(where + ".max_tokens: must be >= 1");
      c.role_params = s;
    }
    if (j.contains("mock")) {
      if (!j.at("mock").is_object()) throw ConfigError(where + ".mock: must be an object");
      c.mock = j.at("mock");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return c;
}

}  // namespace memcost::llm_gateway
