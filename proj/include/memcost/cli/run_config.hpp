#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "memcost/core/dataset.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/tokenizer.hpp"
#include "memcost/cost_model/cost_model.hpp"
#include "memcost/llm_gateway/config.hpp"
#include "memcost/memory_engine/segment.hpp"
#include "memcost/vector_index/hnsw_index.hpp"

namespace memcost::cli {

/// Everything a run needs. Loaded from JSON, then overlaid with MEMCOST_*
/// environment variables. API keys are never part of it: each backend names
/// the variable holding its key, and that variable is read only when the
/// backend makes a request.
struct RunConfig {
  std::map<ModelRole, llm_gateway::BackendConfig> backends;
  PricingSchedule pricing;
  std::string index_path = "memcost-index";
  std::string dataset_path;  // optional default for commands taking a dataset
  std::string tokenizer = std::string(kApproxTokenizer);
  std::size_t top_k = 20;
  std::size_t concurrency = 4;
  std::size_t batch_size = memory_engine::kDefaultBatchSize;
  std::size_t max_chars = memory_engine::kDefaultMaxChars;
  vector_index::HnswParams hnsw;
  std::optional<cost_model::CostParams> cost_model;

  const llm_gateway::BackendConfig& backend(ModelRole role) const {
    auto it = backends.find(role);
    if (it == backends.end()) throw ConfigError(std::string("backends.") + to_string(role) + ": not configured");
    return it->second;
  }

  bool operator==(const RunConfig&) const = default;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace detail {

inline Rate rate_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  try {
    if (v.is_string()) return Rate::usd_per_million(v.get<std::string>());
    if (v.is_number()) return Rate::usd_per_million(nlohmann::json(v).dump());
  } catch (const Error&) {
  }
  throw ConfigError(where + "." + key + ": expected a USD amount such as \"0.25\"");
}

inline Money money_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  try {
    if (v.is_string()) return Money::parse(v.get<std::string>());
    if (v.is_number()) return Money::parse(nlohmann::json(v).dump());
  } catch (const Error&) {
  }
  throw ConfigError(where + "." + key + ": expected a USD amount such as \"0.0013\"");
}

inline std::string usd(Rate r) { return r.per_million().to_string(6); }

inline std::size_t positive(const nlohmann::json& j, const char* key, std::size_t fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
    throw ConfigError(where + key + ": must be a positive integer");
  }
  return v.get<std::size_t>();
}

inline std::size_t parse_env_positive(const std::string& name, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used == value.size() && v > 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  throw ConfigError(name + ": must be a positive integer (got '" + value + "')");
}

inline std::string env_role(ModelRole r) {
  std::string s = to_string(r);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Pricing block: either the preset "openai_defaults" or an object keyed by
/// role with input / cached_input / output prices in USD per 1M tokens.
inline PricingSchedule pricing_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "openai_defaults") return PricingSchedule::openai_defaults();
    throw ConfigError("pricing: unknown preset '" + j.get<std::string>() + "'");
  }
  if (!j.is_object()) throw ConfigError("pricing: must be an object or the preset \"openai_defaults\"");
  PricingSchedule s;
  for (const auto& [key, val] : j.items()) {
    const std::string where = "pricing." + key;
    ModelRole role;
    try {
      role = model_role_from_string(key);
    } catch (const Error&) {
      throw ConfigError(where + ": unknown role");
    }
    if (!val.is_object()) throw ConfigError(where + ": must be an object");
    for (const char* k : {"input", "output"}) {
      if (!val.contains(k)) throw ConfigError(where + "." + k + ": missing");
    }
    const Rate input = detail::rate_field(val, "input", where);
    const Rate output = detail::rate_field(val, "output", where);
    RoleRates rates = RoleRates::with_default_cache(input, output);
    if (val.contains("cached_input")) rates.cached_input = detail::rate_field(val, "cached_input", where);
    try {
      s.set(role, rates);
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
  return s;
}

inline nlohmann::json pricing_to_json(const PricingSchedule& s) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [role, r] : s.all()) {
    j[to_string(role)] = {{"input", detail::usd(r.input)},
                          {"cached_input", detail::usd(r.cached_input)},
                          {"output", detail::usd(r.output)}};
  }
  return j;
}

inline cost_model::CostParams cost_params_from_json(const nlohmann::json& j) {
  const std::string where = "cost_model";
  if (!j.is_object()) throw ConfigError(where + ": must be an object");
  cost_model::CostParams p;
  if (j.contains("lc_input")) p.lc_input_rate = detail::rate_field(j, "lc_input", where);
  if (j.contains("lc_cached_input")) p.lc_cached_rate = detail::rate_field(j, "lc_cached_input", where);
  if (j.contains("lc_output_per_turn")) p.lc_output_cost_per_turn = detail::money_field(j, "lc_output_per_turn", where);
  if (j.contains("write")) p.write_rate = detail::rate_field(j, "write", where);
  if (j.contains("read_per_turn")) p.read_cost_per_turn = detail::money_field(j, "read_per_turn", where);
  try {
    cost_model::validate(p);
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return p;
}

inline nlohmann::json cost_params_to_json(const cost_model::CostParams& p) {
  return {{"lc_input", detail::usd(p.lc_input_rate)},
          {"lc_cached_input", detail::usd(p.lc_cached_rate)},
          {"lc_output_per_turn", p.lc_output_cost_per_turn.to_string(6)},
          {"write", detail::usd(p.write_rate)},
          {"read_per_turn", p.read_cost_per_turn.to_string(6)}};
}

/// Roles with a configured backend must have prices.
inline void validate(const RunConfig& c) {
  for (const auto& [role, _] : c.backends) {
    if (!c.pricing.has(role)) {
      throw ConfigError(std::string("pricing.") + to_string(role) + ": missing for a configured backend");
    }
  }
  if (c.index_path.empty()) throw ConfigError("index_path: must be non-empty");
  TokenizerRegistry::instance().get(c.tokenizer);
  vector_index::validate(c.hnsw);
}

inline RunConfig config_from_json(const nlohmann::json& j, const EnvLookup& env = process_env) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  try {
    if (j.contains("backends")) {
      const auto& b = j.at("backends");
      if (!b.is_object()) throw ConfigError("backends: must be an object");
      for (const auto& [key, val] : b.items()) {
        ModelRole role;
        try {
          role = model_role_from_string(key);
        } catch (const Error&) {
          throw ConfigError("backends." + key + ": unknown role");
        }
        c.backends[role] = llm_gateway::backend_from_json(val, role, "backends." + key);
      }
    }
    if (!j.contains("pricing")) throw ConfigError("pricing: missing");
    c.pricing = pricing_from_json(j.at("pricing"));
    c.index_path = j.value("index_path", c.index_path);
    c.dataset_path = j.value("dataset_path", c.dataset_path);
    c.tokenizer = j.value("tokenizer", c.tokenizer);
    c.top_k = detail::positive(j, "top_k", c.top_k, "");
    c.concurrency = detail::positive(j, "concurrency", c.concurrency, "");
    c.batch_size = detail::positive(j, "batch_size", c.batch_size, "");
    c.max_chars = detail::positive(j, "max_chars", c.max_chars, "");
    if (j.contains("hnsw")) {
      const auto& h = j.at("hnsw");
      if (!h.is_object()) throw ConfigError("hnsw: must be an object");
      c.hnsw.m = static_cast<std::uint32_t>(detail::positive(h, "m", c.hnsw.m, "hnsw."));
      c.hnsw.ef_construction =
          static_cast<std::uint32_t>(detail::positive(h, "ef_construction", c.hnsw.ef_construction, "hnsw."));
      c.hnsw.ef_search = static_cast<std::uint32_t>(detail::positive(h, "ef_search", c.hnsw.ef_search, "hnsw."));
      c.hnsw.rng_seed = h.value("seed", c.hnsw.rng_seed);
    }
    if (j.contains("cost_model")) c.cost_model = cost_params_from_json(j.at("cost_model"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // Environment overlay.
  if (auto v = env("MEMCOST_INDEX_PATH")) c.index_path = *v;
  if (auto v = env("MEMCOST_DATASET_PATH")) c.dataset_path = *v;
  if (auto v = env("MEMCOST_TOKENIZER")) c.tokenizer = *v;
  if (auto v = env("MEMCOST_TOP_K")) c.top_k = detail::parse_env_positive("MEMCOST_TOP_K", *v);
  if (auto v = env("MEMCOST_CONCURRENCY")) c.concurrency = detail::parse_env_positive("MEMCOST_CONCURRENCY", *v);
  for (auto& [role, b] : c.backends) {
    const std::string prefix = "MEMCOST_" + detail::env_role(role) + "_";
    if (auto v = env(prefix + "MODEL")) b.model_name = *v;
    if (auto v = env(prefix + "BASE_URL")) b.base_url = *v;
    if (auto v = env(prefix + "API_KEY_ENV")) b.api_key_env = *v;
  }

  validate(c);
  return c;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json backends = nlohmann::json::object();
  for (const auto& [role, b] : c.backends) backends[to_string(role)] = llm_gateway::to_json(b);
  nlohmann::json j = {
      {"backends", backends},
      {"pricing", pricing_to_json(c.pricing)},
      {"index_path", c.index_path},
      {"dataset_path", c.dataset_path},
      {"tokenizer", c.tokenizer},
      {"top_k", c.top_k},
      {"concurrency", c.concurrency},
      {"batch_size", c.batch_size},
      {"max_chars", c.max_chars},
      {"hnsw",
       {{"m", c.hnsw.m}, {"ef_construction", c.hnsw.ef_construction}, {"ef_search", c.hnsw.ef_search},
        {"seed", c.hnsw.rng_seed}}},
  };
  if (c.cost_model) j["cost_model"] = cost_params_to_json(*c.cost_model);
  return j;
}

inline RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file '" + path.string() + "' not found");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, env);
}

}  // namespace memcost::cli
