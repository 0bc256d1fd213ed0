#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"
#include "memcost/core/tokenizer.hpp"

namespace memcost {

enum class ModelRole { extractor, reader, long_context, judge, embedder };

inline constexpr std::array<ModelRole, 5> kAllRoles = {ModelRole::extractor, ModelRole::reader,
                                                       ModelRole::long_context, ModelRole::judge,
                                                       ModelRole::embedder};

inline const char* to_string(ModelRole r) {
  switch (r) {
    case ModelRole::extractor: return "extractor";
    case ModelRole::reader: return "reader";
    case ModelRole::long_context: return "long_context";
    case ModelRole::judge: return "judge";
    case ModelRole::embedder: return "embedder";
  }
  return "?";
}

inline ModelRole model_role_from_string(std::string_view s) {
  for (auto r : kAllRoles) {
    if (s == to_string(r)) return r;
  }
  throw ConfigError("unknown model role '" + std::string(s) + "'");
}

struct UsageRecord {
  TokenCount prompt_tokens;
  TokenCount cached_prompt_tokens;
  TokenCount completion_tokens;

  UsageRecord() = default;
  UsageRecord(std::int64_t prompt, std::int64_t cached, std::int64_t completion)
      : prompt_tokens(prompt), cached_prompt_tokens(cached), completion_tokens(completion) {
    if (cached > prompt) throw InvalidInput("cached prompt tokens exceed prompt tokens");
  }

  UsageRecord& operator+=(const UsageRecord& o) {
    prompt_tokens += o.prompt_tokens;
    cached_prompt_tokens += o.cached_prompt_tokens;
    completion_tokens += o.completion_tokens;
    return *this;
  }
  friend UsageRecord operator+(UsageRecord a, const UsageRecord& b) { return a += b; }
  bool operator==(const UsageRecord&) const = default;
};

/// 90% discount on cached input unless a schedule says otherwise.
inline constexpr std::int64_t kDefaultCacheDiscountNum = 1;
inline constexpr std::int64_t kDefaultCacheDiscountDen = 10;

struct RoleRates {
  Rate input;
  Rate cached_input;
  Rate output;

  static RoleRates with_default_cache(Rate input, Rate output) {
    return {input, input.scaled(kDefaultCacheDiscountNum, kDefaultCacheDiscountDen), output};
  }

  bool operator==(const RoleRates&) const = default;
};

inline void validate(const RoleRates& r) {
  if (r.input.per_million() < Money{} || r.cached_input.per_million() < Money{} ||
      r.output.per_million() < Money{}) {
    throw InvalidInput("rates must be non-negative");
  }
}

/// Exact cost of one metered exchange, rounded half-even once.
inline Money usage_cost(const UsageRecord& u, const RoleRates& rates) {
  const __int128 uncached = u.prompt_tokens.value() - u.cached_prompt_tokens.value();
  const __int128 num = uncached * rates.input.per_million().micros() +
                       static_cast<__int128>(u.cached_prompt_tokens.value()) * rates.cached_input.per_million().micros() +
                       static_cast<__int128>(u.completion_tokens.value()) * rates.output.per_million().micros();
  return Money::from_micros(detail::div_round_half_even(num, 1'000'000));
}

class PricingSchedule {
 public:
  PricingSchedule() = default;

  /// List prices of the models used for each role: GPT-5-nano extractor,
  /// GPT-5-mini reader / long-context / judge, text-embedding-3-small.
  static PricingSchedule openai_defaults() {
    PricingSchedule s;
    const auto mini = RoleRates::with_default_cache(Rate::usd_per_million("0.25"), Rate::usd_per_million("2.00"));
    s.set(ModelRole::extractor,
          RoleRates::with_default_cache(Rate::usd_per_million("0.05"), Rate::usd_per_million("0.40")));
    s.set(ModelRole::reader, mini);
    s.set(ModelRole::long_context, mini);
    s.set(ModelRole::judge, mini);
    s.set(ModelRole::embedder,
          RoleRates::with_default_cache(Rate::usd_per_million("0.02"), Rate::usd_per_million("0")));
    return s;
  }

  void set(ModelRole role, RoleRates rates) {
    validate(rates);
    rates_[role] = rates;
  }

  bool has(ModelRole role) const { return rates_.count(role) != 0; }

  const RoleRates& at(ModelRole role) const {
    auto it = rates_.find(role);
    if (it == rates_.end()) throw ConfigError(std::string("no pricing for role '") + to_string(role) + "'");
    return it->second;
  }

  const std::map<ModelRole, RoleRates>& all() const { return rates_; }

  bool operator==(const PricingSchedule&) const = default;

 private:
  std::map<ModelRole, RoleRates> rates_;
};

}  // namespace memcost
