#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "memcost/core/error.hpp"

namespace memcost {

/// Non-negative token count.
class TokenCount {
 public:
  constexpr TokenCount() = default;
  constexpr explicit TokenCount(std::int64_t v) : value_(v) {
    if (v < 0) throw InvalidInput("token count must be non-negative");
  }
  constexpr std::int64_t value() const { return value_; }

  constexpr TokenCount& operator+=(TokenCount o) {
    value_ += o.value_;
    return *this;
  }
  friend constexpr TokenCount operator+(TokenCount a, TokenCount b) { return TokenCount(a.value_ + b.value_); }
  friend constexpr auto operator<=>(TokenCount, TokenCount) = default;

 private:
  std::int64_t value_ = 0;
};

using TokenizerFn = std::function<std::int64_t(std::string_view)>;

inline constexpr std::string_view kApproxTokenizer = "approx";

/// Four bytes per token, rounded up.
inline std::int64_t approx_token_count(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

/// Process-wide tokenizer table. "approx" is always present; a real BPE
/// tokenizer (e.g. o200k_base) can be plugged in under its own id.
class TokenizerRegistry {
 public:
  static TokenizerRegistry& instance() {
    static TokenizerRegistry registry;
    return registry;
  }

  void register_tokenizer(std::string id, TokenizerFn fn) {
    if (id.empty() || !fn) throw ConfigError("tokenizer registration needs an id and a function");
    std::lock_guard lock(mutex_);
    table_[std::move(id)] = std::move(fn);
  }

  bool contains(std::string_view id) const {
    std::lock_guard lock(mutex_);
    return table_.find(std::string(id)) != table_.end();
  }

  TokenizerFn get(std::string_view id) const {
    std::lock_guard lock(mutex_);
    auto it = table_.find(std::string(id));
    if (it == table_.end()) throw ConfigError("unknown tokenizer '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [k, _] : table_) out.push_back(k);
    return out;
  }

 private:
  TokenizerRegistry() { table_[std::string(kApproxTokenizer)] = approx_token_count; }

  mutable std::mutex mutex_;
  std::map<std::string, TokenizerFn> table_;
};

inline TokenCount count_tokens(std::string_view text, std::string_view tokenizer = kApproxTokenizer) {
  if (tokenizer == kApproxTokenizer) return TokenCount(approx_token_count(text));
  return TokenCount(TokenizerRegistry::instance().get(tokenizer)(text));
}

}  // namespace memcost
