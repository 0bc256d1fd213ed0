#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "memcost/core/money.hpp"
#include "memcost/core/pricing.hpp"

namespace memcost::llm_gateway {

/// One API call, successful or not.
struct LedgerEntry {
  ModelRole role = ModelRole::reader;
  std::string model;
  bool ok = true;
  UsageRecord usage;
  Money cost;
};

struct LedgerTotals {
  std::int64_t exchanges = 0;
  std::int64_t failed_exchanges = 0;
  UsageRecord usage;
  Money cost;
};

/// Run-wide record of every exchange. Appends are thread-safe; totals are
/// consistent with the entries at any point.
class RunLedger {
 public:
  void record(LedgerEntry e) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(e));
  }

  std::vector<LedgerEntry> entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
  }

  LedgerTotals totals() const {
    std::lock_guard lock(mutex_);
    LedgerTotals t;
    for (const auto& e : entries_) accumulate(t, e);
    return t;
  }

  std::map<ModelRole, LedgerTotals> totals_by_role() const {
    std::lock_guard lock(mutex_);
    std::map<ModelRole, LedgerTotals> out;
    for (const auto& e : entries_) accumulate(out[e.role], e);
    return out;
  }

  /// "ledger: exchanges=12 failed=1 prompt_tokens=... cost=$0.001234"
  std::string summary_line() const {
    const auto t = totals();
    return "ledger: exchanges=" + std::to_string(t.exchanges) + " failed=" + std::to_string(t.failed_exchanges) +
           " prompt_tokens=" + std::to_string(t.usage.prompt_tokens.value()) +
           " cached_tokens=" + std::to_string(t.usage.cached_prompt_tokens.value()) +
           " completion_tokens=" + std::to_string(t.usage.completion_tokens.value()) + " cost=" + t.cost.to_usd(6);
  }

 private:
  static void accumulate(LedgerTotals& t, const LedgerEntry& e) {
    ++t.exchanges;
    if (!e.ok) ++t.failed_exchanges;
    t.usage += e.usage;
    t.cost += e.cost;
  }

  mutable std::mutex mutex_;
  std::vector<LedgerEntry> entries_;
};

}  // namespace memcost::llm_gateway
