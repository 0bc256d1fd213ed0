#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "memcost/core/error.hpp"
#include "memcost/core/money.hpp"

namespace memcost::cost_model {

/// Calibrated constants of the two cumulative-cost curves
///
///   C_LC(N)  = first_turn + (N - 1) * cached_turn
///   C_Mem(N) = write + N * read
///
/// for a conversation of `context_tokens` tokens.
struct CostParams {
  std::int64_t context_tokens = 0;
  Rate lc_input_rate = Rate::usd_per_million("0.25");
  Rate lc_cached_rate = Rate::usd_per_million("0.025");
  Money lc_output_cost_per_turn = Money::parse("0.00105");
  Rate write_rate = Rate::usd_per_million("0.4295");
  Money read_cost_per_turn = Money::parse("0.0013");

  static CostParams defaults(std::int64_t context_tokens) {
    CostParams p;
    p.context_tokens = context_tokens;
    return p;
  }

  CostParams with_context(std::int64_t context_tokens) const {
    CostParams p = *this;
    p.context_tokens = context_tokens;
    return p;
  }

  bool operator==(const CostParams&) const = default;
};

inline void validate(const CostParams& p) {
  const Money zero;
  if (p.context_tokens < 0) throw InvalidInput("context length must be >= 0");
  if (p.lc_input_rate.per_million() < zero || p.lc_cached_rate.per_million() < zero ||
      p.lc_output_cost_per_turn < zero || p.write_rate.per_million() < zero || p.read_cost_per_turn < zero) {
    throw InvalidInput("cost parameters must be non-negative");
  }
  if (p.lc_cached_rate > p.lc_input_rate) throw InvalidInput("cached rate exceeds input rate");
}

/// The four per-event charges both curves are built from.
struct TurnCosts {
  Money write;
  Money read;
  Money first_turn;
  Money cached_turn;

  bool operator==(const TurnCosts&) const = default;
};

inline TurnCosts turn_costs(const CostParams& p) {
  validate(p);
  return {
      p.write_rate.charge(p.context_tokens),
      p.read_cost_per_turn,
      p.lc_input_rate.charge(p.context_tokens) + p.lc_output_cost_per_turn,
      p.lc_cached_rate.charge(p.context_tokens) + p.lc_output_cost_per_turn,
  };
}

inline Money lc_cost(const TurnCosts& t, std::int64_t n) {
  if (n < 1) throw InvalidInput("lc_cost: turn count must be >= 1");
  return t.first_turn + (n - 1) * t.cached_turn;
}

inline Money mem_cost(const TurnCosts& t, std::int64_t n) {
  if (n < 0) throw InvalidInput("mem_cost: turn count must be >= 0");
  return t.write + n * t.read;
}

inline Money lc_cost(const CostParams& p, std::int64_t n) { return lc_cost(turn_costs(p), n); }
inline Money mem_cost(const CostParams& p, std::int64_t n) { return mem_cost(turn_costs(p), n); }

/// Percentage of the LC cost saved by the memory system at n turns
/// (negative when LC is cheaper).
inline double savings_pct(const TurnCosts& t, std::int64_t n) {
  const Money lc = lc_cost(t, n);
  if (lc.micros() == 0) return 0.0;
  return 100.0 * static_cast<double>((lc - mem_cost(t, n)).micros()) / static_cast<double>(lc.micros());
}

struct BreakEvenResult {
  std::optional<std::int64_t> n_be;

  bool operator==(const BreakEvenResult&) const = default;
};

inline constexpr std::int64_t kDefaultBreakEvenHorizon = 10'000;

/// Smallest n in [1, n_max] with C_Mem(n) < C_LC(n), by direct scan.
inline BreakEvenResult break_even_search(const TurnCosts& t, std::int64_t n_max = kDefaultBreakEvenHorizon) {
  if (n_max < 1) throw InvalidInput("break_even: n_max must be >= 1");
  for (std::int64_t n = 1; n <= n_max; ++n) {
    if (mem_cost(t, n) < lc_cost(t, n)) return {n};
  }
  return {};
}

/// Same answer from the affine form: C_Mem(n) < C_LC(n) <=> n * D > K with
/// D = cached_turn - read and K = write - first_turn + cached_turn.
inline BreakEvenResult break_even_closed_form(const TurnCosts& t, std::int64_t n_max = kDefaultBreakEvenHorizon) {
  if (n_max < 1) throw InvalidInput("break_even: n_max must be >= 1");
  const std::int64_t d = (t.cached_turn - t.read).micros();
  const std::int64_t k = (t.write - t.first_turn + t.cached_turn).micros();
  std::optional<std::int64_t> n;
  if (d > 0) {
    // floor(k / d) + 1, at least 1
    std::int64_t q = k / d;
    if (k % d != 0 && k < 0) q -= 1;
    n = std::max<std::int64_t>(1, q + 1);
  } else if (d > k) {
    // Non-increasing gap: only n = 1 can satisfy it.
    n = 1;
  }
  if (n && *n > n_max) n.reset();
  return {n};
}

inline BreakEvenResult break_even(const CostParams& p, std::int64_t n_max = kDefaultBreakEvenHorizon) {
  return break_even_search(turn_costs(p), n_max);
}

struct CurvePoint {
  std::int64_t n;
  Money c_lc;
  Money c_mem;
};

using CostCurve = std::vector<CurvePoint>;

inline CostCurve cost_curve(const CostParams& p, std::span<const std::int64_t> turns) {
  const TurnCosts t = turn_costs(p);
  CostCurve curve;
  std::int64_t prev = 0;
  for (auto n : turns) {
    if (n <= prev) throw InvalidInput("turn counts must be strictly increasing and >= 1");
    curve.push_back({n, lc_cost(t, n), mem_cost(t, n)});
    prev = n;
  }
  return curve;
}

struct SensitivityRow {
  std::int64_t context_tokens;
  Money write_cost;
  Money lc_turn1;
  Money lc_turn_n;
  BreakEvenResult n_be;
};

/// One row per context length, all from the same rate family as `base`.
inline std::vector<SensitivityRow> sensitivity_table(std::span<const std::int64_t> context_lengths,
                                                     const CostParams& base = {},
                                                     std::int64_t n_max = kDefaultBreakEvenHorizon) {
  if (context_lengths.empty()) throw InvalidInput("sensitivity_table: no context lengths");
  std::vector<SensitivityRow> rows;
  rows.reserve(context_lengths.size());
  for (auto l : context_lengths) {
    const TurnCosts t = turn_costs(base.with_context(l));
    rows.push_back({l, t.write, t.first_turn, t.cached_turn, break_even_search(t, n_max)});
  }
  return rows;
}

}  // namespace memcost::cost_model
