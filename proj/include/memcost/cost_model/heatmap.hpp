#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "memcost/core/error.hpp"
#include "memcost/cost_model/cost_model.hpp"

namespace memcost::cost_model {

struct GridRange {
  std::int64_t min = 0;
  std::int64_t max = 0;
  std::int64_t steps = 2;

  /// "a:b:steps"
  static GridRange parse(std::string_view text) {
    std::vector<std::int64_t> parts;
    std::size_t start = 0;
    while (true) {
      const auto colon = text.find(':', start);
      const auto piece = text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start);
      const std::string s(piece);
      char* end = nullptr;
      const long long v = std::strtoll(s.c_str(), &end, 10);
      if (s.empty() || end != s.c_str() + s.size()) {
        throw InvalidInput("range '" + std::string(text) + "' must look like min:max:steps");
      }
      parts.push_back(v);
      if (colon == std::string_view::npos) break;
      start = colon + 1;
    }
    if (parts.size() != 3) throw InvalidInput("range '" + std::string(text) + "' must look like min:max:steps");
    return {parts[0], parts[1], parts[2]};
  }

  /// Evenly spaced integer points, endpoints included.
  std::vector<std::int64_t> points() const {
    if (steps < 2) throw InvalidInput("range needs at least 2 steps");
    if (max < min) throw InvalidInput("range max is below min");
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(steps));
    for (std::int64_t i = 0; i < steps; ++i) {
      const long double x = static_cast<long double>(min) +
                            static_cast<long double>(max - min) * static_cast<long double>(i) /
                                static_cast<long double>(steps - 1);
      out.push_back(static_cast<std::int64_t>(std::llround(x)));
    }
    return out;
  }
};

// Default heatmap axes: the context range spanned by the break-even table,
// and turn counts out to 50.
inline constexpr GridRange kDefaultContextGrid{10'000, 500'000, 50};
inline constexpr GridRange kDefaultTurnGrid{1, 50, 50};

struct Heatmap {
  std::vector<std::int64_t> context_lengths;  // rows
  std::vector<std::int64_t> turns;            // columns
  std::vector<Money> diff;                    // row-major, C_LC - C_Mem
  std::vector<std::optional<std::int64_t>> boundary;  // per row

  Money at(std::size_t row, std::size_t col) const { return diff[row * turns.size() + col]; }
};

/// Cost difference over an (L, N) grid plus the break-even boundary per L.
/// The boundary is the first integer N in [1, max N of the grid] where the
/// memory system is strictly cheaper.
inline Heatmap heatmap_grid(const GridRange& l_range, const GridRange& n_range, const CostParams& base = {}) {
  if (l_range.min < 0) throw InvalidInput("context range must be >= 0");
  if (n_range.min < 1) throw InvalidInput("turn range must start at >= 1");
  Heatmap h;
  h.context_lengths = l_range.points();
  h.turns = n_range.points();
  h.diff.reserve(h.context_lengths.size() * h.turns.size());
  for (auto l : h.context_lengths) {
    const TurnCosts t = turn_costs(base.with_context(l));
    for (auto n : h.turns) h.diff.push_back(lc_cost(t, n) - mem_cost(t, n));
    h.boundary.push_back(break_even_search(t, n_range.max).n_be);
  }
  return h;
}

inline void write_heatmap_csv(std::ostream& os, const Heatmap& h) {
  os << "L,N,diff_usd\n";
  for (std::size_t i = 0; i < h.context_lengths.size(); ++i) {
    for (std::size_t j = 0; j < h.turns.size(); ++j) {
      os << h.context_lengths[i] << ',' << h.turns[j] << ',' << h.at(i, j).to_string(6) << '\n';
    }
  }
}

inline void write_boundary_csv(std::ostream& os, const Heatmap& h) {
  os << "L,n_be\n";
  for (std::size_t i = 0; i < h.context_lengths.size(); ++i) {
    os << h.context_lengths[i] << ',';
    if (h.boundary[i]) os << *h.boundary[i];
    os << '\n';
  }
}

/// Binary greyscale PGM, one pixel per cell; rows run from the largest L at
/// the top. Mid-grey is break-even, darker means memory is cheaper, lighter
/// means LC is cheaper, scaled by the largest |diff|.
inline void write_heatmap_pgm(std::ostream& os, const Heatmap& h) {
  const std::size_t rows = h.context_lengths.size();
  const std::size_t cols = h.turns.size();
  std::int64_t max_abs = 0;
  for (const auto& d : h.diff) max_abs = std::max<std::int64_t>(max_abs, std::llabs(d.micros()));
  os << "P5\n" << cols << ' ' << rows << "\n255\n";
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t i = rows - 1 - r;
    for (std::size_t j = 0; j < cols; ++j) {
      const std::int64_t d = h.at(i, j).micros();
      int v = 128;
      if (max_abs > 0) {
        v = 128 - static_cast<int>(std::lround(127.0 * static_cast<double>(d) / static_cast<double>(max_abs)));
      }
      os.put(static_cast<char>(static_cast<unsigned char>(std::clamp(v, 0, 255))));
    }
  }
}

}  // namespace memcost::cost_model
