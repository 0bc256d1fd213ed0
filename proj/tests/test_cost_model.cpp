#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "memcost/core/error.hpp"
#include "memcost/cost_model/cost_model.hpp"
#include "memcost/cost_model/heatmap.hpp"

using namespace memcost;
using namespace memcost::cost_model;

namespace {

const Money kTol = Money::parse("0.0005");

::testing::AssertionResult near(Money got, const char* want) {
  const Money w = Money::parse(want);
  const Money d = got > w ? got - w : w - got;
  if (d <= kTol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "got " << got.to_string(6) << " want " << want;
}

TurnCosts tc(const char* write, const char* read, const char* first, const char* cached) {
  return {Money::parse(write), Money::parse(read), Money::parse(first), Money::parse(cached)};
}

}  // namespace

TEST(LcCost, Examples) {
  EXPECT_TRUE(near(lc_cost(CostParams::defaults(100000), 1), "0.0261"));
  const auto p0 = CostParams::defaults(0);
  EXPECT_EQ(lc_cost(p0, 5), Money::from_micros(5 * p0.lc_output_cost_per_turn.micros()));
  EXPECT_TRUE(near(lc_cost(CostParams::defaults(101601), 20), "0.0947"));
  EXPECT_THROW(lc_cost(CostParams::defaults(1000), 0), InvalidInput);
}

TEST(MemCost, Examples) {
  EXPECT_TRUE(near(mem_cost(CostParams::defaults(101601), 1), "0.0450"));
  const auto p = CostParams::defaults(77777);
  EXPECT_EQ(mem_cost(p, 0), turn_costs(p).write);
  EXPECT_EQ(mem_cost(tc("0.0129", "0.0013", "0", "0"), 20), Money::parse("0.0389"));
  EXPECT_THROW(mem_cost(p, -1), InvalidInput);
}

TEST(CostCurves, AffineIncrements) {
  for (std::int64_t l : {0LL, 30000LL, 101601LL, 500000LL}) {
    const auto p = CostParams::defaults(l);
    const auto t = turn_costs(p);
    for (std::int64_t n = 1; n < 40; ++n) {
      EXPECT_EQ(lc_cost(p, n + 1) - lc_cost(p, n), t.cached_turn);
      EXPECT_EQ(mem_cost(p, n + 1) - mem_cost(p, n), p.read_cost_per_turn);
    }
    EXPECT_EQ(mem_cost(p, 1) - mem_cost(p, 0), p.read_cost_per_turn);
  }
}

TEST(CostCurves, CurveMustIncrease) {
  const auto p = CostParams::defaults(101601);
  std::vector<std::int64_t> turns{1, 5, 10, 15, 20};
  const auto curve = cost_curve(p, turns);
  ASSERT_EQ(curve.size(), 5u);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GT(curve[i].c_lc, curve[i - 1].c_lc);
  std::vector<std::int64_t> bad{1, 1};
  EXPECT_THROW(cost_curve(p, bad), InvalidInput);
  std::vector<std::int64_t> zero{0};
  EXPECT_THROW(cost_curve(p, zero), InvalidInput);
}

TEST(CostTable, CumulativeCostAtLongMemEvalMean) {
  const auto p = CostParams::defaults(101601);
  const char* mem[] = {"0.0450", "0.0502", "0.0568", "0.0634", "0.0700"};
  const char* lc[] = {"0.0265", "0.0408", "0.0588", "0.0768", "0.0947"};
  const std::int64_t ns[] = {1, 5, 10, 15, 20};
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(near(mem_cost(p, ns[i]), mem[i])) << "N=" << ns[i];
    EXPECT_TRUE(near(lc_cost(p, ns[i]), lc[i])) << "N=" << ns[i];
  }
  const auto t = turn_costs(p);
  EXPECT_NEAR(savings_pct(t, 15), 17.0, 2.0);
  EXPECT_NEAR(savings_pct(t, 20), 26.0, 2.0);
  EXPECT_LT(savings_pct(t, 1), 0.0);
}

TEST(BreakEven, Examples) {
  EXPECT_EQ(break_even_search(tc("0.0129", "0.0013", "0.0086", "0.0018")).n_be, 13);
  EXPECT_EQ(break_even_search(tc("0.0437", "0.0013", "0.0265", "0.00359")).n_be, 10);
  // read >= cached and write >= first - cached: memory never wins
  EXPECT_FALSE(break_even_search(tc("0.05", "0.004", "0.03", "0.003")).n_be);
  EXPECT_EQ(break_even(CostParams::defaults(101601)).n_be, 10);
  EXPECT_THROW(break_even_search(tc("0", "0", "0", "0"), 0), InvalidInput);
}

TEST(BreakEven, StrictInequalityAtExactTie) {
  // mem(n) = 10 + n, lc(n) = 5 + 2(n-1) + ... tie at n=7 (17 vs 17), strict win at 8
  const TurnCosts t{Money::from_micros(10), Money::from_micros(1), Money::from_micros(5), Money::from_micros(2)};
  EXPECT_EQ(mem_cost(t, 7), lc_cost(t, 7) + Money::from_micros(0));
  EXPECT_EQ(break_even_search(t).n_be, 8);
  EXPECT_EQ(break_even_closed_form(t).n_be, 8);
}

TEST(BreakEven, ResultSatisfiesItsInvariant) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::int64_t> d(0, 60000);
  for (int i = 0; i < 500; ++i) {
    const TurnCosts t{Money::from_micros(d(rng)), Money::from_micros(d(rng) / 10), Money::from_micros(d(rng)),
                      Money::from_micros(d(rng) / 10)};
    const auto r = break_even_search(t, 2000);
    if (!r.n_be) continue;
    EXPECT_LT(mem_cost(t, *r.n_be), lc_cost(t, *r.n_be));
    for (std::int64_t n = 1; n < *r.n_be; ++n) EXPECT_GE(mem_cost(t, n), lc_cost(t, n));
  }
}

TEST(BreakEven, ClosedFormMatchesScanOnRandomParams) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::int64_t> len(0, 1'000'000);
  std::uniform_int_distribution<std::int64_t> rate(0, 3'000'000);  // micro-USD per 1M tokens
  std::uniform_int_distribution<std::int64_t> small(0, 20'000);
  for (int i = 0; i < 1000; ++i) {
    CostParams p;
    p.context_tokens = len(rng);
    const auto in = rate(rng);
    p.lc_input_rate = Rate::per_million(Money::from_micros(in));
    p.lc_cached_rate = Rate::per_million(Money::from_micros(std::uniform_int_distribution<std::int64_t>(0, in)(rng)));
    p.lc_output_cost_per_turn = Money::from_micros(small(rng));
    p.write_rate = Rate::per_million(Money::from_micros(rate(rng)));
    p.read_cost_per_turn = Money::from_micros(small(rng));
    const auto t = turn_costs(p);
    EXPECT_EQ(break_even_search(t), break_even_closed_form(t)) << "draw " << i;
  }
}

TEST(BreakEven, SingleCrossingWhenCachedTurnExceedsRead) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::int64_t> d(0, 100'000);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const TurnCosts t{Money::from_micros(d(rng)), Money::from_micros(d(rng) / 20), Money::from_micros(d(rng)),
                      Money::from_micros(d(rng) / 10)};
    if (t.cached_turn <= t.read) continue;
    ++checked;
    int sign_changes = 0;
    bool prev = mem_cost(t, 1) < lc_cost(t, 1);
    for (std::int64_t n = 2; n <= 3000; ++n) {
      const bool cur = mem_cost(t, n) < lc_cost(t, n);
      sign_changes += cur != prev;
      EXPECT_FALSE(prev && !cur) << "memory stopped winning at n=" << n;
      prev = cur;
    }
    EXPECT_LE(sign_changes, 1);
  }
  EXPECT_GT(checked, 100);
}

TEST(Sensitivity, BreakEvenTableRows) {
  std::vector<std::int64_t> ls{30000, 100000, 200000, 500000};
  const auto rows = sensitivity_table(ls);
  const char* write[] = {"0.0129", "0.0430", "0.0859", "0.2148"};
  const char* t1[] = {"0.0086", "0.0261", "0.0511", "0.1261"};
  const char* tn[] = {"0.0018", "0.0036", "0.0061", "0.0136"};
  const std::int64_t nbe[] = {13, 10, 9, 9};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(near(rows[i].write_cost, write[i]));
    EXPECT_TRUE(near(rows[i].lc_turn1, t1[i]));
    EXPECT_TRUE(near(rows[i].lc_turn_n, tn[i]));
    ASSERT_TRUE(rows[i].n_be.n_be);
    EXPECT_LE(std::llabs(*rows[i].n_be.n_be - nbe[i]), 1);
  }
  EXPECT_EQ(rows[0].write_cost.to_usd(4), "$0.0129");
  EXPECT_EQ(rows[3].write_cost.to_usd(4), "$0.2148");
}

TEST(Sensitivity, ZeroContext) {
  std::vector<std::int64_t> ls{0};
  const auto p = CostParams{};
  const auto row = sensitivity_table(ls, p).front();
  EXPECT_EQ(row.write_cost, Money{});
  EXPECT_EQ(row.lc_turn1, p.lc_output_cost_per_turn);
  EXPECT_EQ(row.n_be, break_even_closed_form(turn_costs(p.with_context(0))));
  std::vector<std::int64_t> none;
  EXPECT_THROW(sensitivity_table(none), InvalidInput);
  std::vector<std::int64_t> neg{-1};
  EXPECT_THROW(sensitivity_table(neg), InvalidInput);
}

TEST(Params, Validation) {
  auto p = CostParams::defaults(10);
  EXPECT_NO_THROW(validate(p));
  p.lc_cached_rate = Rate::usd_per_million("1");
  EXPECT_THROW(validate(p), InvalidInput);
  p = CostParams::defaults(-5);
  EXPECT_THROW(validate(p), InvalidInput);
}

TEST(Heatmap, GridRangeParsing) {
  const auto r = GridRange::parse("10000:500000:5");
  EXPECT_EQ(r.points(), (std::vector<std::int64_t>{10000, 132500, 255000, 377500, 500000}));
  EXPECT_THROW(GridRange::parse("1:2"), InvalidInput);
  EXPECT_THROW(GridRange::parse("a:2:3"), InvalidInput);
  EXPECT_THROW(GridRange::parse("1:2:1").points(), InvalidInput);
  EXPECT_THROW(GridRange::parse("5:2:3").points(), InvalidInput);
}

TEST(Heatmap, CellSignsAndBoundary) {
  const auto h = heatmap_grid(GridRange{100000, 100000 + 1, 2}, GridRange{1, 10, 10});
  EXPECT_LT(h.at(0, 0).micros(), 0);  // N=1: LC cheaper
  EXPECT_GT(h.at(0, 9).micros(), 0);  // N=10: memory cheaper
  const auto p = CostParams::defaults(100000);
  EXPECT_EQ(h.at(0, 9), lc_cost(p, 10) - mem_cost(p, 10));
}

TEST(Heatmap, BoundaryNonIncreasingInContextLength) {
  const std::pair<GridRange, GridRange> grids[] = {{GridRange{10000, 1000000, 60}, GridRange{1, 60, 60}},
                                                   {kDefaultContextGrid, kDefaultTurnGrid}};
  for (const auto& [lr, nr] : grids) {
    const auto h = heatmap_grid(lr, nr);
    std::optional<std::int64_t> prev;
    bool seen = false;
    for (const auto& b : h.boundary) {
      if (!b) {
        EXPECT_FALSE(seen) << "boundary vanished after appearing";
        continue;
      }
      if (prev) {
        EXPECT_LE(*b, *prev);
      }
      prev = b;
      seen = true;
    }
    EXPECT_TRUE(seen);
  }
}

TEST(Heatmap, CsvAndPgmOutput) {
  const auto h = heatmap_grid(GridRange{0, 100000, 2}, GridRange{1, 10, 2});
  std::ostringstream csv, boundary, pgm;
  write_heatmap_csv(csv, h);
  write_boundary_csv(boundary, h);
  write_heatmap_pgm(pgm, h);
  const auto p0 = CostParams::defaults(0);
  std::ostringstream expect;
  expect << "L,N,diff_usd\n"
         << "0,1," << (lc_cost(p0, 1) - mem_cost(p0, 1)).to_string(6) << "\n";
  const std::string table = csv.str();
  EXPECT_EQ(table.rfind(expect.str(), 0), 0u) << table;
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 5);
  // L=0: read 0.0013 > output 0.00105 per turn, write 0: no break-even.
  EXPECT_EQ(boundary.str(), "L,n_be\n0,\n100000,10\n");
  const std::string img = pgm.str();
  EXPECT_EQ(img.rfind("P5\n2 2\n255\n", 0), 0u);
  EXPECT_EQ(img.size(), std::string("P5\n2 2\n255\n").size() + 4);
}

TEST(Heatmap, InvalidRanges) {
  EXPECT_THROW(heatmap_grid(GridRange{-5, 10, 2}, GridRange{1, 10, 2}), InvalidInput);
  EXPECT_THROW(heatmap_grid(GridRange{0, 10, 2}, GridRange{0, 10, 2}), InvalidInput);
}
