#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "hmaj/error.hpp"
#include "hmaj/oracle.hpp"
#include "hmaj/verify.hpp"
#include "support/independent.hpp"

namespace hmaj::oracle {
namespace {

NormalizedConfig P(std::vector<double> v) { return NormalizedConfig::from_probs(std::move(v)); }

TEST(Enumerate, SmallCases) {
  EXPECT_EQ(enumerate_outcomes(2, 2), (std::vector<std::vector<Count>>{{2, 0}, {1, 1}, {0, 2}}));
  const auto three = enumerate_outcomes(1, 3);
  EXPECT_EQ(std::set(three.begin(), three.end()),
            (std::set<std::vector<Count>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(enumerate_outcomes(4, 3).size(), 15u);
}

TEST(Enumerate, CoversCompositionsOnce) {
  for (Count h = 0; h <= 6; ++h) {
    for (std::size_t k = 1; k <= 5; ++k) {
      const auto all = enumerate_outcomes(h, k);
      std::set<std::vector<Count>> unique(all.begin(), all.end());
      EXPECT_EQ(unique.size(), all.size());
      EXPECT_EQ(all.size(), count_outcomes(h, k));
      for (const auto& x : all) EXPECT_EQ(std::accumulate(x.begin(), x.end(), Count{0}), h);
    }
  }
}

TEST(Enumerate, GuardThrowsTooLarge) {
  try {
    for_each_outcome(200, 16, [](auto) {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}

TEST(Pmf, Examples) {
  const std::vector<Count> a{2, 0}, b{1, 1}, c{1, 1, 0};
  EXPECT_DOUBLE_EQ(multinomial_pmf(a, 2, P({1.0, 0.0})), 1.0);
  EXPECT_NEAR(multinomial_pmf(b, 2, P({0.5, 0.5})), 0.5, 1e-15);
  EXPECT_NEAR(multinomial_pmf(c, 2, P({1.0 / 3, 1.0 / 3, 1.0 / 3})), 2.0 / 9.0, 1e-14);
  EXPECT_EQ(multinomial_pmf(b, 2, P({1.0, 0.0})), 0.0);
}

TEST(Pmf, Errors) {
  const std::vector<Count> x{1, 1};
  EXPECT_THROW(multinomial_pmf(x, 3, P({0.5, 0.5})), Error);
  EXPECT_THROW(multinomial_pmf(x, 2, P({0.5, 0.25, 0.25})), Error);
}

TEST(Pmf, SumsToOne) {
  const auto p = P({0.1, 0.2, 0.3, 0.4});
  double total = 0.0;
  for_each_outcome(9, 4, [&](std::span<const Count> x) { total += multinomial_pmf(x, 9, p); });
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(WinDistribution, UniformThree) {
  const auto w = win_distribution(2, P({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  for (double q : w.q) EXPECT_NEAR(q, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(w.q_strict[0], 1.0 / 9.0, 1e-14);
  EXPECT_NEAR(w.q_ties[0], 5.0 / 9.0, 1e-14);
}

TEST(WinDistribution, ThreeDrawsTwoOpinions) {
  const auto w = win_distribution(3, P({0.6, 0.4}));
  EXPECT_NEAR(w.q[0], 0.648, 1e-14);
  EXPECT_NEAR(w.q[1], 0.352, 1e-14);
}

TEST(WinDistribution, MatchesSequenceEnumeration) {
  std::mt19937_64 gen(99);
  std::exponential_distribution<double> expo(1.0);
  for (int h = 1; h <= 5; ++h) {
    for (std::size_t k = 2; k <= 4; ++k) {
      for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> v(k);
        double s = 0.0;
        for (double& x : v) s += (x = expo(gen));
        for (double& x : v) x /= s;
        const auto p = NormalizedConfig{v, 0};
        const auto w = win_distribution(h, p);
        const auto ref = testing::naive_win(h, v);
        for (std::size_t i = 0; i < k; ++i) {
          EXPECT_NEAR(w.q[i], ref.q[i], 1e-10);
          EXPECT_NEAR(w.q_strict[i], ref.q_strict[i], 1e-10);
          EXPECT_NEAR(w.q_ties[i], ref.q_ties[i], 1e-10);
        }
      }
    }
  }
}

TEST(WinDistribution, Invariants) {
  for (std::size_t k = 2; k <= 4; ++k) {
    for (const auto& p : verify::sorted_simplex_grid(k, 10)) {
      for (Count h = 1; h <= 6; ++h) {
        const auto w = win_distribution(h, p);
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          total += w.q[i];
          EXPECT_LE(w.q_strict[i], w.q[i] + 1e-12);
          EXPECT_LE(w.q[i], w.q_ties[i] + 1e-12);
          EXPECT_GE(w.q[i], 0.0);
          EXPECT_LE(w.q_ties[i], 1.0 + 1e-12);
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_NEAR(w.q_strict_pair_12, w.q_strict[0] + w.q_strict[1], 1e-12);
      }
    }
  }
}

TEST(WinDistribution, InjectedFaultChangesTies) {
  const auto p = P({0.5, 0.5});
  const auto good = win_distribution(2, p);
  const auto bad = win_distribution(2, p, Options{TieSplit::LowestIndexWins});
  EXPECT_NEAR(good.q[0], 0.5, 1e-15);
  EXPECT_NEAR(bad.q[0], 0.75, 1e-15);
}

TEST(BinomialPair, Examples) {
  EXPECT_NEAR(binomial_pair_report(1, 0.6).diff_unconditional, 0.2, 1e-15);
  EXPECT_NEAR(binomial_pair_report(3, 0.6).diff_unconditional, 0.296, 1e-14);
  const auto r = binomial_pair_report(2, 0.6);
  EXPECT_NEAR(r.diff_given_max_ge.at(2), 0.2 / 0.52, 1e-12);
  EXPECT_NEAR(r.diff_given_max_ge.at(1), 0.2, 1e-12);
}

TEST(BinomialPair, MatchesDirectSummation) {
  for (int m : {1, 2, 5, 10, 31, 64}) {
    for (double q : {0.51, 0.6, 0.75, 0.93}) {
      const auto r = binomial_pair_report(m, q);
      EXPECT_NEAR(r.diff_unconditional, testing::pair_diff(m, q), 1e-12);
      for (const auto& [threshold, diff] : r.diff_given_max_ge) {
        EXPECT_NEAR(diff, testing::pair_diff(m, q, static_cast<int>(threshold)), 1e-12) << m << ' ' << q;
      }
      EXPECT_NEAR(r.lemma9_bound, std::sqrt(2.0 * m / std::numbers::pi) * g_function(2 * q - 1, m), 1e-15);
    }
  }
}

TEST(BinomialPair, RejectsBadArguments) {
  for (double q : {0.5, 1.0, 0.2}) {
    try {
      binomial_pair_report(3, q);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidQ);
    }
  }
  EXPECT_THROW(binomial_pair_report(0, 0.6), Error);
}

TEST(GFunction, Examples) {
  for (Count h : {1, 2, 10, 100}) EXPECT_EQ(g_function(0.0, h), 0.0);
  for (double d : {0.1, 0.5, 0.9}) EXPECT_DOUBLE_EQ(g_function(d, 1), d);
  EXPECT_NEAR(g_function(0.9, 4), 0.5 * std::pow(0.75, 1.5), 1e-15);
  EXPECT_NEAR(g_function(0.9, 4), 0.324760, 1e-6);
}

TEST(GFunction, ContinuousAtBranchPoint) {
  for (Count h = 2; h <= 50; ++h) {
    const double edge = 1.0 / std::sqrt(static_cast<double>(h));
    EXPECT_NEAR(g_function(edge - 1e-9, h), g_function(edge, h), 1e-9) << h;
  }
}

TEST(EventReport, SymmetricPair) {
  const auto r = event_report(2, P({0.5, 0.5}), 0.25);
  EXPECT_NEAR(r.cond_diff_majority, 0.0, 1e-15);
  EXPECT_NEAR(r.cond_diff_comparison, 0.0, 1e-15);
  EXPECT_NEAR(r.pr_conditioning_event, 1.0, 1e-15);
}

TEST(EventReport, EqualityAndDominanceOnGrid) {
  for (std::size_t k = 2; k <= 4; ++k) {
    for (const auto& p : verify::sorted_simplex_grid(k, 10)) {
      for (Count h = 1; h <= 6; ++h) {
        const auto r = event_report(h, p, 0.25);
        EXPECT_NEAR(r.cond_diff_majority, r.cond_diff_comparison, 1e-12);
        EXPECT_GE(r.sum_tail_conditional, r.sum_tail_unconditional - 1e-12);
      }
    }
  }
}

TEST(EventReport, FaultBreaksEquality) {
  const auto r = event_report(2, P({0.5, 0.3, 0.2}), 0.25, Options{TieSplit::LowestIndexWins});
  EXPECT_GT(std::abs(r.cond_diff_majority - r.cond_diff_comparison), 1e-3);
}

TEST(EventReport, RareAndStrongSets) {
  const auto r = event_report(3, P({0.5, 0.3, 0.15, 0.05}), 0.25);
  EXPECT_EQ(r.strong_set, (std::vector<Opinion>{1, 2}));
  EXPECT_EQ(r.rare_set, (std::vector<Opinion>{4}));
}

TEST(EventReport, RequiresSortedInput) {
  try {
    event_report(3, P({0.2, 0.8}), 0.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSorted);
  }
}

TEST(EventReport, ReductionPathAgrees) {
  for (const auto& p : verify::sorted_simplex_grid(4, 10)) {
    for (Count h = 1; h <= 7; ++h) {
      const auto a = event_report(h, p, 0.25);
      const auto b = event_report_by_reduction(h, p);
      EXPECT_NEAR(a.pr_conditioning_event, b.pr_conditioning_event, 1e-12);
      EXPECT_NEAR(a.cond_diff_comparison, b.cond_diff_comparison, 1e-12);
      EXPECT_NEAR(a.sum_tail_conditional, b.sum_tail_conditional, 1e-12);
    }
  }
}

TEST(Relabel, SortsDescending) {
  const auto p = P({0.2, 0.5, 0.3});
  const auto order = descending_order(p);
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_EQ(relabel(p, order).probs, (std::vector<double>{0.5, 0.3, 0.2}));
}

TEST(TieMap, NoTiesWithSingleOpinion) {
  const auto a = tie_map_audit(4, P({1.0}));
  EXPECT_TRUE(a.entries.empty());
  EXPECT_TRUE(a.injective);
  EXPECT_NEAR(a.strict_over_ties, 1.0, 1e-15);
}

TEST(TieMap, UniformThreeDrawsTwo) {
  // T_1 = {(1,1,0), (1,0,1)}; the weakest strong opinion has count 0, so f
  // is undefined on both.
  const auto a = tie_map_audit(2, P({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  ASSERT_EQ(a.entries.size(), 2u);
  EXPECT_EQ(a.undefined_count, 2u);
  EXPECT_TRUE(a.injective);
}

TEST(TieMap, StealsFromWeakestStrongOpinion) {
  const auto a = tie_map_audit(5, P({0.4, 0.3, 0.3}));
  bool seen = false;
  for (const auto& e : a.entries) {
    if (e.outcome == std::vector<Count>{2, 2, 1}) {
      seen = true;
      EXPECT_EQ(e.j, Opinion{3});
      EXPECT_EQ(e.image, (std::vector<Count>{3, 2, 0}));
      EXPECT_NEAR(e.pmf_ratio, 1.0 / 3.0 * 0.4 / 0.3, 1e-12);
    }
  }
  EXPECT_TRUE(seen);
  EXPECT_TRUE(a.injective);
  EXPECT_TRUE(a.images_strict);
  EXPECT_TRUE(a.ratio_identity_ok());
}

TEST(TieMap, RatioIdentityOnGrid) {
  for (std::size_t k = 2; k <= 4; ++k) {
    for (const auto& p : verify::sorted_simplex_grid(k, 10)) {
      for (Count h = 2; h <= 7; ++h) {
        const auto a = tie_map_audit(h, p);
        EXPECT_TRUE(a.injective);
        EXPECT_TRUE(a.images_strict);
        for (const auto& e : a.entries) {
          if (e.image.empty()) continue;
          const double direct = multinomial_pmf(e.image, h, p) / multinomial_pmf(e.outcome, h, p);
          EXPECT_NEAR(e.pmf_ratio / direct, 1.0, 1e-12);
          EXPECT_NEAR(e.formula_ratio / direct, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(TieMap, AnyIndexReadingCollides) {
  // j ranging over every opinion sends (1,1,0) and (1,0,1) to (2,0,0).
  const auto a = tie_map_audit(2, P({0.9, 0.05, 0.05}));
  EXPECT_FALSE(a.injective_any_index);
  EXPECT_TRUE(a.injective);
}

}  // namespace
}  // namespace hmaj::oracle
