#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "copot/counterexample.hpp"
#include "copot/instances.hpp"

using namespace copot;

namespace {

long double monge_fd(double p, double q, double u1, double u2) {
  auto f = [&](long double a, long double b) {
    return -std::pow(std::pow(a, static_cast<long double>(q)) + std::pow(b, static_cast<long double>(q)),
                     static_cast<long double>(p) / q);
  };
  const long double h = 1e-5L;
  return (f(u1 + h, u2 + h) - f(u1 + h, u2 - h) - f(u1 - h, u2 + h) + f(u1 - h, u2 - h)) / (4 * h * h);
}

// Direct summation for independence at resolution k, pair (0, 1).
PairCosts independence_costs(std::size_t k, double p, double q, double eps) {
  const bool counter = q < p;
  auto m = [&](std::size_t r) { return (static_cast<double>(r) + 0.5) / static_cast<double>(k); };
  auto score = [&](double a, double b) { return std::pow(std::pow(a, q) + std::pow(b, q), p / q); };
  const double kd = static_cast<double>(k);
  PairCosts out;
  for (std::size_t a = 0; a < k; ++a) {
    const double partner = m(counter ? k - 1 - a : a);
    for (std::size_t b = 0; b < k; ++b) {
      out.diamond += score((1 - eps) * m(a), (1 - eps) * m(b)) / (kd * kd);
      for (std::size_t c = 0; c < k; ++c) {
        out.alt += score(std::abs(m(a) - eps * m(c)), std::abs(eps * m(b) - partner)) / (kd * kd * kd);
      }
    }
  }
  return out;
}

// Bins every atom by the rank of each coordinate among that marginal's
// distinct values.
std::vector<double> rank_binned(const MultivariateMeasure& m, std::size_t k) {
  const std::size_t n = m.dimension();
  std::vector<std::map<double, std::size_t>> ranks(n);
  for (std::size_t r = 0; r < m.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) ranks[i][m.atom(r)[i]] = 0;
  }
  for (auto& rk : ranks) {
    std::size_t next = 0;
    for (auto& [value, rank] : rk) rank = next++;
  }
  std::vector<double> out(detail::ipow(k, n), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n; ++i) flat = flat * k + ranks[i].at(m.atom(r)[i]);
    out[flat] += m.weight(r);
  }
  return out;
}

double sign(double x) { return static_cast<double>((x > 0) - (x < 0)); }

}  // namespace

TEST(MongeCrossPartial, Examples) {
  EXPECT_EQ(monge_cross_partial(2.0, 2.0, 0.3, 0.8), 0.0);
  EXPECT_DOUBLE_EQ(monge_cross_partial(2.0, 1.0, 0.5, 0.5), -2.0);
  EXPECT_NEAR(static_cast<double>(monge_fd(2.0, 1.0, 0.5, 0.5)), -2.0, 1e-4);
  EXPECT_GT(monge_cross_partial(1.0, 2.0, 0.5, 0.5), 0.0);
  EXPECT_GT(monge_fd(1.0, 2.0, 0.5, 0.5), 0.0L);
  EXPECT_THROW(monge_cross_partial(2.0, 1.0, 0.0, 0.5), std::invalid_argument);
  EXPECT_THROW(monge_cross_partial(2.0, 1.0, 0.5, 1.0), std::invalid_argument);
}

TEST(MongeCrossPartial, SignLawAgainstFiniteDifferences) {
  Rng rng(5);
  for (int t = 0; t < 2000; ++t) {
    const double p = rng.uniform(1.0, 4.0);
    const double q = rng.uniform(1.0, 4.0);
    if (std::abs(p - q) < 0.05) continue;
    const double u1 = rng.uniform(0.01, 0.99);
    const double u2 = rng.uniform(0.01, 0.99);
    const double d = monge_cross_partial(p, q, u1, u2);
    EXPECT_EQ(sign(d), sign(q - p));
    EXPECT_LE(std::abs(static_cast<double>(monge_fd(p, q, u1, u2)) - d), 1e-4 * std::abs(d));
  }
}

TEST(Adversary, FollowsSignOfQMinusP) {
  EXPECT_EQ(adversary_copula(2.0, 1.0), AdversaryChoice::countermonotone);
  EXPECT_EQ(adversary_copula(1.0, 2.0), AdversaryChoice::comonotone);
  EXPECT_THROW(adversary_copula(2.0, 2.0), std::invalid_argument);
}

TEST(FindViolatingPair, Examples) {
  const auto found = find_violating_pair(independence(2, 4), 1.0, 2.0, 5);
  ASSERT_TRUE(found.has_value());
  EXPECT_EQ(found->i, 0u);
  EXPECT_EQ(found->j, 1u);
  EXPECT_LT(found->ui * found->uj, std::min(found->ui, found->uj));
  EXPECT_FALSE(find_violating_pair(comonotone(3), 1.0, 2.0, 9).has_value());
  EXPECT_TRUE(find_violating_pair(comonotone(3), 2.0, 1.0, 9).has_value());
  EXPECT_FALSE(find_violating_pair(countermonotone(), 2.0, 1.0, 9).has_value());
  EXPECT_FALSE(find_violating_pair(discretize(comonotone(2), 8), 1.0, 2.0, 9).has_value());
  EXPECT_FALSE(find_violating_pair(discretize(countermonotone(), 8), 2.0, 1.0, 9).has_value());
}

TEST(BuildPair, IndependenceGapMatchesDirectSummation) {
  const Copula c = independence(2, 16);
  const auto built = build_pair(c, 1.0, 2.0, 0, 1, 0.05);
  const CostSpec spec(1.0, 2.0);
  const PairCosts oracle = independence_costs(16, 1.0, 2.0, 0.05);
  EXPECT_NEAR(plan_cost(built.diamond_plan, spec), oracle.diamond, 1e-12);
  EXPECT_NEAR(plan_cost(built.alt_plan, spec), oracle.alt, 1e-12);
  EXPECT_GT(oracle.diamond - oracle.alt, 0.0);
  const PairCosts streamed = pair_costs(c, 1.0, 2.0, 0, 1, 0.05);
  EXPECT_NEAR(streamed.diamond, oracle.diamond, 1e-12);
  EXPECT_NEAR(streamed.alt, oracle.alt, 1e-12);
}

TEST(BuildPair, CountermonotoneGapMatchesDirectSummation) {
  const PairCosts got = pair_costs(independence(2, 8), 2.0, 1.0, 0, 1, 0.125);
  const PairCosts oracle = independence_costs(8, 2.0, 1.0, 0.125);
  EXPECT_NEAR(got.diamond, oracle.diamond, 1e-12);
  EXPECT_NEAR(got.alt, oracle.alt, 1e-12);
}

TEST(BuildPair, EqualPowersDiamondIsOptimal) {
  const Copula c = independence(2, 16);
  const CostSpec spec(2.0, 2.0);
  for (double eps : {0.5, 0.125, 0.01}) {
    for (auto adversary : {AdversaryChoice::comonotone, AdversaryChoice::countermonotone}) {
      const auto built = build_pair(c, adversary, 0, 1, eps);
      const double d = plan_cost(built.diamond_plan, spec);
      EXPECT_LE(d - plan_cost(built.alt_plan, spec), 1e-12);
      EXPECT_NEAR(exact_ot(built.mu, built.rho, spec).value, d, 1e-8 * std::max(1.0, d));
    }
  }
}

TEST(BuildPair, RejectsBadArguments) {
  const Copula c = independence(3, 2);
  EXPECT_THROW(build_pair(c, 1.0, 2.0, 0, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(build_pair(c, 1.0, 2.0, 0, 1, 1.0), std::invalid_argument);
  EXPECT_THROW(build_pair(c, 1.0, 2.0, 1, 1, 0.5), std::out_of_range);
  EXPECT_THROW(build_pair(c, 1.0, 2.0, 0, 3, 0.5), std::out_of_range);
  EXPECT_THROW(build_pair(comonotone(2), 1.0, 2.0, 0, 1, 0.5), std::invalid_argument);
}

TEST(LimitScores, IndependenceClosedForms) {
  const Copula c = independence(2, 16);
  const auto up = limit_scores(c, 0, 1, 2.0, 1.0);
  // Midpoint sums: E(U+V)^2 = 7/6 - 1/(6k^2); (U + 1 - U)^2 = 1.
  EXPECT_NEAR(up.diamond, 7.0 / 6.0 - 1.0 / (6.0 * 256.0), 1e-12);
  EXPECT_NEAR(up.diamond, 7.0 / 6.0, 2e-3);
  EXPECT_NEAR(up.alt, 1.0, 1e-12);

  const double closed = (std::numbers::sqrt2 + std::log(1.0 + std::numbers::sqrt2)) / 3.0;
  double integral = 0.0;
  constexpr int cells = 1000;
  for (int a = 0; a < cells; ++a) {
    for (int b = 0; b < cells; ++b) integral += std::hypot((a + 0.5) / cells, (b + 0.5) / cells);
  }
  integral /= static_cast<double>(cells) * cells;
  EXPECT_NEAR(integral, closed, 1e-6);

  const auto down = limit_scores(c, 0, 1, 1.0, 2.0);
  EXPECT_NEAR(down.diamond, integral, 2e-3);
  EXPECT_NEAR(down.alt, std::numbers::sqrt2 / 2.0, 2e-3);
}

TEST(LimitScores, ComonotoneMarginHasNoGap) {
  const auto s = limit_scores(discretize(comonotone(2), 16), 0, 1, 1.0, 2.0);
  EXPECT_NEAR(s.diamond, s.alt, 1e-15);
}

TEST(GapSearch, IndependenceBothDirections) {
  const Copula c = independence(2, 16);
  for (auto [p, q] : {std::pair{1.0, 2.0}, std::pair{2.0, 1.0}}) {
    const auto res = gap_search(c, p, q);
    EXPECT_TRUE(res.report.success);
    EXPECT_GE(res.report.epsilon, 0.5 * std::pow(2.0, -15));
    EXPECT_GT(res.report.gap, 0.0);
    ASSERT_TRUE(res.report.exact_cost.has_value());
    EXPECT_LE(*res.report.exact_cost, res.report.alt_cost + 1e-12);
    EXPECT_LT(res.report.alt_cost, res.report.diamond_cost);
    EXPECT_EQ(res.curve.size(), 16u);
  }
}

TEST(GapSearch, ExtremalCopulasHaveNoViolatingPair) {
  EXPECT_THROW(gap_search(discretize(comonotone(2), 16), 1.0, 2.0), NoViolatingPair);
  EXPECT_THROW(gap_search(discretize(countermonotone(), 16), 2.0, 1.0), NoViolatingPair);
  EXPECT_THROW(gap_search(comonotone(2), 1.0, 2.0), std::invalid_argument);
}

TEST(GapSearch, ReportsFailureWhenThresholdIsUnreachable) {
  GapSearchOptions options;
  options.rel_threshold = 1e6;
  options.asymptotic_fraction = 0.0;
  const auto res = gap_search(independence(2, 4), 1.0, 2.0, options);
  EXPECT_FALSE(res.report.success);
  EXPECT_FALSE(res.report.exact_cost.has_value());
  double best = res.curve.front().gap;
  for (const auto& pt : res.curve) best = std::max(best, pt.gap);
  EXPECT_EQ(res.report.gap, best);
}

class CounterexampleProperties : public ::testing::Test {
 protected:
  Rng rng{2718};
  InstanceLimits limits;

  struct Case {
    Copula c;
    double p;
    double q;
    ViolatingPair pair;
  };

  // Random checkerboards (k >= 2) that admit the construction.
  std::vector<Case> cases(std::size_t count) {
    limits.max_resolution = 5;
    std::vector<Case> out;
    while (out.size() < count) {
      const std::size_t n = static_cast<std::size_t>(rng.between(2, 3));
      Copula c = random_checkerboard(rng, n, limits);
      if (c.resolution() < 2) continue;
      const bool up = rng.below(2) == 0;
      const double p = up ? 1.0 : 2.0;
      const double q = up ? 2.0 : 1.0;
      const auto pair = find_violating_pair(c, p, q, c.resolution() + 1);
      if (!pair) continue;
      out.push_back({std::move(c), p, q, *pair});
    }
    return out;
  }
};

TEST_F(CounterexampleProperties, LawsOfZAndZPrimeCoincide) {
  for (std::size_t n : {2u, 3u}) {
    for (auto adversary : {AdversaryChoice::comonotone, AdversaryChoice::countermonotone}) {
      for (int t = 0; t < 15; ++t) {
        const Copula c = random_checkerboard(rng, n, limits);
        const auto i = static_cast<std::size_t>(rng.below(n - 1));
        const auto j = static_cast<std::size_t>(rng.between(static_cast<long long>(i) + 1, static_cast<long long>(n) - 1));
        const auto built = build_pair(c, adversary, i, j, rng.uniform(0.01, 0.99));
        const auto z_prime = target_marginal(built.alt_plan);
        ASSERT_EQ(z_prime.size(), built.rho.size());
        EXPECT_TRUE(std::ranges::equal(z_prime.coordinates(), built.rho.coordinates()));
        for (std::size_t r = 0; r < z_prime.size(); ++r) EXPECT_NEAR(z_prime.weight(r), built.rho.weight(r), 1e-12);
        EXPECT_TRUE(validate_plan(built.diamond_plan, built.mu, built.rho));
        EXPECT_TRUE(validate_plan(built.alt_plan, built.mu, built.rho));
      }
    }
  }
}

TEST_F(CounterexampleProperties, DiamondPlanIsTheDirectCoupling) {
  for (const auto& cs : cases(20)) {
    const double eps = 0.25;
    const auto built = build_pair(cs.c, cs.p, cs.q, cs.pair.i, cs.pair.j, eps);
    const detail::EpsilonConstruction cons(cs.c, cs.pair.i, cs.pair.j, adversary_copula(cs.p, cs.q), eps);
    PlanBuilder direct(cs.c.dimension());
    cons.for_each_diamond([&](const auto& y, const auto& z, double w) { direct.add(y, z, w); });
    const auto plan = direct.build();
    ASSERT_EQ(plan.size(), built.diamond_plan.size());
    for (std::size_t e = 0; e < plan.size(); ++e) {
      EXPECT_TRUE(std::ranges::equal(plan.x(e), built.diamond_plan.x(e)));
      EXPECT_TRUE(std::ranges::equal(plan.y(e), built.diamond_plan.y(e)));
      EXPECT_NEAR(plan.w(e), built.diamond_plan.w(e), 1e-12);
    }
  }
}

TEST_F(CounterexampleProperties, SourceMeasureCarriesTheCopula) {
  for (const auto& cs : cases(30)) {
    const auto built = build_pair(cs.c, cs.p, cs.q, cs.pair.i, cs.pair.j, rng.uniform(0.05, 0.95));
    const auto binned = rank_binned(built.mu, cs.c.resolution());
    ASSERT_EQ(binned.size(), cs.c.masses().size());
    for (std::size_t f = 0; f < binned.size(); ++f) EXPECT_NEAR(binned[f], cs.c.masses()[f], 1e-15);
  }
}

TEST_F(CounterexampleProperties, CostsConvergeToLimits) {
  auto all = cases(20);
  all.push_back({independence(2, 16), 1.0, 2.0, {0, 1, 0.0, 0.0}});
  all.push_back({independence(2, 16), 2.0, 1.0, {0, 1, 0.0, 0.0}});
  for (const auto& cs : all) {
    const auto lim = limit_scores(cs.c, cs.pair.i, cs.pair.j, cs.p, cs.q);
    double prev_d_err = INFINITY, prev_a_err = INFINITY;
    for (double eps : epsilon_schedule({})) {
      if (eps > 0.25) continue;
      const auto costs = pair_costs(cs.c, cs.p, cs.q, cs.pair.i, cs.pair.j, eps);
      const double d_err = std::abs(costs.diamond - lim.diamond);
      const double a_err = std::abs(costs.alt - lim.alt);
      EXPECT_LE(d_err, 5 * eps * (lim.diamond + 1));
      EXPECT_LE(a_err, 5 * eps * (lim.alt + 1));
      EXPECT_LE(d_err, prev_d_err + 1e-14);
      EXPECT_LE(a_err, prev_a_err + 1e-14);
      prev_d_err = d_err;
      prev_a_err = a_err;
    }
  }
}

TEST_F(CounterexampleProperties, EqualPowersNeverShowAGap) {
  for (const auto& cs : cases(20)) {
    for (double p : {1.0, 2.0, 3.0}) {
      for (auto adversary : {AdversaryChoice::comonotone, AdversaryChoice::countermonotone}) {
        for (double eps : epsilon_schedule({})) {
          const auto costs = pair_costs(cs.c, CostSpec(p, p), adversary, cs.pair.i, cs.pair.j, eps);
          EXPECT_LE(costs.diamond - costs.alt, 1e-9);
        }
      }
    }
  }
}

TEST_F(CounterexampleProperties, SuccessfulSearchesAreDominated) {
  std::size_t successes = 0;
  for (const auto& cs : cases(15)) {
    const auto res = gap_search(cs.c, cs.p, cs.q);
    if (!res.report.success) continue;
    ++successes;
    EXPECT_GT(res.report.gap, 0.0);
    ASSERT_TRUE(res.report.exact_cost.has_value());
    EXPECT_LE(*res.report.exact_cost, res.report.alt_cost + 1e-12);
    EXPECT_LT(res.report.alt_cost, res.report.diamond_cost);
  }
  EXPECT_GT(successes, 0u);
}
