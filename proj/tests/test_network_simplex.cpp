#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "copot/instances.hpp"
#include "copot/network_simplex.hpp"

using namespace copot;

namespace {

// Splits integer supplies and demands into unit copies and minimizes over
// all assignments of the copies.
double brute_force(const std::vector<int>& supply, const std::vector<int>& demand,
                   const std::vector<double>& costs) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < supply.size(); ++i) rows.insert(rows.end(), supply[i], i);
  for (std::size_t j = 0; j < demand.size(); ++j) cols.insert(cols.end(), demand[j], j);
  const double total = static_cast<double>(rows.size());
  std::vector<std::size_t> perm(cols.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t t = 0; t < rows.size(); ++t) c += costs[rows[t] * demand.size() + cols[perm[t]]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / total;
}

std::vector<int> random_split(Rng& rng, int total, std::size_t parts) {
  std::vector<int> out(parts, 1);
  for (int r = static_cast<int>(parts); r < total; ++r) ++out[rng.below(parts)];
  return out;
}

std::vector<double> normalized(const std::vector<int>& v, int total) {
  std::vector<double> out;
  for (int x : v) out.push_back(static_cast<double>(x) / total);
  return out;
}

}  // namespace

TEST(TransportationSimplex, SingleCell) {
  const double s[] = {1.0};
  TransportationSimplex lp(s, s, {3.5});
  lp.solve();
  EXPECT_EQ(lp.objective(), 3.5);
  ASSERT_EQ(lp.flows().size(), 1u);
}

TEST(TransportationSimplex, SwapsToCheaperDiagonal) {
  const double s[] = {0.5, 0.5};
  TransportationSimplex lp(s, s, {2.0, 1.0, 1.0, 2.0});
  lp.solve();
  EXPECT_DOUBLE_EQ(lp.objective(), 1.0);
  const auto flows = lp.flows();
  ASSERT_EQ(flows.size(), 2u);
  EXPECT_EQ(flows[0].sink, 1u);
  EXPECT_EQ(flows[1].sink, 0u);
}

TEST(TransportationSimplex, RejectsMalformedInput) {
  const double s[] = {0.5, 0.5};
  EXPECT_THROW(TransportationSimplex(s, s, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(TransportationSimplex(s, s, {1.0, 2.0, std::nan(""), 0.0}), std::invalid_argument);
  EXPECT_THROW(TransportationSimplex({}, s, {}), std::invalid_argument);
}

TEST(TransportationSimplex, MatchesBruteForceOnSmallInstances) {
  Rng rng(4242);
  for (int t = 0; t < 300; ++t) {
    const int total = static_cast<int>(rng.between(1, 7));
    const auto a = static_cast<std::size_t>(rng.between(1, total));
    const auto b = static_cast<std::size_t>(rng.between(1, total));
    const auto supply = random_split(rng, total, a);
    const auto demand = random_split(rng, total, b);
    std::vector<double> costs(a * b);
    // Few distinct cost values to provoke ties and degeneracy.
    for (double& c : costs) c = static_cast<double>(rng.between(0, 3));
    const auto sa = normalized(supply, total);
    const auto sb = normalized(demand, total);
    TransportationSimplex lp(sa, sb, costs);
    lp.solve();
    EXPECT_NEAR(lp.objective(), brute_force(supply, demand, costs), 1e-12);
  }
}

TEST(TransportationSimplex, FlowsAreFeasibleAndDualCertified) {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const auto a = static_cast<std::size_t>(rng.between(1, 30));
    const auto b = static_cast<std::size_t>(rng.between(1, 30));
    const auto supply = normalized(random_split(rng, 60, a), 60);
    const auto demand = normalized(random_split(rng, 60, b), 60);
    std::vector<double> costs(a * b);
    for (double& c : costs) c = rng.uniform(-2.0, 5.0);
    TransportationSimplex lp(supply, demand, costs);
    lp.solve();
    EXPECT_LE(lp.max_negative_reduced_cost(), 1e-12 * 6.0);
    std::vector<double> out(a, 0.0), in(b, 0.0);
    for (const auto& cell : lp.flows()) {
      EXPECT_GT(cell.flow, 0.0);
      out[cell.source] += cell.flow;
      in[cell.sink] += cell.flow;
    }
    for (std::size_t i = 0; i < a; ++i) EXPECT_NEAR(out[i], supply[i], 1e-12);
    for (std::size_t j = 0; j < b; ++j) EXPECT_NEAR(in[j], demand[j], 1e-12);
  }
}

TEST(TransportationSimplex, DegenerateAssignmentTerminates) {
  const std::size_t n = 40;
  const std::vector<double> uniform(n, 1.0 / n);
  std::vector<double> costs(n * n, 1.0);
  TransportationSimplex lp(uniform, uniform, costs);
  lp.solve();
  EXPECT_NEAR(lp.objective(), 1.0, 1e-12);
}
