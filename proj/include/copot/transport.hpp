#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "copot/copulas.hpp"
#include "copot/measures.hpp"
#include "copot/network_simplex.hpp"

namespace copot {

/// Ground cost c(x,y) = ||x - y||_q^p with finite p, q >= 1.
struct CostSpec {
  double p = 2.0;
  double q = 2.0;

  CostSpec() = default;
  CostSpec(double p_, double q_) : p(p_), q(q_) {
    if (!std::isfinite(p) || !std::isfinite(q) || p < 1.0 || q < 1.0) {
      throw std::invalid_argument("CostSpec: p and q must be finite and >= 1");
    }
  }

  bool separable() const { return p == q; }
};

inline double norm_cost(std::span<const double> x, std::span<const double> y, const CostSpec& spec) {
  if (x.size() != y.size()) throw std::invalid_argument("norm_cost: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i] - y[i]), spec.q);
  return spec.separable() ? s : std::pow(s, spec.p / spec.q);
}

class TransportPlan;
TransportPlan make_plan(std::size_t dimension, std::span<const double> xs,
                        std::span<const double> ys, std::span<const double> ws);

/**
 * @brief A finitely supported coupling: weighted pairs (x, y) of n-vectors.
 *
 * Entries are sorted by (x, y) with exact duplicates merged.
 */
class TransportPlan {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return ws_.size(); }
  std::span<const double> x(std::size_t e) const {
    return std::span<const double>(xs_).subspan(e * dimension_, dimension_);
  }
  std::span<const double> y(std::size_t e) const {
    return std::span<const double>(ys_).subspan(e * dimension_, dimension_);
  }
  double w(std::size_t e) const { return ws_[e]; }
  std::span<const double> weights() const { return ws_; }

  friend bool operator==(const TransportPlan&, const TransportPlan&) = default;

 private:
  friend TransportPlan make_plan(std::size_t, std::span<const double>, std::span<const double>,
                                 std::span<const double>);
  std::size_t dimension_ = 0;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> ws_;
};

/// Builds a plan from flat coordinate buffers. Zero weights are dropped;
/// weights are kept as given (no renormalization).
inline TransportPlan make_plan(std::size_t dimension, std::span<const double> xs,
                               std::span<const double> ys, std::span<const double> ws) {
  if (dimension == 0) throw std::invalid_argument("make_plan: dimension must be positive");
  if (xs.size() != ws.size() * dimension || ys.size() != ws.size() * dimension) {
    throw std::invalid_argument("make_plan: coordinate buffers do not match entry count");
  }
  for (double w : ws) {
    if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("make_plan: invalid weight");
  }
  auto key_less = [&](std::size_t l, std::size_t r) {
    const auto xl = xs.subspan(l * dimension, dimension);
    const auto xr = xs.subspan(r * dimension, dimension);
    if (!std::equal(xl.begin(), xl.end(), xr.begin())) {
      return std::lexicographical_compare(xl.begin(), xl.end(), xr.begin(), xr.end());
    }
    const auto yl = ys.subspan(l * dimension, dimension);
    const auto yr = ys.subspan(r * dimension, dimension);
    return std::lexicographical_compare(yl.begin(), yl.end(), yr.begin(), yr.end());
  };
  auto same = [&](std::size_t l, std::size_t r) { return !key_less(l, r) && !key_less(r, l); };

  std::vector<std::size_t> order(ws.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), key_less);

  TransportPlan plan;
  plan.dimension_ = dimension;
  std::size_t previous = 0;
  for (std::size_t idx : order) {
    if (ws[idx] == 0.0) continue;
    if (!plan.ws_.empty() && same(previous, idx)) {
      plan.ws_.back() += ws[idx];
      continue;
    }
    const auto x = xs.subspan(idx * dimension, dimension);
    const auto y = ys.subspan(idx * dimension, dimension);
    plan.xs_.insert(plan.xs_.end(), x.begin(), x.end());
    plan.ys_.insert(plan.ys_.end(), y.begin(), y.end());
    plan.ws_.push_back(ws[idx]);
    previous = idx;
  }
  return plan;
}

/// Accumulates plan entries one at a time.
class PlanBuilder {
 public:
  explicit PlanBuilder(std::size_t dimension) : dimension_(dimension) {}

  void add(std::span<const double> x, std::span<const double> y, double w) {
    xs_.insert(xs_.end(), x.begin(), x.end());
    ys_.insert(ys_.end(), y.begin(), y.end());
    ws_.push_back(w);
  }

  TransportPlan build() const { return make_plan(dimension_, xs_, ys_, ws_); }

 private:
  std::size_t dimension_;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> ws_;
};

/// Unrooted cost: sum of w * ||x - y||_q^p.
inline double plan_cost(const TransportPlan& plan, const CostSpec& spec) {
  double total = 0.0;
  for (std::size_t e = 0; e < plan.size(); ++e) total += plan.w(e) * norm_cost(plan.x(e), plan.y(e), spec);
  return total;
}

inline double inner_product_score(const TransportPlan& plan) {
  double total = 0.0;
  for (std::size_t e = 0; e < plan.size(); ++e) {
    const auto x = plan.x(e);
    const auto y = plan.y(e);
    total += plan.w(e) * std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
  }
  return total;
}

inline MultivariateMeasure source_marginal(const TransportPlan& plan) {
  std::vector<double> coords;
  coords.reserve(plan.size() * plan.dimension());
  for (std::size_t e = 0; e < plan.size(); ++e) coords.insert(coords.end(), plan.x(e).begin(), plan.x(e).end());
  return make_measure(plan.dimension(), coords, plan.weights());
}

inline MultivariateMeasure target_marginal(const TransportPlan& plan) {
  std::vector<double> coords;
  coords.reserve(plan.size() * plan.dimension());
  for (std::size_t e = 0; e < plan.size(); ++e) coords.insert(coords.end(), plan.y(e).begin(), plan.y(e).end());
  return make_measure(plan.dimension(), coords, plan.weights());
}

namespace detail {

// Merges one side of the plan without renormalizing and compares it to m.
inline bool projection_matches(const TransportPlan& plan, const MultivariateMeasure& m,
                               bool source_side, double tolerance) {
  const std::size_t n = plan.dimension();
  if (m.dimension() != n || plan.size() == 0) return false;
  std::vector<std::size_t> order(plan.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto point = [&](std::size_t e) { return source_side ? plan.x(e) : plan.y(e); };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const auto a = point(l);
    const auto b = point(r);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });
  std::size_t atom = 0;
  std::size_t t = 0;
  while (t < order.size()) {
    const auto p = point(order[t]);
    double mass = 0.0;
    while (t < order.size() && std::ranges::equal(point(order[t]), p)) mass += plan.w(order[t++]);
    if (atom >= m.size() || !std::ranges::equal(m.atom(atom), p)) return false;
    if (std::abs(mass - m.weight(atom)) > tolerance) return false;
    ++atom;
  }
  return atom == m.size();
}

}  // namespace detail

/// True iff the plan's projections reproduce mu and rho atom-for-atom, with
/// weights within 1e-10.
inline bool validate_plan(const TransportPlan& plan, const MultivariateMeasure& mu,
                          const MultivariateMeasure& rho) {
  constexpr double tolerance = 1e-10;
  const double total = std::accumulate(plan.weights().begin(), plan.weights().end(), 0.0);
  if (std::abs(total - 1.0) > tolerance) return false;
  return detail::projection_matches(plan, mu, true, tolerance) &&
         detail::projection_matches(plan, rho, false, tolerance);
}

/**
 * @brief The coupling mu <> rho: pushforward of dC under
 * u -> (F^{-1}_{mu_i}(u_i))_i , (F^{-1}_{rho_i}(u_i))_i.
 */
inline TransportPlan diamond(const Copula& c, std::span<const DiscreteMeasure1D> mu_marginals,
                             std::span<const DiscreteMeasure1D> rho_marginals) {
  const std::size_t n = c.dimension();
  if (mu_marginals.size() != n || rho_marginals.size() != n) {
    throw std::invalid_argument("diamond: marginal count differs from copula dimension");
  }
  PlanBuilder builder(n);
  const detail::MarginalFamily families[] = {mu_marginals, rho_marginals};
  detail::push_forward(c, families, [&](const auto& points, double mass) {
    builder.add(points[0], points[1], mass);
  });
  return builder.build();
}

/// Unrooted W_p^p between two measures on R, by integrating
/// |F^{-1}_mu - F^{-1}_rho|^p over the merged jump partition of (0,1).
inline double wasserstein_1d(const DiscreteMeasure1D& mu, const DiscreteMeasure1D& rho, double p) {
  if (!std::isfinite(p) || p < 1.0) throw std::invalid_argument("wasserstein_1d: need p >= 1");
  const auto cm = mu.cumulative();
  const auto cr = rho.cumulative();
  std::size_t a = 0;
  std::size_t b = 0;
  double left = 0.0;
  double total = 0.0;
  while (a < cm.size() && b < cr.size()) {
    const double right = std::min(cm[a], cr[b]);
    if (right > left) {
      total += (right - left) * std::pow(std::abs(mu.atoms()[a] - rho.atoms()[b]), p);
      left = right;
    }
    if (cm[a] == right) ++a;
    if (cr[b] == right) ++b;
  }
  return total;
}

/// Thrown when an exact solve would exceed the configured pair budget.
class SizeCapExceeded : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr std::size_t kDefaultMaxPairs = 250000;

struct ExactResult {
  double value = 0.0;
  TransportPlan plan;
};

/// Exact minimizer of sum w * cost(x, y) over all couplings of mu and rho.
template <class Cost>
ExactResult solve_transport(const MultivariateMeasure& mu, const MultivariateMeasure& rho, Cost&& cost,
                            std::size_t max_pairs = kDefaultMaxPairs) {
  if (mu.dimension() != rho.dimension()) {
    throw std::invalid_argument("exact_ot: dimension mismatch");
  }
  const std::size_t a = mu.size();
  const std::size_t b = rho.size();
  if (a * b > max_pairs) {
    throw SizeCapExceeded("exact_ot: " + std::to_string(a) + " x " + std::to_string(b) +
                          " pairs exceed the cap of " + std::to_string(max_pairs));
  }
  std::vector<double> costs(a * b);
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) costs[i * b + j] = cost(mu.atom(i), rho.atom(j));
  }
  TransportationSimplex simplex(mu.weights(), rho.weights(), std::move(costs));
  simplex.solve();

  PlanBuilder builder(mu.dimension());
  for (const auto& cell : simplex.flows()) builder.add(mu.atom(cell.source), rho.atom(cell.sink), cell.flow);
  ExactResult result{0.0, builder.build()};
  double value = 0.0;
  for (std::size_t e = 0; e < result.plan.size(); ++e) {
    value += result.plan.w(e) * cost(result.plan.x(e), result.plan.y(e));
  }
  result.value = value;
  return result;
}

inline ExactResult exact_ot(const MultivariateMeasure& mu, const MultivariateMeasure& rho,
                            const CostSpec& spec, std::size_t max_pairs = kDefaultMaxPairs) {
  return solve_transport(
      mu, rho, [&](std::span<const double> x, std::span<const double> y) { return norm_cost(x, y, spec); },
      max_pairs);
}

/// Maximum of the expected inner product over all couplings.
inline double max_inner_product(const MultivariateMeasure& mu, const MultivariateMeasure& rho,
                                std::size_t max_pairs = kDefaultMaxPairs) {
  const auto res = solve_transport(
      mu, rho,
      [](std::span<const double> x, std::span<const double> y) {
        return -std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
      },
      max_pairs);
  return -res.value;
}

}  // namespace copot
