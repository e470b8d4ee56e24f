#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "copot/copulas.hpp"
#include "copot/measures.hpp"
#include "copot/transport.hpp"

namespace copot {

/**
 * Mixed partial derivative of -(u1^q + u2^q)^(p/q) on (0,1)^2:
 *
 *   p (q - p) u1^(q-1) u2^(q-1) (u1^q + u2^q)^(p/q - 2).
 *
 * Its sign is sign(q - p), so the Monge condition holds for the cost (q < p)
 * or its negative (q > p).
 */
inline double monge_cross_partial(double p, double q, double u1, double u2) {
  if (!(u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0)) {
    throw std::invalid_argument("monge_cross_partial: u1, u2 must lie in (0,1)");
  }
  if (!(p >= 1.0 && q >= 1.0)) throw std::invalid_argument("monge_cross_partial: need p, q >= 1");
  const double s = std::pow(u1, q) + std::pow(u2, q);
  return p * (q - p) * std::pow(u1, q - 1.0) * std::pow(u2, q - 1.0) * std::pow(s, p / q - 2.0);
}

/// Copula C'_2 used for the competing coupling.
enum class AdversaryChoice { comonotone, countermonotone };

inline AdversaryChoice adversary_copula(double p, double q) {
  if (p == q) {
    throw std::invalid_argument("adversary_copula: p == q, the diamond coupling is optimal");
  }
  return q < p ? AdversaryChoice::countermonotone : AdversaryChoice::comonotone;
}

inline const char* to_string(AdversaryChoice a) {
  return a == AdversaryChoice::comonotone ? "comonotone" : "countermonotone";
}

/// Coordinates (i, j), 0-based, i < j, and a lattice point where their
/// bivariate margin leaves the relevant Frechet bound.
struct ViolatingPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double ui = 0.0;
  double uj = 0.0;
};

/**
 * Scans pairs i < j and interior lattice points {s/(g-1)}: for q < p looks
 * for C_ij > C-_2, for q > p for C_ij < C+_2. Empty when every bivariate
 * margin is extremal. For a checkerboard of resolution k, g = k + 1 scans
 * exactly the cell-boundary lattice.
 */
inline std::optional<ViolatingPair> find_violating_pair(const Copula& c, double p, double q,
                                                        std::size_t g) {
  const AdversaryChoice adversary = adversary_copula(p, q);
  if (g < 3) return std::nullopt;
  constexpr double slack = 1e-12;
  const std::size_t n = c.dimension();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Copula margin = bivariate_margin(c, i, j);
      for (std::size_t s = 1; s + 1 < g; ++s) {
        for (std::size_t t = 1; t + 1 < g; ++t) {
          const double u[2] = {static_cast<double>(s) / static_cast<double>(g - 1),
                               static_cast<double>(t) / static_cast<double>(g - 1)};
          const double v = copula_cdf(margin, u);
          const bool violated = adversary == AdversaryChoice::countermonotone
                                    ? v > frechet_lower(u) + slack
                                    : v < frechet_upper(u) - slack;
          if (violated) return ViolatingPair{i, j, u[0], u[1]};
        }
      }
    }
  }
  return std::nullopt;
}

namespace detail {

/**
 * Cell-level construction of Y_eps, Z_eps and Z'_eps for a checkerboard.
 *
 * Axes are relabeled so that the chosen pair sits first: role 0 is the
 * coordinate left unscaled in Y, role 1 the one left unscaled in Z. A cell is
 * addressed by relabeled multi-index c; U = midpoints of c.
 *   Y(c)  = (m_c0, eps m_c1, eps m_c2, ...)     mass P[c]
 *   Z(c)  = (eps m_c0, m_c1, eps m_c2, ...)
 *   alt:  Y(c) paired with Z(c') for c'_1 = f(c_0), mass k P[c] P[c'],
 * with f the identity (comonotone) or r -> k-1-r (countermonotone). Points
 * are emitted in the original coordinate order.
 */
class EpsilonConstruction {
 public:
  EpsilonConstruction(const Copula& c, std::size_t i, std::size_t j, AdversaryChoice adversary,
                      double eps)
      : n_(c.dimension()), k_(c.resolution()), eps_(eps), adversary_(adversary) {
    if (!c.is_checkerboard()) {
      throw std::invalid_argument("epsilon construction: copula must be a checkerboard");
    }
    if (!(i < j && j < n_)) throw std::out_of_range("epsilon construction: need i < j < n");
    if (!(eps > 0.0 && eps < 1.0)) {
      throw std::invalid_argument("epsilon construction: epsilon must lie in (0,1)");
    }
    order_ = {i, j};
    for (std::size_t t = 0; t < n_; ++t) {
      if (t != i && t != j) order_.push_back(t);
    }
    // permuted_[relabeled flat] = C[original flat].
    permuted_.assign(c.masses().size(), 0.0);
    std::vector<std::size_t> rel(n_), orig(n_);
    for (std::size_t f = 0; f < permuted_.size(); ++f) {
      unravel(f, k_, rel);
      for (std::size_t t = 0; t < n_; ++t) orig[order_[t]] = rel[t];
      permuted_[f] = c.masses()[ravel(orig, k_)];
    }
    by_second_.assign(k_, {});
    for (std::size_t f = 0; f < permuted_.size(); ++f) {
      if (permuted_[f] <= 0.0) continue;
      unravel(f, k_, rel);
      by_second_[rel[1]].push_back(f);
    }
  }

  std::size_t dimension() const { return n_; }
  std::size_t cells() const { return permuted_.size(); }
  double mass(std::size_t f) const { return permuted_[f]; }

  void y_point(std::size_t f, std::span<double> out) const { point(f, 0, out); }
  void z_point(std::size_t f, std::span<double> out) const { point(f, 1, out); }

  template <class Visitor>
  void for_each_diamond(Visitor&& visit) const {
    std::vector<double> y(n_), z(n_);
    for (std::size_t f = 0; f < permuted_.size(); ++f) {
      if (permuted_[f] <= 0.0) continue;
      y_point(f, y);
      z_point(f, z);
      visit(std::as_const(y), std::as_const(z), permuted_[f]);
    }
  }

  template <class Visitor>
  void for_each_alt(Visitor&& visit) const {
    std::vector<double> y(n_), z(n_);
    std::vector<std::size_t> rel(n_);
    const double kd = static_cast<double>(k_);
    for (std::size_t f = 0; f < permuted_.size(); ++f) {
      if (permuted_[f] <= 0.0) continue;
      unravel(f, k_, rel);
      const std::size_t target =
          adversary_ == AdversaryChoice::comonotone ? rel[0] : k_ - 1 - rel[0];
      y_point(f, y);
      for (std::size_t g : by_second_[target]) {
        z_point(g, z);
        visit(std::as_const(y), std::as_const(z), kd * permuted_[f] * permuted_[g]);
      }
    }
  }

 private:
  // role 0: Y, role 1: Z.
  void point(std::size_t f, std::size_t role, std::span<double> out) const {
    std::size_t rest = f;
    for (std::size_t t = n_; t-- > 0;) {
      const double m = midpoint(rest % k_, k_);
      rest /= k_;
      out[order_[t]] = t == role ? m : eps_ * m;
    }
  }

  std::size_t n_;
  std::size_t k_;
  double eps_;
  AdversaryChoice adversary_;
  std::vector<std::size_t> order_;
  std::vector<double> permuted_;
  std::vector<std::vector<std::size_t>> by_second_;
};

}  // namespace detail

/// mu_eps = law(Y_eps), rho_eps = law(Z_eps) = law(Z'_eps), the diamond
/// coupling of (mu_eps, rho_eps) under C, and the competing (Y_eps, Z'_eps)
/// coupling.
struct EpsilonPair {
  MultivariateMeasure mu;
  MultivariateMeasure rho;
  TransportPlan diamond_plan;
  TransportPlan alt_plan;
};

/// Thrown when an internal consistency check of the construction fails.
class ConstructionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Explicit adversary; also usable when p == q.
inline EpsilonPair build_pair(const Copula& c, AdversaryChoice adversary, std::size_t i, std::size_t j,
                              double eps) {
  const detail::EpsilonConstruction cons(c, i, j, adversary, eps);
  const std::size_t n = cons.dimension();

  std::vector<double> ys, zs, ws;
  std::vector<double> point(n);
  for (std::size_t f = 0; f < cons.cells(); ++f) {
    if (cons.mass(f) <= 0.0) continue;
    cons.y_point(f, point);
    ys.insert(ys.end(), point.begin(), point.end());
    cons.z_point(f, point);
    zs.insert(zs.end(), point.begin(), point.end());
    ws.push_back(cons.mass(f));
  }
  MultivariateMeasure mu = make_measure(n, ys, ws);
  MultivariateMeasure rho = make_measure(n, zs, ws);

  const auto mu_marginals = marginals(mu);
  const auto rho_marginals = marginals(rho);
  TransportPlan diamond_plan = diamond(c, mu_marginals, rho_marginals);

  PlanBuilder alt(n);
  cons.for_each_alt([&](const auto& y, const auto& z, double w) { alt.add(y, z, w); });
  TransportPlan alt_plan = alt.build();

  // law(Z') must equal law(Z) atom-for-atom.
  const MultivariateMeasure z_prime = target_marginal(alt_plan);
  bool same_law = z_prime.size() == rho.size() &&
                  std::ranges::equal(z_prime.coordinates(), rho.coordinates());
  for (std::size_t r = 0; same_law && r < rho.size(); ++r) {
    same_law = std::abs(z_prime.weight(r) - rho.weight(r)) <= kMassTolerance * static_cast<double>(rho.size());
  }
  if (!same_law) throw ConstructionError("build_pair: law(Z') differs from law(Z)");
  if (!validate_plan(diamond_plan, mu, rho) || !validate_plan(alt_plan, mu, rho)) {
    throw ConstructionError("build_pair: a constructed plan does not couple mu_eps and rho_eps");
  }
  return {std::move(mu), std::move(rho), std::move(diamond_plan), std::move(alt_plan)};
}

inline EpsilonPair build_pair(const Copula& c, double p, double q, std::size_t i, std::size_t j,
                              double eps) {
  return build_pair(c, adversary_copula(p, q), i, j, eps);
}

struct PairCosts {
  double diamond = 0.0;
  double alt = 0.0;
};

/// Costs of the (Y, Z) and (Y, Z') couplings without materializing plans.
inline PairCosts pair_costs(const Copula& c, const CostSpec& spec, AdversaryChoice adversary,
                            std::size_t i, std::size_t j, double eps) {
  const detail::EpsilonConstruction cons(c, i, j, adversary, eps);
  PairCosts out;
  cons.for_each_diamond([&](const auto& y, const auto& z, double w) { out.diamond += w * norm_cost(y, z, spec); });
  cons.for_each_alt([&](const auto& y, const auto& z, double w) { out.alt += w * norm_cost(y, z, spec); });
  return out;
}

inline PairCosts pair_costs(const Copula& c, double p, double q, std::size_t i, std::size_t j,
                            double eps) {
  return pair_costs(c, CostSpec(p, q), adversary_copula(p, q), i, j, eps);
}

struct LimitScores {
  double diamond = 0.0;
  double alt = 0.0;
};

/// eps -> 0 limits E[(U_i^q + U_j^q)^(p/q)] and E[(U_i^q + U'_j^q)^(p/q)],
/// by exact summation over the cell midpoints of the (i, j) margin.
inline LimitScores limit_scores(const Copula& c, std::size_t i, std::size_t j, double p, double q) {
  if (!c.is_checkerboard()) throw std::invalid_argument("limit_scores: copula must be a checkerboard");
  const AdversaryChoice adversary = adversary_copula(p, q);
  const Copula margin = bivariate_margin(c, i, j);
  const std::size_t k = margin.resolution();
  auto score = [&](double a, double b) { return std::pow(std::pow(a, q) + std::pow(b, q), p / q); };
  LimitScores out;
  for (std::size_t a = 0; a < k; ++a) {
    const double ma = detail::midpoint(a, k);
    for (std::size_t b = 0; b < k; ++b) {
      const double w = margin.masses()[a * k + b];
      if (w > 0.0) out.diamond += w * score(ma, detail::midpoint(b, k));
    }
    const std::size_t partner = adversary == AdversaryChoice::comonotone ? a : k - 1 - a;
    out.alt += score(ma, detail::midpoint(partner, k)) / static_cast<double>(k);
  }
  return out;
}

/// Thrown when no bivariate margin leaves the relevant Frechet bound.
class NoViolatingPair : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct GapSearchOptions {
  double start = 0.5;
  double ratio = 0.5;
  std::size_t steps = 16;
  /// A gap counts only above rel_threshold * max(1, diamond_cost) ...
  double rel_threshold = 1e-9;
  /// ... and above this fraction of the limiting gap (limit_diamond -
  /// limit_alt), so the accepted epsilon sits in the small-epsilon regime.
  /// Zero accepts the first positive gap.
  double asymptotic_fraction = 0.5;
  bool attach_exact = true;
  std::size_t max_pairs = kDefaultMaxPairs;
};

struct GapPoint {
  double epsilon = 0.0;
  double diamond_cost = 0.0;
  double alt_cost = 0.0;
  double gap = 0.0;
  std::optional<double> exact_cost;
};

struct CounterexampleReport {
  double p = 0.0;
  double q = 0.0;
  std::string copula;
  std::size_t i = 0;
  std::size_t j = 0;
  std::string adversary;
  double epsilon = 0.0;
  double diamond_cost = 0.0;
  double alt_cost = 0.0;
  std::optional<double> exact_cost;
  double gap = 0.0;
  double limit_diamond = 0.0;
  double limit_alt = 0.0;
  bool success = false;
};

struct GapSearchResult {
  CounterexampleReport report;
  std::vector<GapPoint> curve;
};

inline std::vector<double> epsilon_schedule(const GapSearchOptions& options) {
  std::vector<double> out;
  double eps = options.start;
  for (std::size_t s = 0; s < options.steps; ++s, eps *= options.ratio) out.push_back(eps);
  return out;
}

/**
 * @brief Searches the epsilon schedule for a strictly positive optimality gap
 * of the diamond coupling.
 *
 * Evaluates every schedule point (the full curve is returned) and reports the
 * first accepted one. When no point is accepted the report carries the
 * largest observed gap with success = false. Throws NoViolatingPair when the
 * copula is pairwise extremal.
 */
inline GapSearchResult gap_search(const Copula& c, double p, double q,
                                  const GapSearchOptions& options = {}) {
  if (!c.is_checkerboard()) throw std::invalid_argument("gap_search: copula must be a checkerboard");
  const auto pair = find_violating_pair(c, p, q, c.resolution() + 1);
  if (!pair) {
    throw NoViolatingPair("gap_search: every bivariate margin of " + describe(c) +
                          " is extremal for this (p, q); the construction does not apply");
  }
  const LimitScores limits = limit_scores(c, pair->i, pair->j, p, q);

  GapSearchResult result;
  auto& report = result.report;
  report.p = p;
  report.q = q;
  report.copula = describe(c);
  report.i = pair->i;
  report.j = pair->j;
  report.adversary = to_string(adversary_copula(p, q));
  report.limit_diamond = limits.diamond;
  report.limit_alt = limits.alt;

  const double asymptotic_floor =
      options.asymptotic_fraction * std::max(0.0, limits.diamond - limits.alt);
  std::optional<std::size_t> accepted;
  std::size_t best = 0;
  for (double eps : epsilon_schedule(options)) {
    const PairCosts costs = pair_costs(c, p, q, pair->i, pair->j, eps);
    GapPoint pt{eps, costs.diamond, costs.alt, costs.diamond - costs.alt, std::nullopt};
    const double threshold =
        std::max(options.rel_threshold * std::max(1.0, costs.diamond), asymptotic_floor);
    if (!accepted && pt.gap > threshold) accepted = result.curve.size();
    if (result.curve.empty() || pt.gap > result.curve[best].gap) best = result.curve.size();
    result.curve.push_back(pt);
  }

  GapPoint& chosen = result.curve[accepted.value_or(best)];
  report.success = accepted.has_value();
  if (report.success && options.attach_exact) {
    const EpsilonPair built = build_pair(c, p, q, pair->i, pair->j, chosen.epsilon);
    if (built.mu.size() * built.rho.size() <= options.max_pairs) {
      chosen.exact_cost = exact_ot(built.mu, built.rho, CostSpec(p, q), options.max_pairs).value;
    }
  }
  report.epsilon = chosen.epsilon;
  report.diamond_cost = chosen.diamond_cost;
  report.alt_cost = chosen.alt_cost;
  report.gap = chosen.gap;
  report.exact_cost = chosen.exact_cost;
  return result;
}

}  // namespace copot
