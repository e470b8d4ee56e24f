#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "copot/measures.hpp"

namespace copot {

/// Slice-sum tolerance for checkerboard validation.
inline constexpr double kUniformityTolerance = 1e-10;

enum class CopulaKind { checkerboard, comonotone, countermonotone };

/**
 * @brief A copula on [0,1]^n.
 *
 * Either a checkerboard (piecewise-constant density on a k^n grid, mass
 * tensor stored row-major with the last coordinate varying fastest) or one of
 * the singular monotone copulas C+_n and C-_2.
 */
class Copula {
 public:
  CopulaKind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }
  /// Cells per axis; zero for the monotone variants.
  std::size_t resolution() const { return resolution_; }
  std::span<const double> masses() const { return masses_; }
  bool is_checkerboard() const { return kind_ == CopulaKind::checkerboard; }

  /// Builds a checkerboard without the marginal-uniformity check. Only for
  /// exercising the bound checks on deliberately broken tensors.
  static Copula unchecked_checkerboard(std::size_t n, std::size_t k, std::vector<double> masses) {
    Copula c;
    c.kind_ = CopulaKind::checkerboard;
    c.dimension_ = n;
    c.resolution_ = k;
    c.masses_ = std::move(masses);
    return c;
  }

  friend bool operator==(const Copula&, const Copula&) = default;

 private:
  friend Copula comonotone(std::size_t n);
  friend Copula countermonotone();
  Copula() = default;

  CopulaKind kind_ = CopulaKind::checkerboard;
  std::size_t dimension_ = 0;
  std::size_t resolution_ = 0;
  std::vector<double> masses_;
};

namespace detail {

inline std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  while (exp-- > 0) r *= base;
  return r;
}

/// Row-major multi-index of a flat cell index, last axis fastest.
inline void unravel(std::size_t flat, std::size_t k, std::span<std::size_t> cell) {
  for (std::size_t t = cell.size(); t-- > 0;) {
    cell[t] = flat % k;
    flat /= k;
  }
}

inline std::size_t ravel(std::span<const std::size_t> cell, std::size_t k) {
  std::size_t flat = 0;
  for (std::size_t c : cell) flat = flat * k + c;
  return flat;
}

inline double midpoint(std::size_t r, std::size_t k) {
  return (static_cast<double>(r) + 0.5) / static_cast<double>(k);
}

}  // namespace detail

inline Copula checkerboard(std::size_t n, std::size_t k, std::vector<double> masses) {
  if (n == 0 || k == 0) {
    throw std::invalid_argument("checkerboard: dimension and resolution must be positive");
  }
  const std::size_t cells = detail::ipow(k, n);
  if (masses.size() != cells) {
    throw std::invalid_argument("checkerboard: mass tensor must have k^n entries");
  }
  for (double m : masses) {
    detail::require_finite(m, "checkerboard mass");
    if (m < 0.0) throw std::invalid_argument("checkerboard: negative cell mass");
  }
  std::vector<double> slice(n * k, 0.0);
  std::vector<std::size_t> cell(n);
  for (std::size_t f = 0; f < cells; ++f) {
    detail::unravel(f, k, cell);
    for (std::size_t i = 0; i < n; ++i) slice[i * k + cell[i]] += masses[f];
  }
  const double target = 1.0 / static_cast<double>(k);
  for (double s : slice) {
    if (std::abs(s - target) > kUniformityTolerance) {
      throw std::invalid_argument(
          "checkerboard: slice sums must equal 1/k (marginals are not uniform)");
    }
  }
  return Copula::unchecked_checkerboard(n, k, std::move(masses));
}

inline Copula independence(std::size_t n, std::size_t k) {
  if (n < 2 || k < 1) throw std::invalid_argument("independence: need n >= 2 and k >= 1");
  const std::size_t cells = detail::ipow(k, n);
  return checkerboard(n, k, std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
}

inline Copula comonotone(std::size_t n) {
  if (n < 2) throw std::invalid_argument("comonotone: need n >= 2");
  Copula c;
  c.kind_ = CopulaKind::comonotone;
  c.dimension_ = n;
  return c;
}

/// C-_2. There is no n >= 3 version: the lower Frechet bound is not a copula there.
inline Copula countermonotone() {
  Copula c;
  c.kind_ = CopulaKind::countermonotone;
  c.dimension_ = 2;
  return c;
}

inline Copula countermonotone(std::size_t n) {
  if (n != 2) {
    throw std::invalid_argument(
        "countermonotone: the lower Frechet-Hoeffding bound is not a copula for n >= 3");
  }
  return countermonotone();
}

/// Checkerboard carrier of a copula at resolution k. Monotone variants map to
/// the diagonal (resp. anti-diagonal) cell pattern; checkerboards must already
/// have resolution k.
inline Copula discretize(const Copula& c, std::size_t k) {
  if (k == 0) throw std::invalid_argument("discretize: k must be positive");
  const std::size_t n = c.dimension();
  switch (c.kind()) {
    case CopulaKind::checkerboard:
      if (c.resolution() != k) {
        throw std::invalid_argument("discretize: checkerboard resolution differs from k");
      }
      return c;
    case CopulaKind::comonotone: {
      std::vector<double> masses(detail::ipow(k, n), 0.0);
      std::vector<std::size_t> cell(n);
      for (std::size_t r = 0; r < k; ++r) {
        std::fill(cell.begin(), cell.end(), r);
        masses[detail::ravel(cell, k)] = 1.0 / static_cast<double>(k);
      }
      return checkerboard(n, k, std::move(masses));
    }
    case CopulaKind::countermonotone: {
      std::vector<double> masses(k * k, 0.0);
      for (std::size_t r = 0; r < k; ++r) masses[r * k + (k - 1 - r)] = 1.0 / static_cast<double>(k);
      return checkerboard(2, k, std::move(masses));
    }
  }
  throw std::logic_error("discretize: unknown copula kind");
}

inline std::string describe(const Copula& c) {
  switch (c.kind()) {
    case CopulaKind::checkerboard:
      return "checkerboard(n=" + std::to_string(c.dimension()) +
             ",k=" + std::to_string(c.resolution()) + ")";
    case CopulaKind::comonotone:
      return "comonotone(n=" + std::to_string(c.dimension()) + ")";
    case CopulaKind::countermonotone:
      return "countermonotone(n=2)";
  }
  return "unknown";
}

/// Mass of the box [0,u]. Checkerboard cells contribute their mass times the
/// covered volume fraction.
inline double copula_cdf(const Copula& c, std::span<const double> u) {
  const std::size_t n = c.dimension();
  if (u.size() != n) throw std::invalid_argument("copula_cdf: dimension mismatch");
  for (double x : u) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw std::invalid_argument("copula_cdf: point outside the unit cube");
    }
  }
  switch (c.kind()) {
    case CopulaKind::comonotone:
      return *std::min_element(u.begin(), u.end());
    case CopulaKind::countermonotone:
      return std::max(u[0] + u[1] - 1.0, 0.0);
    case CopulaKind::checkerboard:
      break;
  }

  const std::size_t k = c.resolution();
  const double kd = static_cast<double>(k);
  // fraction[i*k + r]: share of cell r on axis i inside [0, u_i].
  std::vector<double> fraction(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < k; ++r) {
      fraction[i * k + r] = std::clamp(u[i] * kd - static_cast<double>(r), 0.0, 1.0);
    }
  }
  const auto masses = c.masses();
  std::vector<std::size_t> cell(n);
  double total = 0.0;
  for (std::size_t f = 0; f < masses.size(); ++f) {
    if (masses[f] == 0.0) continue;
    detail::unravel(f, k, cell);
    double share = masses[f];
    for (std::size_t i = 0; i < n && share != 0.0; ++i) share *= fraction[i * k + cell[i]];
    total += share;
  }
  return total;
}

inline double copula_cdf(const Copula& c, std::initializer_list<double> u) {
  return copula_cdf(c, std::span<const double>(u.begin(), u.size()));
}

inline double frechet_upper(std::span<const double> u) {
  return *std::min_element(u.begin(), u.end());
}

inline double frechet_lower(std::span<const double> u) {
  const double s = std::accumulate(u.begin(), u.end(), 0.0);
  return std::max(s - static_cast<double>(u.size()) + 1.0, 0.0);
}

/// Checks C-_n <= C <= C+_n on the lattice {0, 1/(g-1), ..., 1}^n.
inline bool frechet_check(const Copula& c, std::size_t g) {
  if (g < 2) throw std::invalid_argument("frechet_check: need g >= 2");
  constexpr double slack = 1e-12;
  const std::size_t n = c.dimension();
  const std::size_t points = detail::ipow(g, n);
  std::vector<std::size_t> idx(n);
  std::vector<double> u(n);
  for (std::size_t f = 0; f < points; ++f) {
    detail::unravel(f, g, idx);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = static_cast<double>(idx[i]) / static_cast<double>(g - 1);
    }
    const double v = copula_cdf(c, u);
    if (v < frechet_lower(u) - slack || v > frechet_upper(u) + slack) return false;
  }
  return true;
}

/// Copula of coordinates (i, j), 0-based, i < j.
inline Copula bivariate_margin(const Copula& c, std::size_t i, std::size_t j) {
  const std::size_t n = c.dimension();
  if (!(i < j && j < n)) throw std::out_of_range("bivariate_margin: need i < j < n");
  switch (c.kind()) {
    case CopulaKind::comonotone:
      return comonotone(2);
    case CopulaKind::countermonotone:
      return c;
    case CopulaKind::checkerboard:
      break;
  }
  const std::size_t k = c.resolution();
  std::vector<double> out(k * k, 0.0);
  std::vector<std::size_t> cell(n);
  const auto masses = c.masses();
  for (std::size_t f = 0; f < masses.size(); ++f) {
    detail::unravel(f, k, cell);
    out[cell[i] * k + cell[j]] += masses[f];
  }
  return checkerboard(2, k, std::move(out));
}

/**
 * @brief Conditional law of one coordinate of a bivariate copula given the
 * other.
 *
 * `given` is the 0-based index of the conditioning coordinate. Checkerboards
 * condition on the cell containing u and return a law on cell midpoints;
 * u on a cell boundary is ambiguous and rejected.
 */
inline DiscreteMeasure1D conditional(const Copula& c, std::size_t given, double u) {
  if (c.dimension() != 2) throw std::invalid_argument("conditional: copula must be bivariate");
  if (given > 1) throw std::out_of_range("conditional: given must be 0 or 1");
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("conditional: u must lie in (0,1)");
  switch (c.kind()) {
    case CopulaKind::comonotone:
      return dirac_1d(u);
    case CopulaKind::countermonotone:
      return dirac_1d(1.0 - u);
    case CopulaKind::checkerboard:
      break;
  }
  const std::size_t k = c.resolution();
  const double scaled = u * static_cast<double>(k);
  if (scaled == std::floor(scaled)) {
    throw std::invalid_argument("conditional: u lies on a cell boundary");
  }
  const auto row = static_cast<std::size_t>(scaled);
  std::vector<double> atoms(k);
  std::vector<double> probs(k);
  for (std::size_t s = 0; s < k; ++s) {
    atoms[s] = detail::midpoint(s, k);
    const std::size_t flat = given == 0 ? row * k + s : s * k + row;
    probs[s] = static_cast<double>(k) * c.masses()[flat];
  }
  return make_measure_1d(atoms, probs);
}

/// Atoms (r - 1/2)/k with weights 1/k.
inline DiscreteMeasure1D uniform_grid_measure(std::size_t k) {
  if (k < 1) throw std::invalid_argument("uniform_grid_measure: need k >= 1");
  std::vector<double> atoms(k);
  for (std::size_t r = 0; r < k; ++r) atoms[r] = detail::midpoint(r, k);
  return make_measure_1d(atoms, std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

/**
 * @brief Rank-binned copula of an equal-weight, tie-free sample.
 *
 * Each coordinate is replaced by its normalized rank (r - 1/2)/N and binned
 * into k cells per axis. Requires k | N.
 */
inline Copula empirical_copula(const MultivariateMeasure& m, std::size_t k) {
  const std::size_t n = m.dimension();
  const std::size_t count = m.size();
  if (k == 0 || count % k != 0) {
    throw std::invalid_argument("empirical_copula: k must divide the atom count");
  }
  if (n < 2) throw std::invalid_argument("empirical_copula: need dimension >= 2");
  const double expected = 1.0 / static_cast<double>(count);
  for (double w : m.weights()) {
    if (std::abs(w - expected) > kMassTolerance) {
      throw std::invalid_argument("empirical_copula: atoms must carry equal weights");
    }
  }
  const std::size_t per_bin = count / k;
  // bin[r*n + i]: cell index of atom r along axis i.
  std::vector<std::size_t> bin(count * n);
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return m.atom(a)[i] < m.atom(b)[i];
    });
    for (std::size_t rank = 0; rank < count; ++rank) {
      if (rank > 0 && m.atom(order[rank])[i] == m.atom(order[rank - 1])[i]) {
        throw std::invalid_argument("empirical_copula: ties within a coordinate");
      }
      bin[order[rank] * n + i] = rank / per_bin;
    }
  }
  std::vector<std::size_t> counts(detail::ipow(k, n), 0);
  for (std::size_t r = 0; r < count; ++r) {
    ++counts[detail::ravel(std::span<const std::size_t>(bin).subspan(r * n, n), k)];
  }
  std::vector<double> masses(counts.size());
  for (std::size_t f = 0; f < counts.size(); ++f) {
    masses[f] = static_cast<double>(counts[f]) / static_cast<double>(count);
  }
  return checkerboard(n, k, std::move(masses));
}

namespace detail {

/// Breakpoints closer than this are treated as one.
inline constexpr double kBreakpointMerge = 1e-14;

struct Interval {
  double mid;
  double length;
};

inline std::vector<Interval> refine(std::vector<double> points) {
  points.push_back(0.0);
  points.push_back(1.0);
  std::sort(points.begin(), points.end());
  std::vector<double> cuts;
  for (double x : points) {
    if (cuts.empty() || x - cuts.back() > kBreakpointMerge) cuts.push_back(x);
  }
  cuts.front() = 0.0;
  if (1.0 - cuts.back() <= kBreakpointMerge) cuts.back() = 1.0;
  std::vector<Interval> out;
  for (std::size_t t = 0; t + 1 < cuts.size(); ++t) {
    out.push_back({0.5 * (cuts[t] + cuts[t + 1]), cuts[t + 1] - cuts[t]});
  }
  return out;
}

/// One family of n marginals, e.g. (mu_1, ..., mu_n).
using MarginalFamily = std::span<const DiscreteMeasure1D>;

/**
 * @brief Exact pushforward of dC under the quantile vectors of several
 * marginal families.
 *
 * Each axis of [0,1] is cut at the checkerboard cell boundaries and at every
 * cumulative-weight jump of every family's marginal on that axis. On every
 * resulting box all quantile maps and the copula density are constant, so the
 * box contributes one point per family with mass density * volume.
 * `visit(points, mass)` receives points[f] as an n-vector for family f.
 */
template <class Visitor>
void push_forward(const Copula& c, std::span<const MarginalFamily> families, Visitor&& visit) {
  const std::size_t n = c.dimension();
  for (const auto& fam : families) {
    if (fam.size() != n) {
      throw std::invalid_argument("push_forward: marginal count differs from copula dimension");
    }
  }
  const std::size_t nf = families.size();
  std::vector<std::vector<double>> points(nf, std::vector<double>(n));

  if (c.kind() == CopulaKind::comonotone || c.kind() == CopulaKind::countermonotone) {
    const bool flip = c.kind() == CopulaKind::countermonotone;
    std::vector<double> cuts;
    for (const auto& fam : families) {
      for (std::size_t i = 0; i < n; ++i) {
        for (double w : fam[i].cumulative()) cuts.push_back(flip && i == 1 ? 1.0 - w : w);
      }
    }
    for (const auto& iv : refine(std::move(cuts))) {
      if (iv.length <= 0.0) continue;
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
          points[f][i] = quantile(families[f][i], flip && i == 1 ? 1.0 - iv.mid : iv.mid);
        }
      }
      visit(std::as_const(points), iv.length);
    }
    return;
  }

  const std::size_t k = c.resolution();
  const double kd = static_cast<double>(k);
  std::vector<std::vector<Interval>> axes(n);
  // Per axis and interval: owning cell, then quantile of each family.
  std::vector<std::vector<std::size_t>> cell_of(n);
  std::vector<std::vector<std::vector<double>>> value_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> cuts;
    for (std::size_t r = 1; r < k; ++r) cuts.push_back(static_cast<double>(r) / kd);
    for (const auto& fam : families) {
      for (double w : fam[i].cumulative()) cuts.push_back(w);
    }
    axes[i] = refine(std::move(cuts));
    for (const auto& iv : axes[i]) {
      cell_of[i].push_back(std::min(k - 1, static_cast<std::size_t>(iv.mid * kd)));
      std::vector<double> vals(nf);
      for (std::size_t f = 0; f < nf; ++f) vals[f] = quantile(families[f][i], iv.mid);
      value_of[i].push_back(std::move(vals));
    }
  }

  const double density_scale = static_cast<double>(ipow(k, n));
  std::vector<std::size_t> pos(n, 0);
  std::vector<std::size_t> cell(n);
  while (true) {
    double volume = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      cell[i] = cell_of[i][pos[i]];
      volume *= axes[i][pos[i]].length;
    }
    const double mass = c.masses()[ravel(cell, k)] * density_scale * volume;
    if (mass > 0.0) {
      for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t i = 0; i < n; ++i) points[f][i] = value_of[i][pos[i]][f];
      }
      visit(std::as_const(points), mass);
    }
    std::size_t axis = n;
    while (axis-- > 0) {
      if (++pos[axis] < axes[axis].size()) break;
      pos[axis] = 0;
    }
    if (axis == static_cast<std::size_t>(-1)) break;
  }
}

}  // namespace detail

/// Law of (F^{-1}_1(U_1), ..., F^{-1}_n(U_n)) for U ~ dC.
inline MultivariateMeasure sklar_compose(const Copula& c,
                                         std::span<const DiscreteMeasure1D> marginals) {
  const std::size_t n = c.dimension();
  std::vector<double> coords;
  std::vector<double> weights;
  const detail::MarginalFamily family[] = {marginals};
  detail::push_forward(c, family, [&](const auto& points, double mass) {
    coords.insert(coords.end(), points[0].begin(), points[0].end());
    weights.push_back(mass);
  });
  return make_measure(n, coords, weights);
}

}  // namespace copot
