#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace copot {

/// Mass tolerance used by every mass-balance check, scaled by atom count.
inline constexpr double kMassTolerance = 1e-12;

namespace detail {

// Weights already summing to 1 up to rounding are kept bit-for-bit, so
// serialized measures read back unchanged.
inline void normalize(std::vector<double>& weights) {
  if (weights.size() == 1) {
    weights[0] = 1.0;
    return;
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double rounding = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights.size());
  if (std::abs(total - 1.0) <= rounding) return;
  for (double& w : weights) w /= total;
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

}  // namespace detail

class DiscreteMeasure1D;
DiscreteMeasure1D make_measure_1d(std::span<const double> atoms,
                                  std::span<const double> weights);

/**
 * @brief A probability measure on R with finitely many atoms.
 *
 * Atoms are strictly increasing, weights are positive and sum to one. The
 * cumulative weights are cached; the last one is exactly 1 so that the
 * generalized inverse is defined on all of (0,1].
 */
class DiscreteMeasure1D {
 public:
  std::size_t size() const { return atoms_.size(); }
  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  /// F(atom_r) for each atom r.
  std::span<const double> cumulative() const { return cumulative_; }

  friend bool operator==(const DiscreteMeasure1D&,
                         const DiscreteMeasure1D&) = default;

 private:
  friend DiscreteMeasure1D make_measure_1d(std::span<const double>,
                                           std::span<const double>);
  DiscreteMeasure1D() = default;

  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Sorts, merges exactly-equal atoms, drops zero weights and normalizes.
inline DiscreteMeasure1D make_measure_1d(std::span<const double> atoms,
                                         std::span<const double> weights) {
  if (atoms.size() != weights.size()) {
    throw std::invalid_argument("make_measure_1d: atoms and weights differ in length");
  }
  if (atoms.empty()) {
    throw std::invalid_argument("make_measure_1d: empty input");
  }
  for (std::size_t r = 0; r < atoms.size(); ++r) {
    detail::require_finite(atoms[r], "make_measure_1d atom");
    detail::require_finite(weights[r], "make_measure_1d weight");
    if (weights[r] < 0.0) {
      throw std::invalid_argument("make_measure_1d: negative weight");
    }
  }

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return atoms[l] < atoms[r]; });

  DiscreteMeasure1D m;
  for (std::size_t idx : order) {
    if (weights[idx] == 0.0) continue;
    if (!m.atoms_.empty() && m.atoms_.back() == atoms[idx]) {
      m.weights_.back() += weights[idx];
    } else {
      m.atoms_.push_back(atoms[idx]);
      m.weights_.push_back(weights[idx]);
    }
  }
  if (m.atoms_.empty()) {
    throw std::invalid_argument("make_measure_1d: all weights are zero");
  }

  detail::normalize(m.weights_);

  m.cumulative_.resize(m.weights_.size());
  std::partial_sum(m.weights_.begin(), m.weights_.end(), m.cumulative_.begin());
  m.cumulative_.back() = 1.0;
  return m;
}

inline DiscreteMeasure1D make_measure_1d(const std::vector<double>& atoms,
                                         const std::vector<double>& weights) {
  return make_measure_1d(std::span<const double>(atoms), std::span<const double>(weights));
}

/// Dirac mass at x.
inline DiscreteMeasure1D dirac_1d(double x) {
  const double one = 1.0;
  return make_measure_1d(std::span<const double>(&x, 1), std::span<const double>(&one, 1));
}

/// Total weight of atoms <= x.
inline double cdf(const DiscreteMeasure1D& m, double x) {
  detail::require_finite(x, "cdf");
  const auto atoms = m.atoms();
  const auto it = std::upper_bound(atoms.begin(), atoms.end(), x);
  if (it == atoms.begin()) return 0.0;
  return m.cumulative()[static_cast<std::size_t>(it - atoms.begin()) - 1];
}

/// Generalized inverse inf{x : F(x) >= u} on (0,1].
inline double quantile(const DiscreteMeasure1D& m, double u) {
  if (!(u > 0.0 && u <= 1.0)) {
    throw std::invalid_argument("quantile: u must lie in (0,1]");
  }
  const auto cum = m.cumulative();
  const auto it = std::lower_bound(cum.begin(), cum.end(), u);
  return m.atoms()[static_cast<std::size_t>(it - cum.begin())];
}

class MultivariateMeasure;
MultivariateMeasure make_measure(std::size_t dimension, std::span<const double> coords,
                                 std::span<const double> weights);

/**
 * @brief A probability measure on R^n with finitely many atoms.
 *
 * Atoms are stored row-major in one flat buffer and kept in lexicographic
 * order, which makes equality of two measures an exact element-wise test.
 */
class MultivariateMeasure {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> atom(std::size_t r) const {
    return std::span<const double>(coords_).subspan(r * dimension_, dimension_);
  }
  double weight(std::size_t r) const { return weights_[r]; }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> coordinates() const { return coords_; }

  friend bool operator==(const MultivariateMeasure&,
                         const MultivariateMeasure&) = default;

 private:
  friend MultivariateMeasure make_measure(std::size_t, std::span<const double>,
                                          std::span<const double>);
  MultivariateMeasure() = default;

  std::size_t dimension_ = 0;
  std::vector<double> coords_;
  std::vector<double> weights_;
};

/// `coords` holds size()*dimension values, one atom after another.
inline MultivariateMeasure make_measure(std::size_t dimension, std::span<const double> coords,
                                        std::span<const double> weights) {
  if (dimension == 0) {
    throw std::invalid_argument("make_measure: dimension must be positive");
  }
  if (coords.size() != weights.size() * dimension) {
    throw std::invalid_argument("make_measure: every atom needs exactly n coordinates");
  }
  if (weights.empty()) {
    throw std::invalid_argument("make_measure: empty input");
  }
  for (double c : coords) detail::require_finite(c, "make_measure atom");
  for (double w : weights) {
    detail::require_finite(w, "make_measure weight");
    if (w < 0.0) throw std::invalid_argument("make_measure: negative weight");
  }

  auto atom_of = [&](std::size_t r) { return coords.subspan(r * dimension, dimension); };
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const auto a = atom_of(l);
    const auto b = atom_of(r);
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  });

  MultivariateMeasure m;
  m.dimension_ = dimension;
  std::span<const double> last;
  for (std::size_t idx : order) {
    if (weights[idx] == 0.0) continue;
    const auto a = atom_of(idx);
    if (!m.weights_.empty() && std::equal(a.begin(), a.end(), last.begin())) {
      m.weights_.back() += weights[idx];
      continue;
    }
    m.coords_.insert(m.coords_.end(), a.begin(), a.end());
    m.weights_.push_back(weights[idx]);
    last = a;
  }
  if (m.weights_.empty()) {
    throw std::invalid_argument("make_measure: all weights are zero");
  }
  detail::normalize(m.weights_);
  return m;
}

inline MultivariateMeasure make_measure(const std::vector<std::vector<double>>& atoms,
                                        const std::vector<double>& weights) {
  if (atoms.empty()) throw std::invalid_argument("make_measure: empty input");
  const std::size_t n = atoms.front().size();
  std::vector<double> flat;
  flat.reserve(atoms.size() * n);
  for (const auto& a : atoms) {
    if (a.size() != n) {
      throw std::invalid_argument("make_measure: every atom needs exactly n coordinates");
    }
    flat.insert(flat.end(), a.begin(), a.end());
  }
  return make_measure(n, flat, weights);
}

/// Views a 1-D measure as the n=1 case of a multivariate measure.
inline MultivariateMeasure as_multivariate(const DiscreteMeasure1D& m) {
  return make_measure(1, m.atoms(), m.weights());
}

/// Pushforward under the projection onto coordinate `i` (0-based).
inline DiscreteMeasure1D marginal(const MultivariateMeasure& m, std::size_t i) {
  if (i >= m.dimension()) {
    throw std::out_of_range("marginal: coordinate index out of range");
  }
  std::vector<double> xs(m.size());
  for (std::size_t r = 0; r < m.size(); ++r) xs[r] = m.atom(r)[i];
  return make_measure_1d(xs, m.weights());
}

inline std::vector<DiscreteMeasure1D> marginals(const MultivariateMeasure& m) {
  std::vector<DiscreteMeasure1D> out;
  out.reserve(m.dimension());
  for (std::size_t i = 0; i < m.dimension(); ++i) out.push_back(marginal(m, i));
  return out;
}

/// x -> scale * x + shift with scale > 0.
struct AffineMap {
  double scale = 1.0;
  double shift = 0.0;

  double operator()(double x) const { return scale * x + shift; }
};

inline MultivariateMeasure map_coordinates(const MultivariateMeasure& m,
                                           std::span<const AffineMap> maps) {
  if (maps.size() != m.dimension()) {
    throw std::invalid_argument("map_coordinates: need one map per coordinate");
  }
  for (const auto& f : maps) {
    detail::require_finite(f.scale, "map_coordinates scale");
    detail::require_finite(f.shift, "map_coordinates shift");
    if (!(f.scale > 0.0)) {
      throw std::invalid_argument("map_coordinates: maps must be strictly increasing");
    }
  }
  std::vector<double> coords(m.coordinates().begin(), m.coordinates().end());
  const std::size_t n = m.dimension();
  for (std::size_t r = 0; r < coords.size(); ++r) coords[r] = maps[r % n](coords[r]);
  return make_measure(n, coords, m.weights());
}

inline DiscreteMeasure1D map_measure(const DiscreteMeasure1D& m, AffineMap f) {
  if (!(f.scale > 0.0)) {
    throw std::invalid_argument("map_measure: map must be strictly increasing");
  }
  std::vector<double> xs(m.atoms().begin(), m.atoms().end());
  for (double& x : xs) x = f(x);
  return make_measure_1d(xs, m.weights());
}

}  // namespace copot
