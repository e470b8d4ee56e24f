#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "copot/copulas.hpp"
#include "copot/measures.hpp"

namespace copot {

/// Deterministic, platform-independent draws on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for (seed, setting, instance).
  static Rng stream(std::uint64_t seed, std::uint64_t setting, std::uint64_t instance) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(setting), static_cast<std::uint32_t>(instance),
                      static_cast<std::uint32_t>(instance >> 32)};
    Rng rng(0);
    rng.engine_.seed(seq);
    return rng;
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform on {0, ..., n-1}, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform integer in [lo, hi].
  long long between(long long lo, long long hi) {
    return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t t = v.size(); t > 1; --t) std::swap(v[t - 1], v[below(t)]);
  }

 private:
  std::mt19937_64 engine_;
};

struct InstanceLimits {
  std::size_t max_resolution = 4;
  std::size_t max_atoms = 5;
  int lattice = 3;                // atoms in [-lattice, lattice]
  long long max_atom_weight = 12;  // integer weights; 5 * 12 <= 64
};

/// Integer atoms in [-lattice, lattice] with integer weights on a common
/// denominator (their sum).
inline DiscreteMeasure1D random_marginal(Rng& rng, const InstanceLimits& limits = {}) {
  std::vector<double> values;
  for (int v = -limits.lattice; v <= limits.lattice; ++v) values.push_back(v);
  rng.shuffle(values);
  const auto count = static_cast<std::size_t>(
      rng.between(1, static_cast<long long>(std::min(limits.max_atoms, values.size()))));
  values.resize(count);
  std::vector<double> weights(count);
  for (double& w : weights) w = static_cast<double>(rng.between(1, limits.max_atom_weight));
  return make_measure_1d(values, weights);
}

/// Mixture of permutation patterns (and sometimes the independence tensor)
/// with small integer mixing weights; slice sums are exactly uniform in
/// rational arithmetic.
inline Copula random_checkerboard(Rng& rng, std::size_t n, const InstanceLimits& limits = {}) {
  const auto k = static_cast<std::size_t>(rng.between(1, static_cast<long long>(limits.max_resolution)));
  const std::size_t cells = detail::ipow(k, n);
  std::vector<double> masses(cells, 0.0);
  const auto components = rng.between(1, 3);
  double total_weight = 0.0;
  std::vector<std::size_t> cell(n);
  for (long long t = 0; t < components; ++t) {
    const auto weight = static_cast<double>(rng.between(1, 4));
    total_weight += weight;
    if (rng.below(4) == 0) {
      for (double& m : masses) m += weight / static_cast<double>(cells);
      continue;
    }
    std::vector<std::vector<std::size_t>> perms(n, std::vector<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
      std::iota(perms[i].begin(), perms[i].end(), std::size_t{0});
      if (i > 0) rng.shuffle(perms[i]);
    }
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t i = 0; i < n; ++i) cell[i] = perms[i][r];
      masses[detail::ravel(cell, k)] += weight / static_cast<double>(k);
    }
  }
  for (double& m : masses) m /= total_weight;
  return checkerboard(n, k, std::move(masses));
}

/// mu and rho sharing the copula C.
struct Instance {
  std::size_t n;
  Copula copula;
  std::vector<DiscreteMeasure1D> mu_marginals;
  std::vector<DiscreteMeasure1D> rho_marginals;
  MultivariateMeasure mu;
  MultivariateMeasure rho;
};

inline Instance random_instance(Rng& rng, std::size_t n, const InstanceLimits& limits = {}) {
  Copula c = random_checkerboard(rng, n, limits);
  std::vector<DiscreteMeasure1D> mu_m, rho_m;
  for (std::size_t i = 0; i < n; ++i) mu_m.push_back(random_marginal(rng, limits));
  for (std::size_t i = 0; i < n; ++i) rho_m.push_back(random_marginal(rng, limits));
  MultivariateMeasure mu = sklar_compose(c, mu_m);
  MultivariateMeasure rho = sklar_compose(c, rho_m);
  return {n, std::move(c), std::move(mu_m), std::move(rho_m), std::move(mu), std::move(rho)};
}

}  // namespace copot
