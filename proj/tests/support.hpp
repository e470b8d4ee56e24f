#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "copot/instances.hpp"
#include "copot/measures.hpp"
#include "copot/transport.hpp"

namespace copot::testing {

/// Northwest-corner plan over shuffled atom orders; feasible, rarely optimal.
inline TransportPlan random_feasible_plan(Rng& rng, const MultivariateMeasure& mu,
                                          const MultivariateMeasure& rho) {
  std::vector<std::size_t> rows(mu.size()), cols(rho.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  rng.shuffle(rows);
  rng.shuffle(cols);
  PlanBuilder builder(mu.dimension());
  std::size_t a = 0, b = 0;
  double s = mu.weight(rows[0]);
  double d = rho.weight(cols[0]);
  while (a < rows.size() && b < cols.size()) {
    const double x = std::min(s, d);
    if (x > 0.0) builder.add(mu.atom(rows[a]), rho.atom(cols[b]), x);
    s -= x;
    d -= x;
    const bool last_row = a + 1 == rows.size();
    const bool last_col = b + 1 == cols.size();
    if (last_row && last_col) break;
    if (last_col || (!last_row && s <= d)) {
      s = mu.weight(rows[++a]);
    } else {
      d = rho.weight(cols[++b]);
    }
  }
  return builder.build();
}

inline double relative_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace copot::testing
