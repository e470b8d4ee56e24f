#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace copot {

/**
 * @brief Primal network simplex for the dense transportation problem
 *
 *   min sum_ij cost(i,j) x_ij  s.t.  sum_j x_ij = supply_i,
 *                                    sum_i x_ij = demand_j,  x >= 0.
 *
 * The basis is a spanning tree on the bipartite graph of sources and sinks
 * (a + b - 1 basic cells, degenerate ones included). Potentials are rebuilt
 * from the tree after every pivot. Entering cells are priced by block
 * search. Once a + b consecutive pivots have been degenerate, the entering
 * cell is the lowest-index eligible one and ties for the leaving cell go to
 * the lowest index (Bland), until the next pivot that moves flow.
 */
class TransportationSimplex {
 public:
  struct Cell {
    std::size_t source;
    std::size_t sink;
    double flow;
  };

  TransportationSimplex(std::span<const double> supply, std::span<const double> demand,
                        std::vector<double> costs)
      : sources_(supply.size()),
        sinks_(demand.size()),
        supply_(supply.begin(), supply.end()),
        demand_(demand.begin(), demand.end()),
        costs_(std::move(costs)) {
    if (sources_ == 0 || sinks_ == 0) {
      throw std::invalid_argument("TransportationSimplex: empty side");
    }
    if (costs_.size() != sources_ * sinks_) {
      throw std::invalid_argument("TransportationSimplex: cost matrix has wrong size");
    }
    double scale = 0.0;
    for (double c : costs_) {
      if (!std::isfinite(c)) throw std::invalid_argument("TransportationSimplex: non-finite cost");
      scale = std::max(scale, std::abs(c));
    }
    tolerance_ = 1e-12 * (1.0 + scale);
  }

  /// Runs to optimality. Throws if the pivot budget is exhausted.
  void solve() {
    initial_basis();
    compute_potentials();
    const std::size_t budget = 64 * (sources_ + sinks_) * (sources_ + sinks_) + 100000;
    const std::size_t patience = sources_ + sinks_;
    std::size_t degenerate_run = 0;
    for (pivots_ = 0; pivots_ < budget; ++pivots_) {
      const bool bland = degenerate_run >= patience;
      const std::size_t entering = bland ? first_eligible() : block_search();
      if (entering == kNone) return;
      degenerate_run = pivot(entering) ? degenerate_run + 1 : 0;
      compute_potentials();
    }
    throw std::runtime_error("TransportationSimplex: pivot budget exhausted");
  }

  /// Basic cells carrying positive flow.
  std::vector<Cell> flows() const {
    std::vector<Cell> out;
    for (const auto& b : basis_) {
      if (b.flow > 0.0) out.push_back({b.source, b.sink, b.flow});
    }
    std::sort(out.begin(), out.end(), [](const Cell& l, const Cell& r) {
      return l.source != r.source ? l.source < r.source : l.sink < r.sink;
    });
    return out;
  }

  double objective() const {
    double total = 0.0;
    for (const auto& b : basis_) total += b.flow * cost(b.source, b.sink);
    return total;
  }

  std::size_t pivots() const { return pivots_; }

  /// Largest violation of reduced-cost optimality among nonbasic cells.
  double max_negative_reduced_cost() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < sources_; ++i) {
      for (std::size_t j = 0; j < sinks_; ++j) worst = std::min(worst, reduced_cost(i, j));
    }
    return -worst;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double cost(std::size_t i, std::size_t j) const { return costs_[i * sinks_ + j]; }
  double reduced_cost(std::size_t i, std::size_t j) const {
    return cost(i, j) - potential_[i] - potential_[sources_ + j];
  }

  void add_basic(std::size_t i, std::size_t j, double flow) {
    const std::size_t id = basis_.size();
    basis_.push_back({i, j, flow});
    incident_[i].push_back(id);
    incident_[sources_ + j].push_back(id);
  }

  // Northwest corner rule; produces exactly a + b - 1 cells forming a tree.
  void initial_basis() {
    incident_.assign(sources_ + sinks_, {});
    basis_.clear();
    std::size_t i = 0;
    std::size_t j = 0;
    double s = supply_[0];
    double d = demand_[0];
    while (true) {
      const double x = std::min(s, d);
      add_basic(i, j, std::max(x, 0.0));
      s -= x;
      d -= x;
      if (i + 1 == sources_ && j + 1 == sinks_) break;
      if (j + 1 == sinks_ || (i + 1 < sources_ && s <= d)) {
        s = supply_[++i];
      } else {
        d = demand_[++j];
      }
    }
  }

  void compute_potentials() {
    const std::size_t nodes = sources_ + sinks_;
    potential_.assign(nodes, 0.0);
    visited_.assign(nodes, 0);
    stack_.clear();
    stack_.push_back(0);
    visited_[0] = 1;
    while (!stack_.empty()) {
      const std::size_t node = stack_.back();
      stack_.pop_back();
      for (std::size_t id : incident_[node]) {
        const auto& b = basis_[id];
        const std::size_t src = b.source;
        const std::size_t snk = sources_ + b.sink;
        const std::size_t other = node == src ? snk : src;
        if (visited_[other]) continue;
        visited_[other] = 1;
        potential_[other] = cost(b.source, b.sink) - potential_[node];
        stack_.push_back(other);
      }
    }
  }

  std::size_t block_search() {
    const std::size_t total = sources_ * sinks_;
    const std::size_t block =
        std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(total))));
    std::size_t best = kNone;
    double best_value = -tolerance_;
    std::size_t scanned_in_block = 0;
    for (std::size_t scanned = 0; scanned < total; ++scanned) {
      const std::size_t cell = next_;
      next_ = next_ + 1 == total ? 0 : next_ + 1;
      const double r = reduced_cost(cell / sinks_, cell % sinks_);
      if (r < best_value) {
        best_value = r;
        best = cell;
      }
      if (++scanned_in_block == block) {
        if (best != kNone) return best;
        scanned_in_block = 0;
      }
    }
    return best;
  }

  std::size_t first_eligible() const {
    const std::size_t total = sources_ * sinks_;
    for (std::size_t cell = 0; cell < total; ++cell) {
      if (reduced_cost(cell / sinks_, cell % sinks_) < -tolerance_) return cell;
    }
    return kNone;
  }

  // Tree path from source node `from` to sink node `to`, as basic-cell ids in
  // walking order.
  std::vector<std::size_t> tree_path(std::size_t from, std::size_t to) {
    const std::size_t nodes = sources_ + sinks_;
    parent_edge_.assign(nodes, kNone);
    visited_.assign(nodes, 0);
    stack_.clear();
    stack_.push_back(from);
    visited_[from] = 1;
    while (!stack_.empty() && !visited_[to]) {
      const std::size_t node = stack_.back();
      stack_.pop_back();
      for (std::size_t id : incident_[node]) {
        const auto& b = basis_[id];
        const std::size_t other = node == b.source ? sources_ + b.sink : b.source;
        if (visited_[other]) continue;
        visited_[other] = 1;
        parent_edge_[other] = id;
        stack_.push_back(other);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = to; node != from;) {
      const std::size_t id = parent_edge_[node];
      path.push_back(id);
      const auto& b = basis_[id];
      node = node == b.source ? sources_ + b.sink : b.source;
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  // Returns true when the pivot was degenerate.
  bool pivot(std::size_t entering) {
    const std::size_t ei = entering / sinks_;
    const std::size_t ej = entering % sinks_;
    const auto path = tree_path(ei, sources_ + ej);

    // Walking from the source, path cells alternate -, +, -, ..., -.
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < path.size(); t += 2) theta = std::min(theta, basis_[path[t]].flow);
    std::size_t leaving = kNone;
    std::size_t leaving_index = kNone;
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const auto& b = basis_[path[t]];
      if (b.flow != theta) continue;
      const std::size_t index = b.source * sinks_ + b.sink;
      if (index < leaving_index) {
        leaving_index = index;
        leaving = path[t];
      }
    }

    for (std::size_t t = 0; t < path.size(); ++t) {
      auto& b = basis_[path[t]];
      b.flow = (t % 2 == 0) ? b.flow - theta : b.flow + theta;
    }

    // Replace the leaving cell in place by the entering one.
    auto detach = [&](std::size_t node, std::size_t id) {
      auto& list = incident_[node];
      list.erase(std::find(list.begin(), list.end(), id));
    };
    auto& slot = basis_[leaving];
    detach(slot.source, leaving);
    detach(sources_ + slot.sink, leaving);
    slot = {ei, ej, theta};
    incident_[ei].push_back(leaving);
    incident_[sources_ + ej].push_back(leaving);
    return !(theta > 1e-15);
  }

  struct Basic {
    std::size_t source;
    std::size_t sink;
    double flow;
  };

  std::size_t sources_;
  std::size_t sinks_;
  std::vector<double> supply_;
  std::vector<double> demand_;
  std::vector<double> costs_;
  double tolerance_ = 0.0;

  std::vector<Basic> basis_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<double> potential_;
  std::vector<char> visited_;
  std::vector<std::size_t> stack_;
  std::vector<std::size_t> parent_edge_;
  std::size_t next_ = 0;
  std::size_t pivots_ = 0;
};

}  // namespace copot
