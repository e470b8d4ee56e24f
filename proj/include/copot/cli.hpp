#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "copot/copulas.hpp"
#include "copot/counterexample.hpp"
#include "copot/instances.hpp"
#include "copot/io.hpp"
#include "copot/measures.hpp"
#include "copot/transport.hpp"

namespace copot::cli {

enum ExitCode : int {
  kOk = 0,
  kViolation = 1,
  kInputError = 2,
  kCapExceeded = 3,
  kExtremalCopula = 4,
  kScheduleExhausted = 5,
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t instances = 200;
  std::vector<std::size_t> dimensions{2, 3};
  std::vector<double> powers{1.0, 2.0, 3.0};
  /// Smoke mode: run every dimension with this (p, q) instead of p = q.
  std::optional<std::pair<double, double>> allow_pq;
  std::size_t max_atoms = 5;
  std::size_t max_pairs = kDefaultMaxPairs;
  double rel_opt = 1e-8;
  double mass_tolerance = kMassTolerance;
  std::string out;
};

struct Setting {
  std::uint64_t id;
  std::size_t n;
  double p;
  double q;
};

inline std::vector<Setting> settings(const RunConfig& cfg) {
  std::vector<Setting> out;
  std::uint64_t id = 0;
  for (std::size_t n : cfg.dimensions) {
    if (cfg.allow_pq) {
      out.push_back({id++, n, cfg.allow_pq->first, cfg.allow_pq->second});
      continue;
    }
    for (double p : cfg.powers) out.push_back({id++, n, p, p});
  }
  return out;
}

inline InstanceLimits limits_of(const RunConfig& cfg) {
  InstanceLimits limits;
  limits.max_atoms = cfg.max_atoms;
  return limits;
}

/// Instance `index` of a setting; depends only on (seed, setting id, index).
inline Instance campaign_instance(const RunConfig& cfg, const Setting& s, std::size_t index) {
  Rng rng = Rng::stream(cfg.seed, s.id, index);
  return random_instance(rng, s.n, limits_of(cfg));
}

struct VerifyRow {
  std::size_t instance;
  std::size_t n;
  double p;
  double q;
  double diamond_cost;
  double exact_cost;
  double rel_err;
};

inline VerifyRow verify_instance(const Instance& inst, const Setting& s, std::size_t row,
                                 std::size_t max_pairs) {
  const CostSpec spec(s.p, s.q);
  const double d = plan_cost(diamond(inst.copula, inst.mu_marginals, inst.rho_marginals), spec);
  const double e = exact_ot(inst.mu, inst.rho, spec, max_pairs).value;
  return {row, s.n, s.p, s.q, d, e, std::abs(d - e) / std::max(1.0, e)};
}

inline std::vector<VerifyRow> run_verification(const RunConfig& cfg) {
  std::vector<VerifyRow> rows;
  std::size_t row = 0;
  for (const auto& s : settings(cfg)) {
    for (std::size_t t = 0; t < cfg.instances; ++t) {
      rows.push_back(verify_instance(campaign_instance(cfg, s, t), s, row++, cfg.max_pairs));
    }
  }
  return rows;
}

inline std::string verify_csv(const std::vector<VerifyRow>& rows) {
  std::ostringstream out;
  out << "instance,n,p,diamond_cost,exact_cost,rel_err\n";
  for (const auto& r : rows) {
    out << r.instance << ',' << r.n << ',' << shortest(r.p) << ',' << shortest(r.diamond_cost) << ','
        << shortest(r.exact_cost) << ',' << shortest(r.rel_err) << '\n';
  }
  return out.str();
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!(cfg.rel_opt > 0.0) || !(cfg.mass_tolerance > 0.0) || cfg.max_atoms == 0 || cfg.max_pairs == 0) {
    err << "verify: tolerances and caps must be positive\n";
    return kInputError;
  }
  std::vector<VerifyRow> rows;
  try {
    if (cfg.allow_pq) (void)CostSpec(cfg.allow_pq->first, cfg.allow_pq->second);
    rows = run_verification(cfg);
  } catch (const std::exception& e) {
    err << "verify: " << e.what() << '\n';
    return kInputError;
  }
  const std::string csv = verify_csv(rows);
  std::ostream& summary = cfg.out.empty() ? err : out;
  if (cfg.out.empty()) {
    out << csv;
  } else {
    write_text_file(cfg.out, csv);
  }

  double worst = 0.0;
  std::size_t offenders = 0;
  for (const auto& r : rows) {
    worst = std::max(worst, r.rel_err);
    if (r.rel_err > cfg.rel_opt) {
      ++offenders;
      err << "violation: instance " << r.instance << " n=" << r.n << " p=" << pretty(r.p)
          << " q=" << pretty(r.q) << " diamond=" << pretty(r.diamond_cost)
          << " exact=" << pretty(r.exact_cost) << " rel_err=" << pretty(r.rel_err) << '\n';
    }
  }
  summary << "verified " << rows.size() << " instances, max rel_err " << pretty(worst) << ", "
          << offenders << " above " << pretty(cfg.rel_opt) << '\n';
  return offenders == 0 ? kOk : kViolation;
}

/**
 * Resolves a copula argument: `independence`, `comonotone`,
 * `countermonotone`, `checkerboard:<path>`, or a path to a copula file.
 */
inline Copula resolve_copula(const std::string& spec, std::size_t n, std::size_t k) {
  if (n == 1 && (spec == "independence" || spec == "comonotone")) return checkerboard(1, 1, {1.0});
  if (spec == "independence") return independence(n, k);
  if (spec == "comonotone") return comonotone(n);
  if (spec == "countermonotone") return countermonotone(n);
  const std::string prefix = "checkerboard:";
  const std::string path = spec.rfind(prefix, 0) == 0 ? spec.substr(prefix.size()) : spec;
  Copula c = copula_from_json(load_json_file(path));
  if (spec.rfind(prefix, 0) == 0 && !c.is_checkerboard()) {
    throw ParseError(path + ": expected a checkerboard copula");
  }
  return c;
}

struct CostArgs {
  double p = 2.0;
  double q = 2.0;
  std::optional<std::string> emit_plan;
};

inline void print_cost(std::ostream& out, const char* label, double cost, double p) {
  out << label << "_cost_p " << pretty(cost) << '\n';
  out << label << "_W " << pretty(std::pow(cost, 1.0 / p)) << '\n';
}

struct DiamondArgs : CostArgs {
  std::string copula = "independence";
  std::optional<std::size_t> n;
  std::size_t k = 4;
  std::string mu;
  std::string rho;
};

inline int cmd_diamond(const DiamondArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CostSpec spec(args.p, args.q);
    const auto mu = marginals_from_json(load_json_file(args.mu));
    const auto rho = marginals_from_json(load_json_file(args.rho));
    if (mu.size() != rho.size()) throw ParseError("diamond: mu and rho have different dimensions");
    const std::size_t n = args.n.value_or(mu.size());
    const Copula c = resolve_copula(args.copula, n, args.k);
    if (c.dimension() != mu.size()) throw ParseError("diamond: copula dimension differs from marginal count");
    const TransportPlan plan = diamond(c, mu, rho);
    print_cost(out, "diamond", plan_cost(plan, spec), spec.p);
    if (args.emit_plan) write_text_file(*args.emit_plan, to_json(plan).dump(2) + "\n");
    return kOk;
  } catch (const std::exception& e) {
    err << "diamond: " << e.what() << '\n';
    return kInputError;
  }
}

struct ExactArgs : CostArgs {
  std::string mu;
  std::string rho;
  std::size_t max_pairs = kDefaultMaxPairs;
};

inline int cmd_exact(const ExactArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const CostSpec spec(args.p, args.q);
    const auto mu = measure_from_json(load_json_file(args.mu));
    const auto rho = measure_from_json(load_json_file(args.rho));
    const ExactResult res = exact_ot(mu, rho, spec, args.max_pairs);
    print_cost(out, "exact", res.value, spec.p);
    if (args.emit_plan) write_text_file(*args.emit_plan, to_json(res.plan).dump(2) + "\n");
    return kOk;
  } catch (const SizeCapExceeded& e) {
    err << "exact: " << e.what() << '\n';
    return kCapExceeded;
  } catch (const std::exception& e) {
    err << "exact: " << e.what() << '\n';
    return kInputError;
  }
}

struct CounterexampleArgs {
  std::string copula = "independence";
  std::size_t n = 2;
  std::size_t k = 16;
  double p = 1.0;
  double q = 2.0;
  std::string out;
  GapSearchOptions options;
};

/// `report.json` -> `report.csv`; anything else gets `.csv` appended.
inline std::string curve_path_for(const std::string& out) {
  std::filesystem::path path(out);
  if (path.extension() == ".json") return path.replace_extension(".csv").string();
  return out + ".csv";
}

inline int cmd_counterexample(const CounterexampleArgs& args, std::ostream& out, std::ostream& err) {
  Copula carrier = independence(2, 1);
  try {
    (void)CostSpec(args.p, args.q);
    if (args.p == args.q) {
      err << "counterexample: p == q, the diamond coupling is optimal and no construction exists\n";
      return kInputError;
    }
    const Copula c = resolve_copula(args.copula, args.n, args.k);
    carrier = c.is_checkerboard() ? c : discretize(c, args.k);
  } catch (const std::exception& e) {
    err << "counterexample: " << e.what() << '\n';
    return kInputError;
  }

  GapSearchResult result{};
  try {
    result = gap_search(carrier, args.p, args.q, args.options);
  } catch (const NoViolatingPair& e) {
    err << "counterexample: " << e.what() << '\n';
    return kExtremalCopula;
  }
  result.report.copula = args.copula + " " + result.report.copula;

  const std::string report = to_json(result.report).dump(2) + "\n";
  out << report;
  if (!args.out.empty()) {
    write_text_file(args.out, report);
    write_text_file(curve_path_for(args.out), gap_curve_csv(result.curve));
  }
  if (!result.report.success) {
    err << "counterexample: no epsilon in the schedule produced an accepted gap (largest gap "
        << pretty(result.report.gap) << " at epsilon " << pretty(result.report.epsilon)
        << "; limits " << pretty(result.report.limit_diamond) << " vs "
        << pretty(result.report.limit_alt) << ")\n";
    return kScheduleExhausted;
  }
  return kOk;
}

}  // namespace copot::cli
