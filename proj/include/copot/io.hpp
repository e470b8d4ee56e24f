#pragma once

#include <charconv>
#include <cstdio>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "copot/copulas.hpp"
#include "copot/counterexample.hpp"
#include "copot/measures.hpp"
#include "copot/transport.hpp"

namespace copot {

using json = nlohmann::json;

/// Malformed input file or document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that round-trips to the same double.
inline std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// 12 significant digits, for human-facing output.
inline std::string pretty(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// -- measures ---------------------------------------------------------------

inline json to_json(const MultivariateMeasure& m) {
  json atoms = json::array();
  for (std::size_t r = 0; r < m.size(); ++r) {
    atoms.push_back(std::vector<double>(m.atom(r).begin(), m.atom(r).end()));
  }
  return {{"atoms", atoms}, {"weights", std::vector<double>(m.weights().begin(), m.weights().end())}};
}

inline json to_json(const DiscreteMeasure1D& m) { return to_json(as_multivariate(m)); }

inline MultivariateMeasure measure_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("atoms") || !j.contains("weights")) {
      throw ParseError("measure: expected an object with \"atoms\" and \"weights\"");
    }
    const auto& atoms = j.at("atoms");
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (!atoms.is_array() || atoms.empty()) throw ParseError("measure: \"atoms\" must be a non-empty array");
    std::vector<std::vector<double>> rows;
    for (const auto& a : atoms) {
      // A bare number is accepted as a 1-D atom.
      rows.push_back(a.is_number() ? std::vector<double>{a.get<double>()} : a.get<std::vector<double>>());
    }
    if (rows.size() != weights.size()) throw ParseError("measure: atoms and weights differ in length");
    return make_measure(rows, weights);
  } catch (const json::exception& e) {
    throw ParseError(std::string("measure: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

inline DiscreteMeasure1D measure_1d_from_json(const json& j) {
  const MultivariateMeasure m = measure_from_json(j);
  if (m.dimension() != 1) throw ParseError("measure: expected a one-dimensional measure");
  return marginal(m, 0);
}

/// Either an array of 1-D measures or one multivariate measure (its
/// marginals are taken).
inline std::vector<DiscreteMeasure1D> marginals_from_json(const json& j) {
  if (j.is_array()) {
    std::vector<DiscreteMeasure1D> out;
    for (const auto& e : j) out.push_back(measure_1d_from_json(e));
    if (out.empty()) throw ParseError("marginals: empty array");
    return out;
  }
  return marginals(measure_from_json(j));
}

// -- copulas ----------------------------------------------------------------

inline json to_json(const Copula& c) {
  switch (c.kind()) {
    case CopulaKind::comonotone:
      return {{"variant", "comonotone"}, {"n", c.dimension()}};
    case CopulaKind::countermonotone:
      return {{"variant", "countermonotone"}};
    case CopulaKind::checkerboard:
      break;
  }
  return {{"variant", "checkerboard"},
          {"n", c.dimension()},
          {"k", c.resolution()},
          {"masses", std::vector<double>(c.masses().begin(), c.masses().end())}};
}

inline Copula copula_from_json(const json& j) {
  try {
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "comonotone") return comonotone(j.at("n").get<std::size_t>());
    if (variant == "countermonotone") {
      return j.contains("n") ? countermonotone(j.at("n").get<std::size_t>()) : countermonotone();
    }
    if (variant == "checkerboard") {
      return checkerboard(j.at("n").get<std::size_t>(), j.at("k").get<std::size_t>(),
                          j.at("masses").get<std::vector<double>>());
    }
    throw ParseError("copula: unknown variant \"" + variant + "\"");
  } catch (const json::exception& e) {
    throw ParseError(std::string("copula: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

// -- plans ------------------------------------------------------------------

inline json to_json(const TransportPlan& plan) {
  json entries = json::array();
  for (std::size_t e = 0; e < plan.size(); ++e) {
    entries.push_back({{"x", std::vector<double>(plan.x(e).begin(), plan.x(e).end())},
                       {"y", std::vector<double>(plan.y(e).begin(), plan.y(e).end())},
                       {"w", plan.w(e)}});
  }
  return {{"entries", entries}};
}

inline TransportPlan plan_from_json(const json& j) {
  try {
    const auto& entries = j.at("entries");
    if (!entries.is_array() || entries.empty()) throw ParseError("plan: \"entries\" must be a non-empty array");
    std::size_t n = 0;
    std::vector<double> xs, ys, ws;
    for (const auto& e : entries) {
      const auto x = e.at("x").get<std::vector<double>>();
      const auto y = e.at("y").get<std::vector<double>>();
      if (n == 0) n = x.size();
      if (x.size() != n || y.size() != n) throw ParseError("plan: inconsistent entry dimensions");
      xs.insert(xs.end(), x.begin(), x.end());
      ys.insert(ys.end(), y.begin(), y.end());
      ws.push_back(e.at("w").get<double>());
    }
    return make_plan(n, xs, ys, ws);
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

// -- counterexample reports -------------------------------------------------

inline constexpr const char* kDiscreteCaveat =
    "atomic marginals: the copula of (mu_eps, rho_eps) is not unique; the report shows "
    "non-optimality of the diamond coupling built from the supplied copula";

inline json to_json(const CounterexampleReport& r) {
  return {{"p", r.p},
          {"q", r.q},
          {"copula", r.copula},
          {"pair", {r.i, r.j}},
          {"adversary", r.adversary},
          {"epsilon", r.epsilon},
          {"diamond_cost", r.diamond_cost},
          {"alt_cost", r.alt_cost},
          {"exact_cost", r.exact_cost ? json(*r.exact_cost) : json(nullptr)},
          {"gap", r.gap},
          {"limit_diamond", r.limit_diamond},
          {"limit_alt", r.limit_alt},
          {"success", r.success},
          {"caveat", kDiscreteCaveat}};
}

inline std::string gap_curve_csv(const std::vector<GapPoint>& curve) {
  std::ostringstream out;
  out << "epsilon,diamond_cost,alt_cost,gap,exact_cost\n";
  for (const auto& pt : curve) {
    out << shortest(pt.epsilon) << ',' << shortest(pt.diamond_cost) << ',' << shortest(pt.alt_cost)
        << ',' << shortest(pt.gap) << ',' << (pt.exact_cost ? shortest(*pt.exact_cost) : "") << '\n';
  }
  return out.str();
}

}  // namespace copot
