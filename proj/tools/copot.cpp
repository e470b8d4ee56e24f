// Command-line front end: diamond, exact, verify, counterexample.

#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "copot/cli.hpp"

int main(int argc, char** argv) {
  using namespace copot::cli;

  CLI::App app{"Wasserstein costs between measures sharing a copula"};
  app.require_subcommand(1);

  DiamondArgs diamond_args;
  std::size_t diamond_n = 0;
  auto* diamond = app.add_subcommand("diamond", "cost of the quantile-vector coupling of two marginal families");
  diamond->add_option("--copula", diamond_args.copula, "independence | comonotone | countermonotone | checkerboard:<path> | <path>");
  diamond->add_option("--mu", diamond_args.mu, "marginals of mu (array of 1-D measures, or a measure)")->required();
  diamond->add_option("--rho", diamond_args.rho, "marginals of rho")->required();
  diamond->add_option("--p", diamond_args.p)->required();
  diamond->add_option("--q", diamond_args.q)->required();
  diamond->add_option("--k", diamond_args.k, "checkerboard resolution of builtin copulas");
  diamond->add_option("--n", diamond_n, "dimension (defaults to the marginal count)");
  diamond->add_option("--emit-plan", diamond_args.emit_plan, "write the plan JSON here");

  ExactArgs exact_args;
  auto* exact = app.add_subcommand("exact", "exact optimal transport cost");
  exact->add_option("--mu", exact_args.mu)->required();
  exact->add_option("--rho", exact_args.rho)->required();
  exact->add_option("--p", exact_args.p)->required();
  exact->add_option("--q", exact_args.q)->required();
  exact->add_option("--max-pairs", exact_args.max_pairs, "cap on |mu| * |rho|");
  exact->add_option("--emit-plan", exact_args.emit_plan, "write the optimal plan JSON here");

  RunConfig cfg;
  std::vector<double> allow_pq;
  auto* verify = app.add_subcommand("verify", "p = q optimality campaign against the exact solver");
  verify->add_option("--seed", cfg.seed);
  verify->add_option("--instances", cfg.instances, "instances per (n, p) setting");
  verify->add_option("--out", cfg.out, "CSV path (stdout when absent)");
  verify->add_option("--allow-pq", allow_pq, "run with p != q instead")->expected(2);
  verify->add_option("--rel-opt", cfg.rel_opt);
  verify->add_option("--max-atoms", cfg.max_atoms);

  CounterexampleArgs cx_args;
  auto* cx = app.add_subcommand("counterexample", "epsilon construction showing non-optimality for p != q");
  cx->add_option("--copula", cx_args.copula);
  cx->add_option("--n", cx_args.n);
  cx->add_option("--k", cx_args.k);
  cx->add_option("--p", cx_args.p)->required();
  cx->add_option("--q", cx_args.q)->required();
  cx->add_option("--out", cx_args.out, "report JSON path; the gap curve goes next to it as .csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  if (*diamond) {
    if (diamond_n > 0) diamond_args.n = diamond_n;
    return cmd_diamond(diamond_args, std::cout, std::cerr);
  }
  if (*exact) return cmd_exact(exact_args, std::cout, std::cerr);
  if (*verify) {
    if (allow_pq.size() == 2) cfg.allow_pq = std::make_pair(allow_pq[0], allow_pq[1]);
    return cmd_verify(cfg, std::cout, std::cerr);
  }
  return cmd_counterexample(cx_args, std::cout, std::cerr);
}
