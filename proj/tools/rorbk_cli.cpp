// Command-line front end: `solve` runs one solver on one system, `bench`
// runs a JSON-described benchmark. Exit codes: 0 success, 1 some solve did not
// converge, 2 bad input.

#include <CLI11.hpp>

#include <iostream>

#include "rorbk/bench.hpp"
#include "rorbk/mtx.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNoConvergence = 1;
constexpr int kExitInput = 2;

int finish(const rorbk::BenchResult& result, const rorbk::BenchSpec& spec) {
  if (spec.output.empty())
    rorbk::emit_report(result, spec.format, std::cout);
  else
    rorbk::emit_report(result, spec.format, spec.output);
  for (const auto& cell : result.cells)
    for (const auto& t : cell.trials)
      if (t.failed())
        std::cerr << cell.system << " / " << rorbk::to_string(cell.solver) << " trial " << t.trial
                  << ": " << t.error << '\n';
  return result.all_converged() ? kExitOk : kExitNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block Kaczmarz solvers and benchmark driver"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Solve one system with one solver");
  std::string matrix, solver = "ror-bk", init = "zero", out, format = "csv";
  rorbk::SolverConfig kcfg;
  rorbk::FgmresConfig gcfg;
  rorbk::Index trials = 1;
  double timeout = 0.0;
  solve->add_option("--matrix", matrix, "Matrix Market path, gen:randn:MxN or gen:onepr:MxN")->required();
  solve->add_option("--solver", solver, "ror-bk | sobk | ta-reblock-u | fab-gmres")->capture_default_str();
  solve->add_option("--block-rows", kcfg.block_rows, "Rows per block")->capture_default_str();
  solve->add_option("--lambda-coef", kcfg.lambda_coef, "lambda = coef * block rows");
  solve->add_option("--tol", kcfg.tol_rrn, "Stop once ||b - Ax|| / ||b|| < tol")->capture_default_str();
  solve->add_option("--max-iters", kcfg.max_iters, "Outer iteration cap")->capture_default_str();
  solve->add_option("--seed", kcfg.seed, "Seed for the system and the solver")->capture_default_str();
  solve->add_option("--init", init, "zero | rowsum")->capture_default_str();
  solve->add_option("--trials", trials, "Right-hand sides to average over")->capture_default_str();
  solve->add_option("--timeout", timeout, "Per-solve wall-clock limit in seconds (0 = none)");
  solve->add_option("--eta", gcfg.eta, "fab-gmres inner tolerance")->capture_default_str();
  solve->add_option("--inner-max", gcfg.inner_max, "fab-gmres inner iteration cap")->capture_default_str();
  solve->add_option("--outer-max", gcfg.outer_max, "fab-gmres Krylov dimension cap")->capture_default_str();
  solve->add_option("--out", out, "Report path (default: stdout)");
  solve->add_option("--format", format, "csv | markdown")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run a benchmark described by a JSON spec");
  std::string spec_path;
  bench->add_option("--spec", spec_path, "Benchmark spec (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    rorbk::BenchSpec spec;
    if (*solve) {
      spec.systems.push_back({matrix, matrix});
      spec.solvers.push_back(rorbk::parse_solver_kind(solver));
      spec.trials = trials;
      spec.seed = kcfg.seed;
      if (init == "zero") spec.init = rorbk::InitKind::zero;
      else if (init == "rowsum") spec.init = rorbk::InitKind::rowsum;
      else throw std::invalid_argument("--init must be zero or rowsum");
      kcfg.time_limit_s = timeout;
      rorbk::SolverConfig ta = kcfg;
      // The averaging baseline keeps its own lambda unless one is given.
      if (solve->count("--lambda-coef") == 0) ta.lambda_coef = rorbk::SolverConfig::ta_reblock_u().lambda_coef;
      spec.settings.ror_bk = kcfg;
      spec.settings.sobk = kcfg;
      spec.settings.ta_reblock_u = ta;
      gcfg.tol_rrn = kcfg.tol_rrn;
      gcfg.time_limit_s = timeout;
      gcfg.inner_cfg = kcfg;
      gcfg.inner_cfg.time_limit_s = 0.0;
      spec.settings.fab_gmres = gcfg;
      spec.output = out;
      spec.format = rorbk::parse_report_format(format);
      spec.validate();
    } else {
      spec = rorbk::BenchSpec::from_file(spec_path);
    }
    const rorbk::BenchResult result = rorbk::run_benchmark(spec);
    return finish(result, spec);
  } catch (const rorbk::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const rorbk::UnsupportedFormat& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    // Unreadable files and failed report writes land here.
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
