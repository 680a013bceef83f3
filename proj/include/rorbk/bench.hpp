#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rorbk/fgmres.hpp"
#include "rorbk/solvers.hpp"

namespace rorbk {

enum class SolverKind { ror_bk, sobk, ta_reblock_u, fab_gmres };

/// "ror-bk", "sobk", "ta-reblock-u", "fab-gmres".
SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

enum class InitKind {
  zero,    // x0 = 0
  rowsum,  // initial_solution from the analysis module
};

enum class ReportFormat { csv, markdown };

ReportFormat parse_report_format(const std::string& name);

struct SystemSource {
  std::string source;  // Matrix Market path or generator spec "gen:<kind>:MxN"
  std::string name;    // defaults to the source
};

struct SolverSettings {
  SolverConfig ror_bk = SolverConfig::ror_bk();
  SolverConfig sobk = SolverConfig::sobk();
  SolverConfig ta_reblock_u = SolverConfig::ta_reblock_u();
  FgmresConfig fab_gmres;
};

struct BenchSpec {
  std::vector<SystemSource> systems;
  std::vector<SolverKind> solvers;
  Index trials = 5;
  std::uint64_t seed = 42;
  InitKind init = InitKind::zero;
  std::optional<SolverKind> reference;  // default: ror-bk if listed, else the first solver
  SolverSettings settings;
  std::filesystem::path output;         // empty: report goes to stdout
  ReportFormat format = ReportFormat::csv;

  void validate() const;
  SolverKind reference_solver() const;

  /// Strict JSON schema, documented in the README. Unknown keys are errors.
  static BenchSpec from_json_text(const std::string& text);
  static BenchSpec from_file(const std::filesystem::path& path);
};

struct TrialLog {
  Index trial = 0;
  Index iterations = 0;
  double setup_s = 0.0;
  double solve_s = 0.0;
  double rrn = 0.0;
  std::optional<double> re;
  bool converged = false;
  std::string error;  // nonempty when the solve threw

  bool failed() const { return !error.empty(); }
};

struct BenchCell {
  std::string system;
  SolverKind solver = SolverKind::ror_bk;
  std::vector<TrialLog> trials;

  // Means over the trials that did not throw; NaN when every trial threw.
  double mean_it = 0.0;
  double mean_setup_s = 0.0;
  double mean_solve_s = 0.0;
  double mean_rrn = 0.0;
  std::optional<double> mean_re;  // absent unless every successful trial has an RE
  double it_speedup = 0.0;        // mean_it / reference mean_it
  double cpu_speedup = 0.0;       // (setup + solve) / reference (setup + solve)

  bool all_converged() const;
};

struct BenchResult {
  std::vector<BenchCell> cells;  // systems in spec order, solvers in spec order within each
  SolverKind reference = SolverKind::ror_bk;

  bool all_converged() const;
};

/// Runs one trial: builds the right-hand side for `sys`, solves from x0 per
/// `init`, and logs the outcome. Solver exceptions are caught into the log.
TrialLog run_trial(SolverKind solver, const LinearSystem& sys, InitKind init,
                   const SolverSettings& settings, std::uint64_t solver_seed, Vector* x_out = nullptr);

/// Fills the means and speed-ups of `cells` from their trial logs.
void aggregate(std::vector<BenchCell>& cells, SolverKind reference);

/// For every system and trial, draws x_star ~ N(0, 1), sets b = A x_star and
/// runs each solver on the same (A, b). Failures are recorded per cell.
BenchResult run_benchmark(const BenchSpec& spec);

std::string format_report(const BenchResult& result, ReportFormat format);
void emit_report(const BenchResult& result, ReportFormat format, std::ostream& out);
void emit_report(const BenchResult& result, ReportFormat format, const std::filesystem::path& path);

}  // namespace rorbk
