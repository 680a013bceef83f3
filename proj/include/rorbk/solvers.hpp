#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rorbk/block_factor.hpp"
#include "rorbk/blocking.hpp"
#include "rorbk/rng.hpp"
#include "rorbk/system.hpp"

namespace rorbk {

struct SolverConfig {
  Index block_rows = 100;          // s; clamped to the row count by the solvers
  double lambda_coef = 1e-6;       // lambda = lambda_coef * s
  Index orth_updates_per_iter = 3; // l
  double tol_rrn = 1e-6;
  Index max_iters = 100000;
  std::uint64_t seed = 42;
  Index tail_window = 300;         // T_b, TA-ReBlocK-U only
  double time_limit_s = 0.0;       // 0 disables the wall-clock limit
  bool record_iterates = false;    // keep every outer iterate in the report

  static SolverConfig ror_bk() { return {}; }
  static SolverConfig sobk() { return {}; }
  static SolverConfig ta_reblock_u() {
    SolverConfig c;
    c.lambda_coef = 1e-3;
    return c;
  }

  void validate() const;
  Index effective_block_rows(Index rows) const { return block_rows < rows ? block_rows : rows; }
};

struct SolverState {
  Vector x;
  Vector r;  // b - Ax as of the last refresh
  Index iter = 0;
};

struct SolverReport {
  std::string method;
  Index iterations = 0;
  double wall_time_s = 0.0;   // iteration loop only
  double setup_time_s = 0.0;  // partition, cosines, distribution, fixed-block factors
  Vector rrn_history;         // RRN at x0, then after every outer iteration
  double final_rrn = 0.0;
  std::optional<double> final_re;
  bool converged = false;
  std::vector<Vector> iterates;  // only with SolverConfig::record_iterates
};

struct SolveResult {
  Vector x;
  SolverReport report;
};

struct DynamicBlockSelection {
  std::vector<Index> indices;  // ascending
  double score = 0.0;          // sum of r_i^2 over indices
};

/// Rows with the `size` largest r_i^2; ties go to the lower row index.
/// Expected O(m) via nth_element.
DynamicBlockSelection select_residual_block(std::span<const double> r, Index size);

struct Metrics {
  double rrn = 0.0;
  std::optional<double> re;
};

/// RRN = ||b - Ax|| / ||b||, RE = ||x - x*|| / ||x*||. Zero denominators
/// raise MetricError.
Metrics compute_metrics(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
                        std::optional<std::span<const double>> x_star = std::nullopt);
Metrics compute_metrics(const LinearSystem& sys, std::span<const double> x);

enum class Regularization {
  scaled,          // lambda = lambda_coef * s
  pseudo_inverse,  // lambda = 1e-12 * ||A_B||_F^2 per block
};

/// Fixed partition blocks with lazily computed, memoized factors.
class FixedBlockCache {
 public:
  FixedBlockCache(const MatrixHandle& a, BlockPartition part, Regularization reg, double lambda);

  const BlockPartition& partition() const noexcept { return part_; }
  const RowBlock& block(Index t) const { return blocks_[t]; }
  /// nullptr for an all-zero block, which never moves the iterate.
  const BlockFactor* factor(Index t);
  double factor_seconds() const noexcept { return factor_seconds_; }
  double lambda_for(const RowBlock& block) const;

 private:
  const MatrixHandle* a_;
  BlockPartition part_;
  Regularization reg_;
  double lambda_;
  std::vector<RowBlock> blocks_;
  std::vector<std::optional<BlockFactor>> factors_;
  std::vector<bool> zero_block_;
  double factor_seconds_ = 0.0;
};

/// ROR-BK: per outer iteration, l fixed-block updates sampled by effective
/// orthogonality, a residual refresh, then one regularized update on the
/// rows with the largest squared residuals.
///
/// The solver owns its RNG and factor cache; it is not thread-safe, but
/// several solvers may share one matrix.
class RorBkSolver {
 public:
  RorBkSolver(const MatrixHandle& a, SolverConfig cfg);
  RorBkSolver(MatrixHandle&&, SolverConfig) = delete;  // the solver keeps a reference

  const SolverConfig& config() const noexcept { return cfg_; }
  const MatrixHandle& matrix() const noexcept { return *a_; }
  const BlockPartition& partition() const noexcept { return cache_.partition(); }
  const CosineMatrix& cosines() const noexcept { return cosines_; }
  const SamplingDistribution& distribution() const noexcept { return dist_; }
  double lambda() const noexcept { return lambda_; }
  /// Construction time plus fixed-block factorization time so far.
  double setup_seconds() const noexcept { return construct_seconds_ + cache_.factor_seconds(); }

  /// Replaces the stopping rule for subsequent solve() calls.
  void set_stopping(double tol_rrn, Index max_iters);

  SolverState start(std::span<const double> b, std::span<const double> x0) const;
  void fixed_update(SolverState& state, std::span<const double> b, Index block);
  void fixed_updates(SolverState& state, std::span<const double> b);
  void refresh_residual(SolverState& state, std::span<const double> b) const;
  /// Uses state.r, so call right after refresh_residual. Leaves state.r stale.
  void dynamic_update(SolverState& state, std::span<const double> b);
  /// One full outer iteration: fixed_updates, refresh_residual, dynamic_update.
  void iterate(SolverState& state, std::span<const double> b);

  SolveResult solve(std::span<const double> b, std::span<const double> x0,
                    std::optional<std::span<const double>> x_star = std::nullopt);

 private:
  const MatrixHandle* a_;
  SolverConfig cfg_;
  double lambda_;
  FixedBlockCache cache_;
  CosineMatrix cosines_;
  SamplingDistribution dist_;
  Rng rng_;
  double construct_seconds_ = 0.0;
};

SolveResult ror_bk_solve(const LinearSystem& sys, std::span<const double> x0, const SolverConfig& cfg);

/// SOBK-style baseline: uniform tau1, its most orthogonal partner tau2
/// (argmin_j C(tau1, j), ties to the lower index), and pseudo-inverse
/// updates in the order tau1, tau2, tau1.
SolveResult sobk_solve(const LinearSystem& sys, std::span<const double> x0, const SolverConfig& cfg);

/// TA-ReBlocK-U baseline: uniform sampling, four regularized updates per
/// outer iteration, output averaged over the last tail_window iterates unless
/// the run converges within tail_window iterations.
SolveResult ta_reblock_u_solve(const LinearSystem& sys, std::span<const double> x0,
                               const SolverConfig& cfg);

/// Elementwise mean of a list of equal-length vectors.
Vector mean_of(std::span<const Vector> vs);

}  // namespace rorbk
