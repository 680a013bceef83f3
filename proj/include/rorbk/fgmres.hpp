#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rorbk/solvers.hpp"

namespace rorbk {

struct FgmresConfig {
  double eta = 0.1;        // inner relative tolerance
  Index inner_max = 50;    // inner ROR-BK outer iterations per preconditioner call
  Index outer_max = 200;   // Krylov dimension cap; no restarts
  double tol_rrn = 1e-6;
  SolverConfig inner_cfg;  // ROR-BK settings for the inner solves
  bool track_true_residual = false;  // also record ||b - A x_k|| / ||b|| each step
  double time_limit_s = 0.0;         // 0 disables the wall-clock limit

  void validate() const;
};

/// Flexible Arnoldi state: orthonormal basis V (length m), preconditioned
/// directions Z (length n), and the (k+1) x k Hessenberg matrix by columns.
struct KrylovState {
  std::vector<Vector> v;
  std::vector<Vector> z;
  std::vector<Vector> h;  // h[j] holds column j, length j+2
  double beta = 0.0;

  Index steps() const noexcept { return z.size(); }
  /// Dense (k+1) x k copy of the Hessenberg matrix.
  DenseMatrix hessenberg() const;
};

/// Starts a Krylov state from r0 = b - A x0. Requires r0 != 0.
KrylovState start_krylov(std::span<const double> r0);

enum class ArnoldiOutcome { extended, happy_breakdown };

/// w = A z; modified Gram-Schmidt against V with one extra pass when the norm
/// drops below 0.7 of its starting value; appends z, the new Hessenberg
/// column and (unless breakdown) v_{k+1} = w / h_{k+1,k}.
ArnoldiOutcome arnoldi_step(KrylovState& state, const MatrixHandle& a, Vector z);

/// Incremental Givens QR of a Hessenberg least-squares problem
/// min ||beta e1 - H y||.
class GivensLsq {
 public:
  explicit GivensLsq(double beta) : g_{beta} {}

  /// Appends column k (length k+2) and returns the updated small residual.
  double append_column(std::span<const double> column);
  double residual() const noexcept { return std::abs(g_.back()); }
  Index columns() const noexcept { return r_.size(); }
  /// Back-substitution. Throws std::runtime_error on a zero pivot.
  Vector solve() const;

 private:
  std::vector<Vector> r_;  // rotated columns (upper triangular part)
  Vector cs_;
  Vector sn_;
  Vector g_;
};

struct HessenbergSolution {
  Vector y;
  double residual = 0.0;
};

/// y = argmin ||beta e1 - H y|| for a (k+1) x k upper-Hessenberg H.
HessenbergSolution hessenberg_lsq(const DenseMatrix& h, double beta);

/// z = B v for a flexible preconditioner; may differ between calls.
using Preconditioner = std::function<Vector(std::span<const double>)>;

struct InnerResult {
  Vector z;
  Index iterations = 0;
  double rrn = 0.0;  // ||v - A z|| / ||v||
};

/// Runs ROR-BK on A z = v from z = 0 for at most inner_max outer iterations,
/// stopping once ||v - A z|| < eta ||v||.
InnerResult inner_precondition(RorBkSolver& solver, std::span<const double> v, double eta,
                               Index inner_max);

struct FgmresReport {
  Index outer_iterations = 0;
  std::vector<Index> inner_iteration_counts;
  Vector rrn_history;        // small-problem residual / ||b||, starting at x0
  Vector true_rrn_history;   // only with track_true_residual
  double final_rrn = 0.0;    // recomputed from the returned x
  bool converged = false;
  bool happy_breakdown = false;
  double wall_time_s = 0.0;
  double setup_time_s = 0.0;
};

struct FgmresResult {
  Vector x;
  FgmresReport report;
};

/// Flexible AB-GMRES with an arbitrary right preconditioner.
FgmresResult flexible_gmres(const MatrixHandle& a, std::span<const double> b,
                            std::span<const double> x0, const FgmresConfig& cfg,
                            const Preconditioner& precondition);

/// Flexible AB-GMRES with ROR-BK inner iterations as the preconditioner.
FgmresResult fab_gmres_solve(const LinearSystem& sys, std::span<const double> x0,
                             const FgmresConfig& cfg);

}  // namespace rorbk
