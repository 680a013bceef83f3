#pragma once

// Reference computations for checking the solvers: a cheap starting point in
// range(A^T), the weighted least-squares limit of fixed-distribution block
// iterations, the per-update contraction factor, and the problem condition
// number. Everything except initial_solution forms dense matrices and is
// meant for desk-scale problems only.

#include <cstdint>
#include <span>

#include "rorbk/blocking.hpp"
#include "rorbk/matrix.hpp"

namespace rorbk {

struct InitialSolution {
  Vector x0;
  Vector y;        // sum of the rows used
  Vector b_tilde;  // A y
  double coefficient = 0.0;  // <b, b_tilde> / ||b_tilde||^2
  Index rows_used = 0;       // 0 when every row set was degenerate and x0 = 0
};

/// x0 = (<b, Ay> / ||Ay||^2) y with y the sum of all rows of A. If Ay is zero
/// or orthogonal to b, retries with the first ceil(m/2) rows, then the first
/// row, then returns x0 = 0. Costs O(nnz(A)) per attempt.
InitialSolution initial_solution(const MatrixHandle& a, std::span<const double> b);

struct WeightedLSReference {
  DenseMatrix w_bar;  // m x m, E[I_S^T (A_S A_S^T + lambda I)^-1 I_S]
  DenseMatrix p_bar;  // n x n, E[A_S^T (A_S A_S^T + lambda I)^-1 A_S]
  Vector x_mu;        // minimum-norm minimizer of ||Ax - b||^2_{W_bar}
  Vector r_mu;        // b - A x_mu
  double alpha = 0.0; // smallest nonzero singular value of P_bar
};

/// Largest m or n accepted by the dense reference computations.
inline constexpr Index kDeskScaleLimit = 200;

/// Closed-form expectation over the k fixed blocks with the given probabilities.
WeightedLSReference weighted_ls_reference(const MatrixHandle& a, std::span<const double> b,
                                          const BlockPartition& part, std::span<const double> probs,
                                          double lambda);

struct MeanConvergenceReport {
  double deviation = 0.0;       // ||mean(x_T) - x_mu||
  double bound = 0.0;           // (1 - alpha)^T ||x0 - x_mu||
  double standard_error = 0.0;  // sqrt(sum_j var(x_T[j]) / trials)
  double alpha = 0.0;
  Index trials = 0;
  Index steps = 0;
};

/// Monte-Carlo check of E[x_T] -> x_mu for T fixed-distribution block updates
/// started at x0. Trials run in parallel with per-trial seeds derived from
/// `seed`; the result does not depend on the thread count.
MeanConvergenceReport check_mean_convergence(const MatrixHandle& a, std::span<const double> b,
                                             const BlockPartition& part,
                                             std::span<const double> probs, double lambda,
                                             Index trials, Index steps, std::span<const double> x0,
                                             std::uint64_t seed);

/// lambda / (lambda_min^+(A_B^T A_B) + lambda). Throws for an all-zero block.
double contraction_bound(const RowBlock& block, double lambda);

/// ||A^+||_2 ||b||_2 / ||x_star||_2 with ||A^+||_2 = 1 / sigma_min^+(A).
double problem_condition(const MatrixHandle& a, std::span<const double> b,
                         std::span<const double> x_star);

}  // namespace rorbk
