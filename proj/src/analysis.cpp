#include "rorbk/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rorbk/block_factor.hpp"
#include "rorbk/kernels.hpp"
#include "rorbk/rng.hpp"
#include "rorbk/solvers.hpp"

namespace rorbk {

namespace {

using EMatrix = Eigen::MatrixXd;
using EVector = Eigen::VectorXd;

EMatrix to_eigen(const MatrixHandle& a) {
  const DenseMatrix d = a.to_dense();
  EMatrix out(d.rows(), d.cols());
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j) out(i, j) = d(i, j);
  return out;
}

DenseMatrix from_eigen(const EMatrix& e) {
  DenseMatrix out(e.rows(), e.cols());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = e(i, j);
  return out;
}

Eigen::Map<const EVector> view(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

Vector to_vector(const EVector& e) { return Vector(e.data(), e.data() + e.size()); }

// Smallest singular value above the usual rank threshold; 0 if there is none.
double smallest_nonzero(const EVector& sigma, Index dim) {
  if (sigma.size() == 0) return 0.0;
  const double tol =
      static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * sigma.maxCoeff();
  double best = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > tol && (best == 0.0 || sigma(i) < best)) best = sigma(i);
  return best;
}

void require_desk_scale(const MatrixHandle& a, const char* what) {
  if (a.rows() > kDeskScaleLimit || a.cols() > kDeskScaleLimit)
    throw std::invalid_argument(std::string(what) + ": limited to " +
                                std::to_string(kDeskScaleLimit) + " rows and columns");
}

}  // namespace

InitialSolution initial_solution(const MatrixHandle& a, std::span<const double> b) {
  require_dims(b.size() == a.rows(), "initial_solution: b.size() != A.rows()");
  if (norm2(b) == 0.0) throw std::invalid_argument("initial_solution: b must be nonzero");
  const Index m = a.rows();
  const Index attempts[] = {m, (m + 1) / 2, std::min<Index>(m, 1)};
  for (Index rows : attempts) {
    if (rows == 0) continue;
    const Index bounds[] = {0, rows};
    const DenseMatrix sum = kernels::omp::block_row_sums(a, bounds);
    InitialSolution s;
    s.y.assign(sum.row(0).begin(), sum.row(0).end());
    s.b_tilde = matvec(a, s.y);
    const double nb = dot(s.b_tilde, s.b_tilde);
    const double ip = dot(b, s.b_tilde);
    if (nb == 0.0 || ip == 0.0) continue;
    s.coefficient = ip / nb;
    if (!std::isfinite(s.coefficient)) continue;
    s.x0 = s.y;
    for (double& v : s.x0) v *= s.coefficient;
    s.rows_used = rows;
    return s;
  }
  InitialSolution zero;
  zero.x0.assign(a.cols(), 0.0);
  zero.y.assign(a.cols(), 0.0);
  zero.b_tilde.assign(m, 0.0);
  return zero;
}

WeightedLSReference weighted_ls_reference(const MatrixHandle& a, std::span<const double> b,
                                          const BlockPartition& part, std::span<const double> probs,
                                          double lambda) {
  require_desk_scale(a, "weighted_ls_reference");
  require_dims(b.size() == a.rows(), "weighted_ls_reference: b.size() != A.rows()");
  require_dims(part.rows() == a.rows(), "weighted_ls_reference: partition does not cover A");
  require_dims(probs.size() == part.num_blocks(), "weighted_ls_reference: one probability per block");
  if (!(lambda >= 0.0)) throw std::invalid_argument("weighted_ls_reference: lambda must be >= 0");

  const EMatrix ea = to_eigen(a);
  const auto m = ea.rows();
  const auto n = ea.cols();
  EMatrix w = EMatrix::Zero(m, n == 0 ? 0 : m);
  EMatrix p = EMatrix::Zero(n, n);
  for (Index t = 0; t < part.num_blocks(); ++t) {
    if (probs[t] == 0.0) continue;
    const auto lo = static_cast<Eigen::Index>(part[t].begin);
    const auto s = static_cast<Eigen::Index>(part[t].size());
    const EMatrix as = ea.middleRows(lo, s);
    const EMatrix g = as * as.transpose() + lambda * EMatrix::Identity(s, s);
    const EMatrix inv = lambda > 0.0 ? EMatrix(g.llt().solve(EMatrix::Identity(s, s)))
                                     : EMatrix(g.completeOrthogonalDecomposition().pseudoInverse());
    w.block(lo, lo, s, s) += probs[t] * inv;
    p += probs[t] * as.transpose() * inv * as;
  }

  // Weighted normal equations A^T W A x = A^T W b; A^T W A is exactly P_bar.
  const EMatrix normal = ea.transpose() * w * ea;
  const EVector rhs = ea.transpose() * w * view(b);
  Eigen::BDCSVD<EMatrix> svd(normal, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const EVector x_mu = svd.solve(rhs);

  WeightedLSReference ref;
  ref.w_bar = from_eigen(w);
  ref.p_bar = from_eigen(p);
  ref.x_mu = to_vector(x_mu);
  ref.r_mu = to_vector(view(b) - ea * x_mu);
  Eigen::BDCSVD<EMatrix> psvd(p);
  ref.alpha = smallest_nonzero(psvd.singularValues(), static_cast<Index>(n));
  return ref;
}

MeanConvergenceReport check_mean_convergence(const MatrixHandle& a, std::span<const double> b,
                                             const BlockPartition& part,
                                             std::span<const double> probs, double lambda,
                                             Index trials, Index steps, std::span<const double> x0,
                                             std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("check_mean_convergence: need at least 2 trials");
  require_dims(x0.size() == a.cols(), "check_mean_convergence: x0.size() != A.cols()");
  const WeightedLSReference ref = weighted_ls_reference(a, b, part, probs, lambda);
  const SamplingDistribution dist = distribution_from_probs(probs);

  std::vector<RowBlock> blocks;
  std::vector<std::optional<BlockFactor>> factors;
  for (Index t = 0; t < part.num_blocks(); ++t) {
    blocks.push_back(part.block(a, t));
    if (blocks.back().frobenius_sq() > 0.0)
      factors.emplace_back(factor_block(blocks.back(), lambda));
    else
      factors.emplace_back();
  }

  const Index n = a.cols();
  std::vector<Vector> finals(trials);
  const auto ntrials = static_cast<std::ptrdiff_t>(trials);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < ntrials; ++r) {
    Rng rng(Rng::derive_seed(seed, static_cast<std::uint64_t>(r)));
    Vector x(x0.begin(), x0.end());
    for (Index step = 0; step < steps; ++step) {
      const Index t = sample_block(dist, rng);
      if (!factors[t]) continue;
      const Vector delta = regularized_apply(*factors[t], blocks[t], blocks[t].residual(b, x));
      axpy(1.0, delta, x);
    }
    finals[r] = std::move(x);
  }

  const Vector mean = mean_of(finals);
  double var_sum = 0.0;
  for (Index j = 0; j < n; ++j) {
    double acc = 0.0;
    for (const auto& x : finals) acc += (x[j] - mean[j]) * (x[j] - mean[j]);
    var_sum += acc / static_cast<double>(trials - 1);
  }

  MeanConvergenceReport rep;
  rep.alpha = ref.alpha;
  rep.trials = trials;
  rep.steps = steps;
  rep.deviation = norm2(subtract(mean, ref.x_mu));
  rep.bound = std::pow(1.0 - ref.alpha, static_cast<double>(steps)) * norm2(subtract(x0, ref.x_mu));
  rep.standard_error = std::sqrt(var_sum / static_cast<double>(trials));
  return rep;
}

double contraction_bound(const RowBlock& block, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("contraction_bound: lambda must be >= 0");
  if (block.frobenius_sq() == 0.0) throw std::invalid_argument("contraction_bound: all-zero block");
  if (lambda == 0.0) return 0.0;
  const DenseMatrix d = block.to_dense();
  EMatrix e(d.rows(), d.cols());
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < d.cols(); ++j) e(i, j) = d(i, j);
  Eigen::JacobiSVD<EMatrix> svd(e);
  const double sigma = smallest_nonzero(svd.singularValues(), std::max(d.rows(), d.cols()));
  const double lambda_min = sigma * sigma;
  return lambda / (lambda_min + lambda);
}

double problem_condition(const MatrixHandle& a, std::span<const double> b,
                         std::span<const double> x_star) {
  require_dims(b.size() == a.rows() && x_star.size() == a.cols(), "problem_condition: size mismatch");
  if (std::min(a.rows(), a.cols()) > 2000)
    throw std::invalid_argument("problem_condition: dense SVD limited to min(m, n) <= 2000");
  const double xnorm = norm2(x_star);
  if (xnorm == 0.0) throw MetricError("prob-cond undefined: ||x_star|| = 0");
  Eigen::BDCSVD<EMatrix> svd(to_eigen(a));
  const double sigma = smallest_nonzero(svd.singularValues(), std::max(a.rows(), a.cols()));
  if (sigma == 0.0) throw MetricError("prob-cond undefined: A is zero");
  return norm2(b) / (sigma * xnorm);
}

}  // namespace rorbk
