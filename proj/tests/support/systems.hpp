#pragma once

// Test problems and the plain GMRES comparison shared by the unit and
// acceptance tests.

#include <cmath>

#include "rorbk/fgmres.hpp"
#include "rorbk/generate.hpp"
#include "support/oracles.hpp"

namespace oracle {

/// Sparse m x n system with full column rank whose column scales span
/// 1 .. 10^-decades, so cond(A) is at least about 10^decades.
inline rorbk::LinearSystem ill_conditioned_sparse(Index m, Index n, double decades, std::uint64_t seed) {
  rorbk::Rng rng(seed);
  std::vector<rorbk::Triplet> t;
  for (Index j = 0; j < n; ++j) {
    const double scale = std::pow(10.0, -decades * static_cast<double>(j) / static_cast<double>(n - 1));
    t.push_back({j, j, scale * (1.0 + rng.uniform())});
    for (Index i = 0; i < m; ++i)
      if (i != j && rng.uniform() < 0.05) t.push_back({i, j, scale * rng.normal()});
  }
  auto a = std::make_shared<const rorbk::MatrixHandle>(rorbk::SparseMatrix::from_triplets(m, n, std::move(t)));
  return rorbk::synthetic_system(std::move(a), "ill-conditioned", rorbk::Rng::derive_seed(seed, 1));
}

/// Unpreconditioned AB-GMRES: the same Arnoldi and least-squares steps with
/// z_k = A^T v_k, i.e. GMRES on A A^T u = b.
inline rorbk::FgmresResult plain_gmres(const rorbk::MatrixHandle& a, std::span<const double> b,
                                       const rorbk::FgmresConfig& cfg) {
  const rorbk::Vector x0(a.cols(), 0.0);
  return rorbk::flexible_gmres(a, b, x0, cfg, [&](std::span<const double> v) {
    return rorbk::matvec_transpose(a, v);
  });
}

inline double condition_number(const rorbk::MatrixHandle& a) {
  Eigen::JacobiSVD<Mat> svd(to_eigen(a));
  const Vec s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

}  // namespace oracle
