#pragma once

#include <span>

#include "rorbk/matrix.hpp"

namespace rorbk {

/// Which regularized gram matrix a BlockFactor holds.
///   gram_row: A_B A_B^T + lambda I   (s x s), used when s < n
///   gram_col: A_B^T A_B + lambda I   (n x n), used when s >= n
/// Both give the same update by the push-through identity
///   A^T (A A^T + lambda I)^-1 = (A^T A + lambda I)^-1 A^T.
enum class GramSide { gram_row, gram_col };

GramSide choose_side(Index block_rows, Index cols) noexcept;

/// Cholesky factor L (lower, row-major) of a regularized block gram matrix.
struct BlockFactor {
  Index block_rows = 0;
  GramSide side = GramSide::gram_row;
  DenseMatrix cholesky_factor;
  double lambda = 0.0;

  Index dimension() const noexcept { return cholesky_factor.rows(); }
};

/// Cholesky of an SPD matrix. With lambda_hint == 0 a pivot below
/// 64*eps*(diagonal entry) is treated as singular; otherwise only a
/// non-positive pivot is. Throws RankDeficientBlock on failure.
DenseMatrix cholesky(const DenseMatrix& spd, double lambda_hint);

/// Factors the side chosen by choose_side. lambda must be >= 0.
BlockFactor factor_block(const RowBlock& block, double lambda);
/// Same as factor_block but with the side forced (used to cross-check sides).
BlockFactor factor_block(const RowBlock& block, double lambda, GramSide side);

/// Solves (G + lambda I) x = rhs using the stored factor.
Vector spd_solve(const BlockFactor& factor, std::span<const double> rhs);

/// delta = A_B^T (A_B A_B^T + lambda I)^-1 resid_sub, evaluated on the
/// factor's side. resid_sub has one entry per block row.
Vector regularized_apply(const BlockFactor& factor, const RowBlock& block,
                         std::span<const double> resid_sub);

/// Regularizer standing in for a pseudo-inverse: 1e-12 * ||A_B||_F^2.
double pseudo_inverse_jitter(const RowBlock& block);

}  // namespace rorbk
