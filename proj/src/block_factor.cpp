#include "rorbk/block_factor.hpp"

#include <limits>
#include <sstream>

#include "rorbk/kernels.hpp"

namespace rorbk {

GramSide choose_side(Index block_rows, Index cols) noexcept {
  return block_rows < cols ? GramSide::gram_row : GramSide::gram_col;
}

DenseMatrix cholesky(const DenseMatrix& spd, double lambda_hint) {
  require_dims(spd.rows() == spd.cols(), "cholesky: matrix must be square");
  const Index n = spd.rows();
  constexpr double eps = std::numeric_limits<double>::epsilon();
  DenseMatrix l(n, n);
  for (Index j = 0; j < n; ++j) {
    auto lj = l.row(j);
    double d = spd(j, j);
    for (Index k = 0; k < j; ++k) d -= lj[k] * lj[k];
    const double floor = lambda_hint == 0.0 ? 64.0 * eps * spd(j, j) : 0.0;
    if (!(d > floor)) {
      std::ostringstream os;
      os << "cholesky: non-positive pivot " << d << " at column " << j;
      throw RankDeficientBlock(os.str());
    }
    const double ljj = std::sqrt(d);
    lj[j] = ljj;
    for (Index i = j + 1; i < n; ++i) {
      auto li = l.row(i);
      double v = spd(i, j);
      for (Index k = 0; k < j; ++k) v -= li[k] * lj[k];
      li[j] = v / ljj;
    }
  }
  return l;
}

BlockFactor factor_block(const RowBlock& block, double lambda) {
  return factor_block(block, lambda, choose_side(block.size(), block.cols()));
}

BlockFactor factor_block(const RowBlock& block, double lambda, GramSide side) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("factor_block: lambda must be finite and >= 0");
  require_dims(block.size() > 0, "factor_block: empty block");
  DenseMatrix g = side == GramSide::gram_row ? kernels::omp::gram_rows(block)
                                             : kernels::omp::gram_cols(block);
  for (Index i = 0; i < g.rows(); ++i) g(i, i) += lambda;
  return BlockFactor{block.size(), side, cholesky(g, lambda), lambda};
}

Vector spd_solve(const BlockFactor& factor, std::span<const double> rhs) {
  const DenseMatrix& l = factor.cholesky_factor;
  const Index n = l.rows();
  require_dims(rhs.size() == n, "spd_solve: rhs.size() != factor dimension");
  Vector x(rhs.begin(), rhs.end());
  for (Index i = 0; i < n; ++i) {
    auto li = l.row(i);
    double v = x[i];
    for (Index k = 0; k < i; ++k) v -= li[k] * x[k];
    x[i] = v / li[i];
  }
  for (Index ii = n; ii-- > 0;) {
    double v = x[ii];
    for (Index k = ii + 1; k < n; ++k) v -= l(k, ii) * x[k];
    x[ii] = v / l(ii, ii);
  }
  return x;
}

Vector regularized_apply(const BlockFactor& factor, const RowBlock& block,
                         std::span<const double> resid_sub) {
  require_dims(resid_sub.size() == block.size(), "regularized_apply: resid_sub.size() != block rows");
  require_dims(factor.block_rows == block.size(), "regularized_apply: factor built for another block");
  const MatrixHandle& a = block.parent();
  const auto rows = block.row_indices();
  if (factor.side == GramSide::gram_row) {
    require_dims(factor.dimension() == block.size(), "regularized_apply: factor dimension mismatch");
    const Vector u = spd_solve(factor, resid_sub);
    Vector delta(block.cols(), 0.0);
    for (Index p = 0; p < rows.size(); ++p) a.row_axpy(rows[p], u[p], delta);
    return delta;
  }
  require_dims(factor.dimension() == block.cols(), "regularized_apply: factor dimension mismatch");
  Vector t(block.cols(), 0.0);
  for (Index p = 0; p < rows.size(); ++p) a.row_axpy(rows[p], resid_sub[p], t);
  return spd_solve(factor, t);
}

double pseudo_inverse_jitter(const RowBlock& block) { return 1e-12 * block.frobenius_sq(); }

}  // namespace rorbk
