#include "rorbk/kernels.hpp"

#include <algorithm>

#include <omp.h>

namespace rorbk::kernels {

namespace {

Index work_of(const MatrixHandle& a) { return a.is_sparse() ? a.nnz() : a.rows() * a.cols(); }

// Scatter/gather dot used by the sparse gram kernels: work holds row i densely.
double sparse_dot_dense(const SparseMatrix& s, Index j, std::span<const double> work) {
  auto c = s.row_cols(j);
  auto v = s.row_values(j);
  double acc = 0.0;
  for (Index p = 0; p < c.size(); ++p) acc += v[p] * work[c[p]];
  return acc;
}

void mirror_lower(DenseMatrix& g) {
  for (Index i = 0; i < g.rows(); ++i)
    for (Index j = 0; j < i; ++j) g(j, i) = g(i, j);
}

// Computes row i of the lower triangle of A_B A_B^T.
void gram_rows_row(const RowBlock& block, Index i, std::span<double> work, DenseMatrix& g) {
  const auto rows = block.row_indices();
  const MatrixHandle& a = block.parent();
  if (!a.is_sparse()) {
    auto ri = a.dense().row(rows[i]);
    for (Index j = 0; j <= i; ++j) g(i, j) = rorbk::dot(ri, a.dense().row(rows[j]));
    return;
  }
  const auto& s = a.sparse();
  auto c = s.row_cols(rows[i]);
  auto v = s.row_values(rows[i]);
  for (Index p = 0; p < c.size(); ++p) work[c[p]] = v[p];
  for (Index j = 0; j <= i; ++j) g(i, j) = sparse_dot_dense(s, rows[j], work);
  for (Index p = 0; p < c.size(); ++p) work[c[p]] = 0.0;
}

// Accumulates the lower triangle of A_B^T A_B for output rows [p_lo, p_hi).
void gram_cols_range(const RowBlock& block, Index p_lo, Index p_hi, DenseMatrix& g) {
  const MatrixHandle& a = block.parent();
  if (!a.is_sparse()) {
    for (Index p = p_lo; p < p_hi; ++p) {
      auto gp = g.row(p);
      for (Index r : block.row_indices()) {
        auto ar = a.dense().row(r);
        const double ap = ar[p];
        if (ap == 0.0) continue;
        for (Index q = 0; q <= p; ++q) gp[q] += ap * ar[q];
      }
    }
    return;
  }
  const auto& s = a.sparse();
  for (Index r : block.row_indices()) {
    auto c = s.row_cols(r);
    auto v = s.row_values(r);
    // Columns are sorted, so entries with q <= p are a prefix.
    for (Index e = 0; e < c.size(); ++e) {
      const Index p = c[e];
      if (p < p_lo) continue;
      if (p >= p_hi) break;
      for (Index f = 0; f <= e; ++f) g(p, c[f]) += v[e] * v[f];
    }
  }
}

}  // namespace

namespace serial {

void matvec(const MatrixHandle& a, std::span<const double> x, std::span<double> y) {
  for (Index i = 0; i < a.rows(); ++i) y[i] = a.row_dot(i, x);
}

void matvec_transpose(const MatrixHandle& a, std::span<const double> y, std::span<double> x) {
  std::fill(x.begin(), x.end(), 0.0);
  for (Index i = 0; i < a.rows(); ++i) a.row_axpy(i, y[i], x);
}

void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
  for (Index i = 0; i < a.rows(); ++i) r[i] = b[i] - a.row_dot(i, x);
}

DenseMatrix gram_rows(const RowBlock& block) {
  const Index s = block.size();
  DenseMatrix g(s, s);
  Vector work(block.parent().is_sparse() ? block.cols() : 0, 0.0);
  for (Index i = 0; i < s; ++i) gram_rows_row(block, i, work, g);
  mirror_lower(g);
  return g;
}

DenseMatrix gram_cols(const RowBlock& block) {
  const Index n = block.cols();
  DenseMatrix g(n, n);
  gram_cols_range(block, 0, n, g);
  mirror_lower(g);
  return g;
}

DenseMatrix block_row_sums(const MatrixHandle& a, std::span<const Index> bounds) {
  const Index k = bounds.empty() ? 0 : bounds.size() - 1;
  DenseMatrix out(k, a.cols());
  for (Index t = 0; t < k; ++t) {
    auto dst = out.row(t);
    for (Index r = bounds[t]; r < bounds[t + 1]; ++r) a.row_axpy(r, 1.0, dst);
  }
  return out;
}

}  // namespace serial

namespace omp {

void matvec(const MatrixHandle& a, std::span<const double> x, std::span<double> y) {
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (work_of(a) > kParallelGrain)
  for (std::ptrdiff_t i = 0; i < m; ++i) y[i] = a.row_dot(static_cast<Index>(i), x);
}

void matvec_transpose(const MatrixHandle& a, std::span<const double> y, std::span<double> x) {
  const Index m = a.rows();
  const Index n = a.cols();
  std::fill(x.begin(), x.end(), 0.0);
  if (work_of(a) <= kParallelGrain) {
    serial::matvec_transpose(a, y, x);
    return;
  }
  if (!a.is_sparse()) {
    // Each thread owns a column range and walks all rows in order.
    const auto& d = a.dense();
#pragma omp parallel
    {
      const Index nt = static_cast<Index>(omp_get_num_threads());
      const Index tid = static_cast<Index>(omp_get_thread_num());
      const Index lo = n * tid / nt;
      const Index hi = n * (tid + 1) / nt;
      for (Index i = 0; i < m; ++i) {
        const double yi = y[i];
        auto ri = d.row(i);
        for (Index j = lo; j < hi; ++j) x[j] += ri[j] * yi;
      }
    }
    return;
  }
  // CSR: partial sums over a fixed number of row chunks, reduced in chunk order.
  const Index chunks = std::clamp<Index>(m / 2048, 1, 32);
  std::vector<Vector> partial(chunks, Vector(n, 0.0));
  const auto nchunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nchunks; ++c) {
    const Index lo = m * static_cast<Index>(c) / chunks;
    const Index hi = m * static_cast<Index>(c + 1) / chunks;
    for (Index i = lo; i < hi; ++i) a.row_axpy(i, y[i], partial[c]);
  }
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < nn; ++j) {
    double acc = 0.0;
    for (Index c = 0; c < chunks; ++c) acc += partial[c][j];
    x[j] = acc;
  }
}

void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (work_of(a) > kParallelGrain)
  for (std::ptrdiff_t i = 0; i < m; ++i) r[i] = b[i] - a.row_dot(static_cast<Index>(i), x);
}

DenseMatrix gram_rows(const RowBlock& block) {
  const Index s = block.size();
  DenseMatrix g(s, s);
  const bool sparse = block.parent().is_sparse();
  const Index work = s * s * (sparse ? 1 : block.cols()) / 2;
  const auto ss = static_cast<std::ptrdiff_t>(s);
#pragma omp parallel if (work > kParallelGrain)
  {
    Vector scratch(sparse ? block.cols() : 0, 0.0);
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < ss; ++i) gram_rows_row(block, static_cast<Index>(i), scratch, g);
  }
  mirror_lower(g);
  return g;
}

DenseMatrix gram_cols(const RowBlock& block) {
  const Index n = block.cols();
  DenseMatrix g(n, n);
  const Index work = block.size() * n * n / 2;
#pragma omp parallel if (work > kParallelGrain)
  {
    const auto nt = static_cast<Index>(omp_get_num_threads());
    const auto tid = static_cast<Index>(omp_get_thread_num());
    // Balance the triangular workload: row p costs ~p, so split on p^2.
    auto boundary = [&](Index t) {
      return static_cast<Index>(static_cast<double>(n) * std::sqrt(static_cast<double>(t) / nt));
    };
    const Index lo = tid == 0 ? 0 : boundary(tid);
    const Index hi = tid + 1 == nt ? n : boundary(tid + 1);
    gram_cols_range(block, lo, hi, g);
  }
  mirror_lower(g);
  return g;
}

DenseMatrix block_row_sums(const MatrixHandle& a, std::span<const Index> bounds) {
  const Index k = bounds.empty() ? 0 : bounds.size() - 1;
  DenseMatrix out(k, a.cols());
  const auto kk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic) if (work_of(a) > kParallelGrain)
  for (std::ptrdiff_t t = 0; t < kk; ++t) {
    auto dst = out.row(static_cast<Index>(t));
    for (Index r = bounds[t]; r < bounds[t + 1]; ++r) a.row_axpy(r, 1.0, dst);
  }
  return out;
}

}  // namespace omp

}  // namespace rorbk::kernels
