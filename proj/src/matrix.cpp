#include "rorbk/matrix.hpp"

#include <algorithm>
#include <numeric>

#include "rorbk/kernels.hpp"

namespace rorbk {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  require_dims(entries_.size() == rows * cols, "DenseMatrix: entries.size() != rows*cols");
  require_finite(entries_, "DenseMatrix");
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require_dims(r.size() == cols_, "DenseMatrix: ragged initializer");
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
  require_finite(entries_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(Index n) {
  DenseMatrix out(n, n);
  for (Index i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
                           std::vector<Index> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  require_dims(row_offsets_.size() == rows_ + 1, "SparseMatrix: row_offsets must have rows+1 entries");
  require_dims(row_offsets_.front() == 0, "SparseMatrix: row_offsets[0] must be 0");
  require_dims(row_offsets_.back() == values_.size(), "SparseMatrix: row_offsets.back() != nnz");
  require_dims(col_indices_.size() == values_.size(), "SparseMatrix: col_indices/values length mismatch");
  require_finite(values_, "SparseMatrix");

  std::vector<Index> perm;
  std::vector<Index> cols_tmp;
  std::vector<double> vals_tmp;
  for (Index i = 0; i < rows_; ++i) {
    const Index lo = row_offsets_[i];
    const Index hi = row_offsets_[i + 1];
    require_dims(lo <= hi, "SparseMatrix: row_offsets must be nondecreasing");
    if (std::is_sorted(col_indices_.begin() + lo, col_indices_.begin() + hi)) {
      for (Index p = lo; p < hi; ++p) {
        require_dims(col_indices_[p] < cols_, "SparseMatrix: column index out of range");
        if (p > lo && col_indices_[p] == col_indices_[p - 1])
          throw std::invalid_argument("SparseMatrix: duplicate column in row " + std::to_string(i));
      }
      continue;
    }
    perm.resize(hi - lo);
    std::iota(perm.begin(), perm.end(), lo);
    std::sort(perm.begin(), perm.end(),
              [&](Index a, Index b) { return col_indices_[a] < col_indices_[b]; });
    cols_tmp.clear();
    vals_tmp.clear();
    for (Index p : perm) {
      require_dims(col_indices_[p] < cols_, "SparseMatrix: column index out of range");
      if (!cols_tmp.empty() && cols_tmp.back() == col_indices_[p])
        throw std::invalid_argument("SparseMatrix: duplicate column in row " + std::to_string(i));
      cols_tmp.push_back(col_indices_[p]);
      vals_tmp.push_back(values_[p]);
    }
    std::copy(cols_tmp.begin(), cols_tmp.end(), col_indices_.begin() + lo);
    std::copy(vals_tmp.begin(), vals_tmp.end(), values_.begin() + lo);
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> entries) {
  for (const auto& t : entries)
    require_dims(t.row < rows && t.col < cols, "SparseMatrix::from_triplets: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<Index> offsets(rows + 1, 0);
  std::vector<Index> col_idx;
  std::vector<double> vals;
  col_idx.reserve(entries.size());
  vals.reserve(entries.size());
  Index last_row = rows;
  for (const auto& t : entries) {
    if (t.row == last_row && !col_idx.empty() && col_idx.back() == t.col) {
      vals.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    vals.push_back(t.value);
    ++offsets[t.row + 1];
    last_row = t.row;
  }
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return SparseMatrix(rows, cols, std::move(offsets), std::move(col_idx), std::move(vals));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& a) {
  std::vector<Index> offsets{0};
  std::vector<Index> col_idx;
  std::vector<double> vals;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) {
        col_idx.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    offsets.push_back(vals.size());
  }
  return SparseMatrix(a.rows(), a.cols(), std::move(offsets), std::move(col_idx), std::move(vals));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (Index i = 0; i < rows_; ++i) {
    auto c = row_cols(i);
    auto v = row_values(i);
    for (Index p = 0; p < c.size(); ++p) out(i, c[p]) = v[p];
  }
  return out;
}

Index MatrixHandle::rows() const {
  return visit([](const auto& a) { return a.rows(); });
}

Index MatrixHandle::cols() const {
  return visit([](const auto& a) { return a.cols(); });
}

Index MatrixHandle::nnz() const {
  if (is_sparse()) return sparse().nnz();
  const auto& d = dense();
  return static_cast<Index>(std::count_if(d.data().begin(), d.data().end(),
                                          [](double v) { return v != 0.0; }));
}

double MatrixHandle::density() const {
  const double total = static_cast<double>(rows()) * static_cast<double>(cols());
  return total > 0 ? static_cast<double>(nnz()) / total : 0.0;
}

DenseMatrix MatrixHandle::to_dense() const {
  return is_sparse() ? sparse().to_dense() : dense();
}

double MatrixHandle::row_dot(Index i, std::span<const double> x) const {
  if (is_sparse()) {
    const auto& s = sparse();
    auto c = s.row_cols(i);
    auto v = s.row_values(i);
    double acc = 0.0;
    for (Index p = 0; p < c.size(); ++p) acc += v[p] * x[c[p]];
    return acc;
  }
  return rorbk::dot(dense().row(i), x);
}

void MatrixHandle::row_axpy(Index i, double alpha, std::span<double> y) const {
  if (is_sparse()) {
    const auto& s = sparse();
    auto c = s.row_cols(i);
    auto v = s.row_values(i);
    for (Index p = 0; p < c.size(); ++p) y[c[p]] += alpha * v[p];
    return;
  }
  rorbk::axpy(alpha, dense().row(i), y);
}

double MatrixHandle::row_norm_sq(Index i) const {
  if (is_sparse()) {
    auto v = sparse().row_values(i);
    return rorbk::dot(v, v);
  }
  auto r = dense().row(i);
  return rorbk::dot(r, r);
}

Vector matvec(const MatrixHandle& a, std::span<const double> x) {
  require_dims(x.size() == a.cols(), "matvec: x.size() != A.cols()");
  Vector y(a.rows());
  kernels::omp::matvec(a, x, y);
  return y;
}

Vector matvec_transpose(const MatrixHandle& a, std::span<const double> y) {
  require_dims(y.size() == a.rows(), "matvec_transpose: y.size() != A.rows()");
  Vector x(a.cols());
  kernels::omp::matvec_transpose(a, y, x);
  return x;
}

void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r) {
  require_dims(b.size() == a.rows() && r.size() == a.rows(), "residual: b/r size != A.rows()");
  require_dims(x.size() == a.cols(), "residual: x.size() != A.cols()");
  kernels::omp::residual(a, b, x, r);
}

Vector residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x) {
  Vector r(a.rows());
  residual(a, b, x, r);
  return r;
}

RowBlock::RowBlock(const MatrixHandle& parent, std::vector<Index> row_indices, BlockKind kind)
    : parent_(&parent), rows_(std::move(row_indices)), kind_(kind) {
  const Index m = parent.rows();
  for (Index i : rows_) require_dims(i < m, "RowBlock: row index out of range");
  if (kind_ == BlockKind::fixed) {
    for (Index p = 1; p < rows_.size(); ++p)
      require_dims(rows_[p] == rows_[p - 1] + 1, "RowBlock: fixed blocks must be contiguous");
  }
}

RowBlock RowBlock::contiguous(const MatrixHandle& parent, Index begin, Index end) {
  require_dims(begin <= end && end <= parent.rows(), "RowBlock::contiguous: bad range");
  std::vector<Index> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return RowBlock(parent, std::move(idx), BlockKind::fixed);
}

double RowBlock::frobenius_sq() const {
  double s = 0.0;
  for (Index i : rows_) s += parent_->row_norm_sq(i);
  return s;
}

Vector RowBlock::residual(std::span<const double> b, std::span<const double> x) const {
  require_dims(b.size() == parent_->rows(), "RowBlock::residual: b.size() != A.rows()");
  require_dims(x.size() == parent_->cols(), "RowBlock::residual: x.size() != A.cols()");
  Vector r(rows_.size());
  for (Index p = 0; p < rows_.size(); ++p) r[p] = b[rows_[p]] - parent_->row_dot(rows_[p], x);
  return r;
}

DenseMatrix RowBlock::to_dense() const {
  DenseMatrix out(rows_.size(), cols());
  for (Index p = 0; p < rows_.size(); ++p) {
    auto dst = out.row(p);
    parent_->row_axpy(rows_[p], 1.0, dst);
  }
  return out;
}

}  // namespace rorbk
