#pragma once

#include <initializer_list>
#include <span>
#include <variant>
#include <vector>

#include "rorbk/common.hpp"

namespace rorbk {

/// Row-major dense matrix of finite doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols);
  DenseMatrix(Index rows, Index cols, std::vector<double> entries);
  DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static DenseMatrix identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }

  double operator()(Index i, Index j) const { return entries_[i * cols_ + j]; }
  double& operator()(Index i, Index j) { return entries_[i * cols_ + j]; }

  std::span<const double> row(Index i) const { return {entries_.data() + i * cols_, cols_}; }
  std::span<double> row(Index i) { return {entries_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return entries_; }
  std::span<double> data() noexcept { return entries_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> entries_;
};

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Validates the CSR invariants; rows are re-sorted by column if needed.
  SparseMatrix(Index rows, Index cols, std::vector<Index> row_offsets,
               std::vector<Index> col_indices, std::vector<double> values);

  /// Duplicate (row, col) entries are summed, matching Matrix Market semantics.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> entries);
  static SparseMatrix from_dense(const DenseMatrix& a);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index nnz() const noexcept { return values_.size(); }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const Index> row_cols(Index i) const {
    return {col_indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }
  std::span<const double> row_values(Index i) const {
    return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
  }

  DenseMatrix to_dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

/// Either storage format behind one row-oriented interface. Immutable once
/// built; share freely across threads.
class MatrixHandle {
 public:
  MatrixHandle(DenseMatrix a) : m_(std::move(a)) {}    // NOLINT(implicit)
  MatrixHandle(SparseMatrix a) : m_(std::move(a)) {}   // NOLINT(implicit)

  Index rows() const;
  Index cols() const;
  Index nnz() const;
  bool is_sparse() const noexcept { return std::holds_alternative<SparseMatrix>(m_); }
  double density() const;

  const DenseMatrix& dense() const { return std::get<DenseMatrix>(m_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(m_); }
  DenseMatrix to_dense() const;

  double row_dot(Index i, std::span<const double> x) const;
  /// y += alpha * A(i, :)
  void row_axpy(Index i, double alpha, std::span<double> y) const;
  double row_norm_sq(Index i) const;

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), m_);
  }

 private:
  std::variant<DenseMatrix, SparseMatrix> m_;
};

/// Ax. Throws DimensionError if x.size() != A.cols().
Vector matvec(const MatrixHandle& a, std::span<const double> x);
/// A^T y. Throws DimensionError if y.size() != A.rows().
Vector matvec_transpose(const MatrixHandle& a, std::span<const double> y);
/// b - Ax, written into r.
void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r);
Vector residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x);

enum class BlockKind { fixed, dynamic };

/// A subset of the rows of a parent matrix. Fixed blocks are contiguous row
/// ranges from the partition; dynamic blocks are arbitrary index sets.
class RowBlock {
 public:
  RowBlock(const MatrixHandle& parent, std::vector<Index> row_indices, BlockKind kind);
  static RowBlock contiguous(const MatrixHandle& parent, Index begin, Index end);

  const MatrixHandle& parent() const noexcept { return *parent_; }
  std::span<const Index> row_indices() const noexcept { return rows_; }
  Index size() const noexcept { return rows_.size(); }
  Index cols() const { return parent_->cols(); }
  BlockKind kind() const noexcept { return kind_; }

  /// Squared Frobenius norm of the block.
  double frobenius_sq() const;
  /// b_block - A_block x
  Vector residual(std::span<const double> b, std::span<const double> x) const;
  /// Dense copy of the block rows (s x n).
  DenseMatrix to_dense() const;

 private:
  const MatrixHandle* parent_;
  std::vector<Index> rows_;
  BlockKind kind_;
};

}  // namespace rorbk
