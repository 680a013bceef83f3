#pragma once

// Data-parallel kernels behind the solvers. Every kernel exists twice:
// `serial` is the plain reference loop kept for testing and benchmarking,
// `omp` is the OpenMP version used by the library.
//
// The OpenMP kernels assign each output entry to exactly one thread and keep
// the serial summation order for it, so results are bitwise identical to the
// serial reference and do not depend on the thread count. The one exception
// is the CSR transpose product, which sums fixed row chunks in chunk order;
// it is still independent of the thread count but may differ from the serial
// loop by rounding.

#include <span>

#include "rorbk/matrix.hpp"

namespace rorbk::kernels {

namespace serial {

void matvec(const MatrixHandle& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const MatrixHandle& a, std::span<const double> y, std::span<double> x);
void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r);
/// G = A_B A_B^T (s x s)
DenseMatrix gram_rows(const RowBlock& block);
/// G = A_B^T A_B (n x n)
DenseMatrix gram_cols(const RowBlock& block);
/// Row t of the result is the sum of rows [bounds[t], bounds[t+1]) of A.
DenseMatrix block_row_sums(const MatrixHandle& a, std::span<const Index> bounds);

}  // namespace serial

namespace omp {

void matvec(const MatrixHandle& a, std::span<const double> x, std::span<double> y);
void matvec_transpose(const MatrixHandle& a, std::span<const double> y, std::span<double> x);
void residual(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
              std::span<double> r);
DenseMatrix gram_rows(const RowBlock& block);
DenseMatrix gram_cols(const RowBlock& block);
DenseMatrix block_row_sums(const MatrixHandle& a, std::span<const Index> bounds);

}  // namespace omp

/// Below this many multiply-adds the OpenMP kernels run on one thread.
inline constexpr Index kParallelGrain = 1 << 15;

}  // namespace rorbk::kernels
