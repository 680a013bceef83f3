#include <doctest.h>

#include <cmath>
#include <limits>

#include "rorbk/matrix.hpp"
#include "support/oracles.hpp"

using namespace rorbk;

TEST_SUITE("matrix") {

TEST_CASE("matvec examples") {
  CHECK(matvec(MatrixHandle(DenseMatrix::identity(2)), Vector{3, 4}) == Vector{3, 4});
  CHECK(matvec(MatrixHandle(DenseMatrix{{1, 2}, {3, 4}}), Vector{1, 1}) == Vector{3, 7});
  const SparseMatrix single = SparseMatrix::from_triplets(2, 2, {{0, 1, 5.0}});
  CHECK(matvec(MatrixHandle(single), Vector{0, 2}) == Vector{10, 0});
}

TEST_CASE("matvec_transpose examples") {
  CHECK(matvec_transpose(MatrixHandle(DenseMatrix::identity(2)), Vector{1, 2}) == Vector{1, 2});
  CHECK(matvec_transpose(MatrixHandle(DenseMatrix{{1, 2}, {3, 4}}), Vector{1, 0}) == Vector{1, 2});
  CHECK(matvec_transpose(MatrixHandle(DenseMatrix{{1, 1, 1}}), Vector{2}) == Vector{2, 2, 2});
}

TEST_CASE("dimension mismatches throw") {
  const MatrixHandle a(DenseMatrix{{1, 2}, {3, 4}});
  CHECK_THROWS_AS(matvec(a, Vector{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(matvec_transpose(a, Vector{1}), DimensionError);
  CHECK_THROWS_AS(residual(a, Vector{1}, Vector{1, 2}), DimensionError);
}

TEST_CASE("dense matrix rejects bad entries") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1, 2, 3}), DimensionError);
  CHECK_THROWS(DenseMatrix(1, 2, {1, std::numeric_limits<double>::quiet_NaN()}));
  CHECK_THROWS(DenseMatrix(1, 1, {std::numeric_limits<double>::infinity()}));
  CHECK_THROWS(DenseMatrix({{1, 2}, {3}}));
}

TEST_CASE("sparse matrix validates CSR invariants") {
  CHECK_THROWS(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}));                  // offsets length
  CHECK_THROWS(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 2.0}));       // decreasing
  CHECK_THROWS(SparseMatrix(1, 2, {0, 1}, {2}, {1.0}));                  // column range
  CHECK_THROWS(SparseMatrix(1, 2, {0, 2}, {1, 1}, {1.0, 2.0}));          // duplicate
  CHECK_THROWS(SparseMatrix(1, 2, {0, 1}, {0}, {std::nan("")}));         // non-finite
  const SparseMatrix s(1, 3, {0, 2}, {2, 0}, {5.0, 7.0});
  CHECK(s.row_cols(0)[0] == 0);
  CHECK(s.row_values(0)[0] == 7.0);
}

TEST_CASE("from_triplets sums duplicates") {
  const SparseMatrix s = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, 2.5}, {1, 0, 4.0}});
  CHECK(s.nnz() == 2);
  CHECK(s.to_dense() == DenseMatrix{{3.5, 0}, {4, 0}});
}

TEST_CASE("density and nnz") {
  const MatrixHandle s(SparseMatrix::from_triplets(2, 5, {{0, 0, 1.0}, {1, 4, 2.0}}));
  CHECK(s.nnz() == 2);
  CHECK(s.density() == doctest::Approx(0.2));
  CHECK(MatrixHandle(DenseMatrix{{1, 0}, {2, 3}}).density() == 0.75);
}

TEST_CASE("sparse and dense matvec agree exactly on integer matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 1 + rng.uniform_index(40), n = 1 + rng.uniform_index(40);
    std::vector<Triplet> t;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j)
        if (rng.uniform() < 0.3) t.push_back({i, j, std::floor(rng.uniform(-9, 10))});
    const SparseMatrix s = SparseMatrix::from_triplets(m, n, t);
    const MatrixHandle sh(s), dh(s.to_dense());
    Vector x(n), y(m);
    for (double& v : x) v = std::floor(rng.uniform(-5, 6));
    for (double& v : y) v = std::floor(rng.uniform(-5, 6));
    CHECK(matvec(sh, x) == matvec(dh, x));
    CHECK(matvec_transpose(sh, y) == matvec_transpose(dh, y));
  }
}

TEST_CASE("row blocks") {
  const MatrixHandle a(DenseMatrix{{1, 2}, {3, 4}, {5, 6}});
  const RowBlock fixed = RowBlock::contiguous(a, 1, 3);
  CHECK(fixed.size() == 2);
  CHECK(fixed.to_dense() == DenseMatrix{{3, 4}, {5, 6}});
  CHECK(fixed.frobenius_sq() == 9 + 16 + 25 + 36);
  CHECK(fixed.residual(Vector{0, 1, 1}, Vector{1, 0}) == Vector{-2, -4});

  const RowBlock dyn(a, {0, 2}, BlockKind::dynamic);
  CHECK(dyn.to_dense() == DenseMatrix{{1, 2}, {5, 6}});
  CHECK_THROWS_AS(RowBlock(a, {0, 2}, BlockKind::fixed), DimensionError);
  CHECK_THROWS_AS(RowBlock(a, {3}, BlockKind::dynamic), DimensionError);
  CHECK_THROWS_AS(RowBlock::contiguous(a, 2, 4), DimensionError);
}

TEST_CASE("residual is b - Ax") {
  const MatrixHandle a(DenseMatrix{{1, 2}, {3, 4}});
  CHECK(residual(a, Vector{5, 6}, Vector{1, 1}) == Vector{2, -1});
}

}  // TEST_SUITE
