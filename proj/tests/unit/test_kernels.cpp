#include <doctest.h>

#include <omp.h>

#include "rorbk/blocking.hpp"
#include "rorbk/kernels.hpp"
#include "support/oracles.hpp"

using namespace rorbk;
namespace ks = rorbk::kernels::serial;
namespace ko = rorbk::kernels::omp;

namespace {

// Big enough to cross the parallel grain.
std::vector<MatrixHandle> kernel_matrices() {
  Rng rng(5);
  std::vector<MatrixHandle> out;
  out.emplace_back(oracle::random_dense(rng, 420, 310));
  out.emplace_back(oracle::random_sparse(rng, 5000, 900, 0.02));
  out.emplace_back(oracle::random_sparse(rng, 60, 50, 0.2));  // below the grain
  return out;
}

double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0, diff = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    scale = std::max(scale, std::abs(a[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("parallel matvec, residual and gram kernels match the serial reference bitwise") {
  for (int threads : {1, 3, 4}) {
    ThreadCount tc(threads);
    for (const MatrixHandle& a : kernel_matrices()) {
      Rng rng(9);
      const Vector x = oracle::random_vector(rng, a.cols());
      const Vector b = oracle::random_vector(rng, a.rows());
      Vector ys(a.rows()), yo(a.rows());
      ks::matvec(a, x, ys);
      ko::matvec(a, x, yo);
      CHECK(ys == yo);
      ks::residual(a, b, x, ys);
      ko::residual(a, b, x, yo);
      CHECK(ys == yo);

      const Index s = std::min<Index>(a.rows(), 150);
      const RowBlock fixed = RowBlock::contiguous(a, 0, s);
      CHECK(ks::gram_rows(fixed) == ko::gram_rows(fixed));
      CHECK(ks::gram_cols(fixed) == ko::gram_cols(fixed));
      std::vector<Index> idx;
      for (Index i = 0; i < a.rows(); i += 3) idx.push_back(i);
      const RowBlock dyn(a, idx, BlockKind::dynamic);
      CHECK(ks::gram_rows(dyn) == ko::gram_rows(dyn));
      CHECK(ks::gram_cols(dyn) == ko::gram_cols(dyn));

      const auto bounds = BlockPartition(a.rows(), 7).bounds();
      CHECK(ks::block_row_sums(a, bounds) == ko::block_row_sums(a, bounds));
    }
  }
}

TEST_CASE("parallel transpose product is thread-count independent and close to serial") {
  for (const MatrixHandle& a : kernel_matrices()) {
    Rng rng(4);
    const Vector y = oracle::random_vector(rng, a.rows());
    Vector ref(a.cols()), first(a.cols()), again(a.cols());
    ks::matvec_transpose(a, y, ref);
    {
      ThreadCount tc(1);
      ko::matvec_transpose(a, y, first);
    }
    for (int threads : {2, 3, 4}) {
      ThreadCount tc(threads);
      ko::matvec_transpose(a, y, again);
      CHECK(again == first);
    }
    if (!a.is_sparse()) CHECK(first == ref);
    CHECK(max_rel_diff(first, ref) <= 1e-13);
  }
}

TEST_CASE("gram kernels match an Eigen product") {
  Rng rng(8);
  const MatrixHandle a(oracle::random_dense(rng, 30, 12));
  const RowBlock blk = RowBlock::contiguous(a, 5, 14);
  const oracle::Mat e = oracle::to_eigen(blk.to_dense());
  CHECK((oracle::to_eigen(ko::gram_rows(blk)) - e * e.transpose()).norm() <= 1e-12 * e.squaredNorm());
  CHECK((oracle::to_eigen(ko::gram_cols(blk)) - e.transpose() * e).norm() <= 1e-12 * e.squaredNorm());
}

}  // TEST_SUITE
