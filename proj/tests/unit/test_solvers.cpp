#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rorbk/analysis.hpp"
#include "rorbk/generate.hpp"
#include "rorbk/solvers.hpp"
#include "support/oracles.hpp"

using namespace rorbk;

namespace {

LinearSystem consistent(DenseMatrix a, std::uint64_t seed) {
  return synthetic_system(std::make_shared<const MatrixHandle>(std::move(a)), "test", seed);
}

SolverConfig with_blocks(SolverConfig cfg, Index s) {
  cfg.block_rows = s;
  return cfg;
}

double error_norm(std::span<const double> x, std::span<const double> x_star) { return norm2(subtract(x, x_star)); }

}  // namespace

TEST_SUITE("solvers") {

TEST_CASE("select_residual_block examples") {
  const auto a = select_residual_block(Vector{3, -1, 0, 2}, 2);
  CHECK(a.indices == std::vector<Index>{0, 3});
  CHECK(a.score == 13.0);
  CHECK(select_residual_block(Vector{1, 1, 1}, 3).indices == std::vector<Index>{0, 1, 2});
  CHECK(select_residual_block(Vector{2, -2, 1}, 1).indices == std::vector<Index>{0});
  CHECK_THROWS_AS(select_residual_block(Vector{1, 2}, 0), std::invalid_argument);
  CHECK_THROWS_AS(select_residual_block(Vector{1, 2}, 3), std::invalid_argument);
}

TEST_CASE("select_residual_block maximizes the score over all subsets") {
  Rng rng(41);
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 1 + rng.uniform_index(12);
    const Index size = 1 + rng.uniform_index(m);
    Vector r(m);
    // Small integers so ties are common.
    for (double& v : r) v = std::floor(rng.uniform(-3, 4));
    const auto sel = select_residual_block(r, size);
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      if (static_cast<Index>(__builtin_popcount(mask)) != size) continue;
      double s = 0.0;
      for (Index i = 0; i < m; ++i)
        if (mask >> i & 1u) s += r[i] * r[i];
      best = std::max(best, s);
    }
    CHECK(sel.score == best);
    CHECK(std::is_sorted(sel.indices.begin(), sel.indices.end()));
  }
}

TEST_CASE("one iterate on the identity solves it") {
  const MatrixHandle a(DenseMatrix::identity(2));
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 2);
  cfg.lambda_coef = 0.0;
  RorBkSolver solver(a, cfg);
  const Vector b{1, 1};
  SolverState st = solver.start(b, Vector{0, 0});
  solver.iterate(st, b);
  CHECK(st.x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(st.x[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(compute_metrics(a, b, st.x).rrn <= 1e-14);
}

TEST_CASE("single rank-1 update contracts by exactly lambda / (lambda_min + lambda)") {
  const MatrixHandle a(DenseMatrix{{2, 0}});
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 1);
  cfg.lambda_coef = 1.0;
  RorBkSolver solver(a, cfg);
  const Vector b{2};
  SolverState st = solver.start(b, Vector{0, 0});
  solver.fixed_update(st, b, 0);
  CHECK(st.x[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(st.x[1] == 0.0);
  const Vector x_star{1, 0};  // minimum-norm solution
  CHECK(error_norm(st.x, x_star) == doctest::Approx(0.2 * 1.0).epsilon(1e-14));
}

TEST_CASE("the exact solution is a fixed point") {
  Rng rng(3);
  const LinearSystem sys = consistent(oracle::random_dense(rng, 40, 10), 5);
  RorBkSolver solver(sys.A(), with_blocks(SolverConfig::ror_bk(), 7));
  SolverState st = solver.start(sys.b, *sys.x_star);
  for (int i = 0; i < 3; ++i) solver.iterate(st, sys.b);
  CHECK(error_norm(st.x, *sys.x_star) <= 1e-12 * norm2(*sys.x_star));
}

TEST_CASE("refreshed residual matches b - Ax") {
  Rng rng(13);
  const LinearSystem sys = consistent(oracle::random_dense(rng, 60, 12), 2);
  RorBkSolver solver(sys.A(), with_blocks(SolverConfig::ror_bk(), 9));
  SolverState st = solver.start(sys.b, Vector(12, 0.0));
  for (int i = 0; i < 4; ++i) {
    solver.fixed_updates(st, sys.b);
    solver.refresh_residual(st, sys.b);
    CHECK(norm2(subtract(st.r, residual(sys.A(), sys.b, st.x))) <= 1e-10 * norm2(sys.b));
    solver.dynamic_update(st, sys.b);
  }
}

TEST_CASE("ror_bk_solve on diag(1, 2, 3)") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix{{1, 0, 0}, {0, 2, 0}, {0, 0, 3}}), Vector{1, 2, 3});
  const SolveResult res = ror_bk_solve(sys, Vector(3, 0.0), with_blocks(SolverConfig::ror_bk(), 3));
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 5);
  for (double v : res.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.report.final_rrn < 1e-6);
}

TEST_CASE("zero right-hand side returns zero without iterating") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix::identity(3)), Vector(3, 0.0));
  for (auto solve : {&ror_bk_solve, &sobk_solve, &ta_reblock_u_solve}) {
    const SolveResult res = solve(sys, Vector{1, 2, 3}, SolverConfig::ror_bk());
    CHECK(res.report.iterations == 0);
    CHECK(res.report.converged);
    CHECK(res.x == Vector(3, 0.0));
    CHECK(!res.report.rrn_history.empty());
  }
}

TEST_CASE("500x50 normal system: relative error small once RRN < 1e-6") {
  const LinearSystem sys = generate_system({GeneratorKind::randn, 500, 50}, 7);
  const SolveResult res = ror_bk_solve(sys, Vector(50, 0.0), SolverConfig::ror_bk());
  REQUIRE(res.report.converged);
  REQUIRE(res.report.final_re);
  CHECK(*res.report.final_re <= 1e-4);
  // Full column rank, so the planted solution is also A^+ b.
  const oracle::Vec pinv_sol = oracle::pinv(oracle::to_eigen(sys.A())) * oracle::to_eigen(sys.b);
  CHECK((oracle::to_eigen(res.x) - pinv_sol).norm() <= 1e-4 * pinv_sol.norm());
}

TEST_CASE("report invariants") {
  Rng rng(6);
  const LinearSystem sys = consistent(oracle::random_dense(rng, 120, 30), 1);
  for (Index max_iters : {1, 2, 5, 1000}) {
    SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 10);
    cfg.max_iters = max_iters;
    for (auto solve : {&ror_bk_solve, &sobk_solve, &ta_reblock_u_solve}) {
      const SolveResult res = solve(sys, Vector(30, 0.0), cfg);
      CHECK(!res.report.rrn_history.empty());
      CHECK(res.report.converged == (res.report.final_rrn < cfg.tol_rrn));
      CHECK(res.report.iterations <= max_iters);
      CHECK(res.report.final_rrn == doctest::Approx(compute_metrics(sys, res.x).rrn).epsilon(1e-12));
      CHECK(res.report.setup_time_s >= 0.0);
      CHECK(res.report.wall_time_s >= 0.0);
    }
  }
}

TEST_CASE("solvers are deterministic per seed") {
  Rng rng(8);
  const LinearSystem sys = consistent(oracle::random_dense(rng, 90, 20), 3);
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 6);
  cfg.record_iterates = true;
  for (auto solve : {&ror_bk_solve, &sobk_solve, &ta_reblock_u_solve}) {
    const SolveResult a = solve(sys, Vector(20, 0.0), cfg);
    const SolveResult b = solve(sys, Vector(20, 0.0), cfg);
    CHECK(a.x == b.x);
    CHECK(a.report.rrn_history == b.report.rrn_history);
    CHECK(a.report.iterates == b.report.iterates);
    CHECK(a.report.iterations == b.report.iterations);
  }
  const LinearSystem diag = make_system(
      MatrixHandle(DenseMatrix{{1, 0, 0, 0, 0, 0}, {0, 2, 0, 0, 0, 0}, {0, 0, 3, 0, 0, 0},
                               {0, 0, 0, 4, 0, 0}, {0, 0, 0, 0, 5, 0}, {0, 0, 0, 0, 0, 6}}),
      Vector{1, 1, 1, 1, 1, 1});
  SolverConfig dcfg = with_blocks(SolverConfig::sobk(), 2);
  dcfg.record_iterates = true;
  CHECK(sobk_solve(diag, Vector(6, 0.0), dcfg).report.iterates ==
        sobk_solve(diag, Vector(6, 0.0), dcfg).report.iterates);
}

TEST_CASE("divergence is reported with the iteration") {
  // A denormal lambda on a nearly zero row makes the first update overflow.
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix{{1e-300}}), Vector{1e300});
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 1);
  cfg.lambda_coef = 1e-320;
  CHECK_THROWS_AS(ror_bk_solve(sys, Vector{0}, cfg), DivergenceDetected);
}

TEST_CASE("SOBK-style baseline examples") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix::identity(2)), Vector{1, 1});
  const SolveResult res = sobk_solve(sys, Vector{0, 0}, with_blocks(SolverConfig::sobk(), 1));
  CHECK(res.report.iterations == 1);
  CHECK(res.report.converged);
  CHECK(res.report.method == "sobk-style");
}

TEST_CASE("paired seeds: ROR-BK needs no more iterations than SOBK-style in at least 80% of runs") {
  Index wins = 0;
  const Index seeds = 20;
  for (Index s = 0; s < seeds; ++s) {
    const LinearSystem sys = generate_system({GeneratorKind::randn, 500, 50}, 1000 + s);
    SolverConfig cfg = SolverConfig::ror_bk();
    cfg.seed = s;
    const SolveResult r = ror_bk_solve(sys, Vector(50, 0.0), cfg);
    const SolveResult b = sobk_solve(sys, Vector(50, 0.0), cfg);
    CHECK(r.report.converged);
    CHECK(b.report.converged);
    if (b.report.iterations >= r.report.iterations) ++wins;
  }
  CHECK(wins >= 16);
}

TEST_CASE("TA-ReBlocK-U examples") {
  const LinearSystem eye = make_system(MatrixHandle(DenseMatrix::identity(2)), Vector{1, 1});
  SolverConfig cfg = with_blocks(SolverConfig::ta_reblock_u(), 2);
  cfg.record_iterates = true;
  const SolveResult res = ta_reblock_u_solve(eye, Vector{0, 0}, cfg);
  CHECK(res.report.converged);
  CHECK(res.report.iterations <= 2);
  CHECK(res.x == res.report.iterates.back());  // latest iterate, no averaging
}

TEST_CASE("TA-ReBlocK-U reports the mean of the last tail_window iterates") {
  Rng rng(19);
  const LinearSystem sys = consistent(oracle::random_dense(rng, 200, 20), 4);
  SolverConfig cfg = with_blocks(SolverConfig::ta_reblock_u(), 10);
  cfg.tol_rrn = 1e-300;  // never met, so the run lasts max_iters
  cfg.max_iters = 400;
  cfg.record_iterates = true;
  const SolveResult res = ta_reblock_u_solve(sys, Vector(20, 0.0), cfg);
  REQUIRE(res.report.iterations == 400);
  REQUIRE(res.report.iterates.size() == 401);
  const auto& its = res.report.iterates;
  for (Index j = 0; j < 20; ++j) {
    double sum = 0.0;
    for (Index t = 101; t <= 400; ++t) sum += its[t][j];
    CHECK(std::abs(res.x[j] - sum / 300.0) <= 1e-12 * std::max(1.0, std::abs(res.x[j])));
  }
}

TEST_CASE("tail mean of a constant sequence is that constant") {
  const std::vector<Vector> same(5, Vector{1.5, -2.0, 0.25});
  CHECK(mean_of(same) == Vector{1.5, -2.0, 0.25});
}

TEST_CASE("metric examples and errors") {
  const MatrixHandle eye(DenseMatrix::identity(2));
  CHECK(compute_metrics(eye, Vector{3, 4}, Vector{0, 0}).rrn == 1.0);
  CHECK(compute_metrics(eye, Vector{3, 4}, Vector{3, 0}).rrn == doctest::Approx(0.8).epsilon(1e-15));
  const Vector xs{1, 2};
  const Metrics exact = compute_metrics(eye, Vector{1, 2}, xs, std::span<const double>(xs));
  CHECK(exact.rrn == 0.0);
  CHECK(*exact.re == 0.0);
  CHECK(!compute_metrics(eye, Vector{1, 2}, xs).re);
  CHECK_THROWS_AS(compute_metrics(eye, Vector{0, 0}, xs), MetricError);
  const Vector zero{0, 0};
  CHECK_THROWS_AS(compute_metrics(eye, Vector{1, 2}, xs, std::span<const double>(zero)), MetricError);
}

TEST_CASE("contraction bound holds for single fixed-block updates") {
  Rng rng(2718);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + rng.uniform_index(8);
    const Index s = 1 + rng.uniform_index(10);
    const Index m = 3 * s;
    const MatrixHandle a(oracle::random_dense(rng, m, n));
    const Vector x_star = oracle::random_vector(rng, n);
    const Vector b = matvec(a, x_star);
    SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), s);
    cfg.lambda_coef = std::pow(10.0, rng.uniform(-3, 0));
    RorBkSolver solver(a, cfg);
    const Index t = rng.uniform_index(3);
    const RowBlock blk = solver.partition().block(a, t);
    // The bound governs the error inside range(A_tau^T); for wide blocks put it there.
    Vector err = oracle::random_vector(rng, n);
    if (s < n) err = matvec_transpose(a, [&] {
        Vector w(m, 0.0);
        for (Index i = blk.row_indices().front(); i <= blk.row_indices().back(); ++i) w[i] = rng.normal();
        return w;
      }());
    Vector x0 = x_star;
    axpy(1.0, err, x0);
    SolverState st = solver.start(b, x0);
    solver.fixed_update(st, b, t);
    const double factor = contraction_bound(blk, solver.lambda());
    CHECK(error_norm(st.x, x_star) <= factor * norm2(err) + 1e-9);
  }
}

TEST_CASE("contraction bound is attained by a rank-1 block") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 1 + rng.uniform_index(6);
    const Vector row = oracle::random_vector(rng, n);
    const MatrixHandle a(DenseMatrix(1, n, row));
    const Vector x_star = oracle::random_vector(rng, n);
    const Vector b = matvec(a, x_star);
    SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 1);
    cfg.lambda_coef = 0.5;
    RorBkSolver solver(a, cfg);
    Vector x0 = x_star;
    axpy(0.7, row, x0);  // error along the row, i.e. in range(A^T)
    SolverState st = solver.start(b, x0);
    solver.fixed_update(st, b, 0);
    const double factor = contraction_bound(solver.partition().block(a, 0), solver.lambda());
    CHECK(std::abs(error_norm(st.x, x_star) - factor * 0.7 * norm2(row)) <= 1e-9);
  }
}

TEST_CASE("iterates stay in range(A^T) when x0 does") {
  Rng rng(99);
  for (int trial = 0; trial < 6; ++trial) {
    const Index m = 10 + rng.uniform_index(40), n = 10 + rng.uniform_index(40);
    const Index rank = std::min(m, n) - 1 - rng.uniform_index(5);
    const DenseMatrix d = oracle::random_rank(rng, m, n, rank);
    const LinearSystem sys = consistent(d, trial);
    const oracle::Mat e = oracle::to_eigen(d);
    const Vector x0 = matvec_transpose(sys.A(), oracle::random_vector(rng, m));
    SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 1 + rng.uniform_index(9));
    cfg.record_iterates = true;
    cfg.max_iters = 60;
    cfg.lambda_coef = 1e-3;
    for (auto solve : {&ror_bk_solve, &ta_reblock_u_solve}) {
      const SolveResult res = solve(sys, x0, cfg);
      for (const Vector& x : res.report.iterates) CHECK(oracle::null_fraction(e, x) <= 1e-8);
    }
  }
}

TEST_CASE("dynamic step never increases the error at tiny lambda") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 20 + rng.uniform_index(30), n = 5 + rng.uniform_index(20);
    const LinearSystem sys = consistent(oracle::random_dense(rng, m, n), trial);
    const Index s = 1 + rng.uniform_index(6);
    double fro = 0.0;
    for (Index i = 0; i < m; ++i) fro += sys.A().row_norm_sq(i);
    SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), s);
    cfg.lambda_coef = 1e-10 * fro / static_cast<double>(s);
    RorBkSolver solver(sys.A(), cfg);
    SolverState st = solver.start(sys.b, Vector(n, 0.0));
    for (int it = 0; it < 10; ++it) {
      solver.fixed_updates(st, sys.b);
      solver.refresh_residual(st, sys.b);
      const double before = error_norm(st.x, *sys.x_star);
      solver.dynamic_update(st, sys.b);
      CHECK(error_norm(st.x, *sys.x_star) <= before + 1e-8);
    }
  }
}

TEST_CASE("lambda = 0 on a rank-deficient block raises RankDeficientBlock") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix{{1, 2}, {2, 4}, {0, 1}}), Vector{1, 2, 1});
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 2);
  cfg.lambda_coef = 0.0;
  CHECK_THROWS_AS(ror_bk_solve(sys, Vector{0, 0}, cfg), RankDeficientBlock);
}

TEST_CASE("block rows larger than the row count are clamped") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix{{1, 0}, {0, 2}}), Vector{1, 2});
  const SolveResult res = ror_bk_solve(sys, Vector{0, 0}, SolverConfig::ror_bk());
  CHECK(res.report.converged);
}

TEST_CASE("config validation") {
  const LinearSystem sys = make_system(MatrixHandle(DenseMatrix::identity(2)), Vector{1, 1});
  SolverConfig bad = SolverConfig::ror_bk();
  bad.block_rows = 0;
  CHECK_THROWS_AS(ror_bk_solve(sys, Vector{0, 0}, bad), std::invalid_argument);
  bad = SolverConfig::ror_bk();
  bad.tol_rrn = 0.0;
  CHECK_THROWS_AS(sobk_solve(sys, Vector{0, 0}, bad), std::invalid_argument);
  bad = SolverConfig::ror_bk();
  bad.lambda_coef = -1.0;
  CHECK_THROWS_AS(ta_reblock_u_solve(sys, Vector{0, 0}, bad), std::invalid_argument);
  CHECK_THROWS_AS(ror_bk_solve(sys, Vector{0, 0, 0}, SolverConfig::ror_bk()), DimensionError);
}

TEST_CASE("a wall-clock limit stops the run unconverged") {
  const LinearSystem sys = generate_system({GeneratorKind::onepr, 400, 100}, 3);
  SolverConfig cfg = with_blocks(SolverConfig::ror_bk(), 2);
  cfg.tol_rrn = 1e-300;
  cfg.time_limit_s = 0.05;
  const SolveResult res = ror_bk_solve(sys, Vector(100, 0.0), cfg);
  CHECK(!res.report.converged);
  CHECK(res.report.iterations < cfg.max_iters);
}

}  // TEST_SUITE
