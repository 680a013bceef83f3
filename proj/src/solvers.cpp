#include "rorbk/solvers.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace rorbk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool out_of_time(const SolverConfig& cfg, Clock::time_point t0) {
  return cfg.time_limit_s > 0.0 && seconds_since(t0) > cfg.time_limit_s;
}

void apply_block(const RowBlock& block, const BlockFactor& f, std::span<const double> resid_sub,
                 std::span<double> x) {
  const Vector delta = regularized_apply(f, block, resid_sub);
  axpy(1.0, delta, x);
}

// Shared outer-loop driver for ROR-BK and SOBK. `updates` moves x; the
// residual is then refreshed and checked; `after_check` runs only when the
// iteration continues.
template <class Updates, class AfterCheck, class SetupTime>
SolveResult run_outer_loop(std::string method, const MatrixHandle& a, std::span<const double> b,
                           std::span<const double> x0, std::optional<std::span<const double>> x_star,
                           const SolverConfig& cfg, Updates&& updates, AfterCheck&& after_check,
                           SetupTime&& setup_time) {
  require_dims(b.size() == a.rows(), "solve: b.size() != A.rows()");
  require_dims(x0.size() == a.cols(), "solve: x0.size() != A.cols()");

  SolveResult out;
  SolverReport& rep = out.report;
  rep.method = std::move(method);
  const double setup_before = setup_time();
  const auto t0 = Clock::now();

  const double bnorm = norm2(b);
  SolverState state{Vector(x0.begin(), x0.end()), Vector(a.rows()), 0};
  if (bnorm == 0.0) {
    // Zero right-hand side: the minimum-norm solution is x = 0.
    std::fill(state.x.begin(), state.x.end(), 0.0);
    rep.rrn_history = {0.0};
    rep.converged = true;
    if (cfg.record_iterates) rep.iterates.push_back(state.x);
    out.x = std::move(state.x);
    if (x_star) rep.final_re = compute_metrics(a, b, out.x, x_star).re;
    return out;
  }

  residual(a, b, state.x, state.r);
  double rrn = norm2(state.r) / bnorm;
  rep.rrn_history.push_back(rrn);
  if (cfg.record_iterates) rep.iterates.push_back(state.x);
  bool converged = rrn < cfg.tol_rrn;
  bool moved_after_check = false;

  while (!converged && state.iter < cfg.max_iters) {
    ++state.iter;
    updates(state);
    residual(a, b, state.x, state.r);
    rrn = norm2(state.r) / bnorm;
    if (!std::isfinite(rrn) || !all_finite(state.x)) throw DivergenceDetected(rep.method, state.iter);
    rep.rrn_history.push_back(rrn);
    if (rrn < cfg.tol_rrn) {
      converged = true;
      moved_after_check = false;
      if (cfg.record_iterates) rep.iterates.push_back(state.x);
      break;
    }
    if (out_of_time(cfg, t0)) {
      moved_after_check = false;
      if (cfg.record_iterates) rep.iterates.push_back(state.x);
      break;
    }
    moved_after_check = after_check(state);
    if (cfg.record_iterates) rep.iterates.push_back(state.x);
  }

  if (moved_after_check) {
    if (!all_finite(state.x)) throw DivergenceDetected(rep.method, state.iter);
    residual(a, b, state.x, state.r);
    rrn = norm2(state.r) / bnorm;
  }

  const double setup_in_loop = setup_time() - setup_before;
  rep.iterations = state.iter;
  rep.final_rrn = rrn;
  rep.converged = rrn < cfg.tol_rrn;
  rep.wall_time_s = std::max(0.0, seconds_since(t0) - setup_in_loop);
  rep.setup_time_s = setup_time();
  out.x = std::move(state.x);
  if (x_star) rep.final_re = compute_metrics(a, b, out.x, x_star).re;
  return out;
}

const SolverConfig& validated(const SolverConfig& cfg) {
  cfg.validate();
  return cfg;
}

std::optional<std::span<const double>> star_of(const LinearSystem& sys) {
  if (!sys.x_star) return std::nullopt;
  return std::span<const double>(*sys.x_star);
}

}  // namespace

void SolverConfig::validate() const {
  if (block_rows < 1) throw std::invalid_argument("SolverConfig: block_rows must be >= 1");
  if (!(lambda_coef >= 0.0) || !std::isfinite(lambda_coef))
    throw std::invalid_argument("SolverConfig: lambda_coef must be finite and >= 0");
  if (!(tol_rrn > 0.0)) throw std::invalid_argument("SolverConfig: tol_rrn must be > 0");
  if (tail_window < 1) throw std::invalid_argument("SolverConfig: tail_window must be >= 1");
  if (time_limit_s < 0.0) throw std::invalid_argument("SolverConfig: time_limit_s must be >= 0");
}

DynamicBlockSelection select_residual_block(std::span<const double> r, Index size) {
  if (size < 1 || size > r.size())
    throw std::invalid_argument("select_residual_block: need 1 <= size <= r.size()");
  std::vector<Index> idx(r.size());
  std::iota(idx.begin(), idx.end(), Index{0});
  // Strict total order: larger r^2 first, then lower index.
  auto before = [&](Index i, Index j) {
    const double ri = r[i] * r[i];
    const double rj = r[j] * r[j];
    return ri != rj ? ri > rj : i < j;
  };
  if (size < idx.size()) std::nth_element(idx.begin(), idx.begin() + size - 1, idx.end(), before);
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  DynamicBlockSelection sel{std::move(idx), 0.0};
  for (Index i : sel.indices) sel.score += r[i] * r[i];
  return sel;
}

Metrics compute_metrics(const MatrixHandle& a, std::span<const double> b, std::span<const double> x,
                        std::optional<std::span<const double>> x_star) {
  const double bnorm = norm2(b);
  if (bnorm == 0.0) throw MetricError("RRN undefined: ||b|| = 0");
  Metrics m;
  m.rrn = norm2(residual(a, b, x)) / bnorm;
  if (x_star) {
    require_dims(x_star->size() == x.size(), "compute_metrics: x_star.size() != x.size()");
    const double snorm = norm2(*x_star);
    if (snorm == 0.0) throw MetricError("RE undefined: ||x_star|| = 0");
    m.re = norm2(subtract(x, *x_star)) / snorm;
  }
  return m;
}

Metrics compute_metrics(const LinearSystem& sys, std::span<const double> x) {
  return compute_metrics(sys.A(), sys.b, x, star_of(sys));
}

FixedBlockCache::FixedBlockCache(const MatrixHandle& a, BlockPartition part, Regularization reg,
                                 double lambda)
    : a_(&a), part_(std::move(part)), reg_(reg), lambda_(lambda) {
  require_dims(part_.rows() == a.rows(), "FixedBlockCache: partition does not cover A");
  blocks_.reserve(part_.num_blocks());
  for (Index t = 0; t < part_.num_blocks(); ++t) blocks_.push_back(part_.block(a, t));
  factors_.resize(part_.num_blocks());
  zero_block_.assign(part_.num_blocks(), false);
}

double FixedBlockCache::lambda_for(const RowBlock& block) const {
  return reg_ == Regularization::scaled ? lambda_ : pseudo_inverse_jitter(block);
}

const BlockFactor* FixedBlockCache::factor(Index t) {
  if (zero_block_[t]) return nullptr;
  if (!factors_[t]) {
    const auto t0 = Clock::now();
    const RowBlock& blk = blocks_[t];
    if (blk.frobenius_sq() == 0.0) {
      zero_block_[t] = true;
      factor_seconds_ += seconds_since(t0);
      return nullptr;
    }
    factors_[t] = factor_block(blk, lambda_for(blk));
    factor_seconds_ += seconds_since(t0);
  }
  return &*factors_[t];
}

RorBkSolver::RorBkSolver(const MatrixHandle& a, SolverConfig cfg)
    : a_(&a),
      cfg_(validated(cfg)),
      lambda_(cfg.lambda_coef * static_cast<double>(cfg.effective_block_rows(a.rows()))),
      cache_(a, partition_rows(a.rows(), cfg.effective_block_rows(a.rows())), Regularization::scaled,
             lambda_),
      rng_(cfg.seed) {
  const auto t0 = Clock::now();
  cosines_ = compute_cosine_matrix(compute_centroids(a, cache_.partition()));
  dist_ = build_sampling_distribution(cosines_);
  construct_seconds_ = seconds_since(t0);
}

void RorBkSolver::set_stopping(double tol_rrn, Index max_iters) {
  if (!(tol_rrn > 0.0)) throw std::invalid_argument("RorBkSolver: tol_rrn must be > 0");
  cfg_.tol_rrn = tol_rrn;
  cfg_.max_iters = max_iters;
}

SolverState RorBkSolver::start(std::span<const double> b, std::span<const double> x0) const {
  require_dims(x0.size() == a_->cols(), "RorBkSolver::start: x0.size() != A.cols()");
  SolverState s{Vector(x0.begin(), x0.end()), Vector(a_->rows()), 0};
  residual(*a_, b, s.x, s.r);
  return s;
}

void RorBkSolver::fixed_update(SolverState& state, std::span<const double> b, Index block) {
  const BlockFactor* f = cache_.factor(block);
  if (!f) return;
  const RowBlock& blk = cache_.block(block);
  apply_block(blk, *f, blk.residual(b, state.x), state.x);
}

void RorBkSolver::fixed_updates(SolverState& state, std::span<const double> b) {
  for (Index u = 0; u < cfg_.orth_updates_per_iter; ++u) fixed_update(state, b, sample_block(dist_, rng_));
}

void RorBkSolver::refresh_residual(SolverState& state, std::span<const double> b) const {
  residual(*a_, b, state.x, state.r);
}

void RorBkSolver::dynamic_update(SolverState& state, std::span<const double> b) {
  (void)b;  // the residual subvector comes from the freshly refreshed state.r
  const Index size = partition().block_rows();
  DynamicBlockSelection sel = select_residual_block(state.r, size);
  if (sel.score == 0.0) return;
  Vector resid_sub(sel.indices.size());
  for (Index p = 0; p < sel.indices.size(); ++p) resid_sub[p] = state.r[sel.indices[p]];
  const RowBlock blk(*a_, std::move(sel.indices), BlockKind::dynamic);
  const BlockFactor f = factor_block(blk, lambda_);
  apply_block(blk, f, resid_sub, state.x);
}

void RorBkSolver::iterate(SolverState& state, std::span<const double> b) {
  fixed_updates(state, b);
  refresh_residual(state, b);
  dynamic_update(state, b);
  ++state.iter;
}

SolveResult RorBkSolver::solve(std::span<const double> b, std::span<const double> x0,
                               std::optional<std::span<const double>> x_star) {
  return run_outer_loop(
      "ror-bk", *a_, b, x0, x_star, cfg_, [&](SolverState& s) { fixed_updates(s, b); },
      [&](SolverState& s) {
        dynamic_update(s, b);
        return true;
      },
      [&] { return setup_seconds(); });
}

SolveResult ror_bk_solve(const LinearSystem& sys, std::span<const double> x0, const SolverConfig& cfg) {
  sys.validate();
  RorBkSolver solver(sys.A(), cfg);
  return solver.solve(sys.b, x0, star_of(sys));
}

SolveResult sobk_solve(const LinearSystem& sys, std::span<const double> x0, const SolverConfig& cfg) {
  sys.validate();
  cfg.validate();
  const MatrixHandle& a = sys.A();
  const auto t0 = Clock::now();
  FixedBlockCache cache(a, partition_rows(a.rows(), cfg.effective_block_rows(a.rows())),
                        Regularization::pseudo_inverse, 0.0);
  const CosineMatrix c = compute_cosine_matrix(compute_centroids(a, cache.partition()));
  const Index k = c.size();
  std::vector<Index> partner(k);
  for (Index i = 0; i < k; ++i) {
    Index best = i;
    double best_c = 2.0;
    for (Index j = 0; j < k; ++j) {
      if (j != i && c(i, j) < best_c) {
        best_c = c(i, j);
        best = j;
      }
    }
    partner[i] = best;
  }
  const double construct = seconds_since(t0);
  Rng rng(cfg.seed);
  std::span<const double> b = sys.b;

  auto update = [&](SolverState& s, Index t) {
    const BlockFactor* f = cache.factor(t);
    if (!f) return;
    const RowBlock& blk = cache.block(t);
    apply_block(blk, *f, blk.residual(b, s.x), s.x);
  };
  return run_outer_loop(
      "sobk-style", a, b, x0, star_of(sys), cfg,
      [&](SolverState& s) {
        const Index t1 = rng.uniform_index(k);
        const Index t2 = partner[t1];
        update(s, t1);
        update(s, t2);
        update(s, t1);
      },
      [](SolverState&) { return false; }, [&] { return construct + cache.factor_seconds(); });
}

Vector mean_of(std::span<const Vector> vs) {
  if (vs.empty()) return {};
  Vector out(vs.front().size(), 0.0);
  for (const auto& v : vs) axpy(1.0, v, out);
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (double& v : out) v *= inv;
  return out;
}

SolveResult ta_reblock_u_solve(const LinearSystem& sys, std::span<const double> x0,
                               const SolverConfig& cfg) {
  sys.validate();
  cfg.validate();
  const MatrixHandle& a = sys.A();
  std::span<const double> b = sys.b;
  require_dims(x0.size() == a.cols(), "solve: x0.size() != A.cols()");
  constexpr Index kUpdatesPerIter = 4;
  const std::string method = "ta-reblock-u";

  const auto setup_t0 = Clock::now();
  const Index s = cfg.effective_block_rows(a.rows());
  FixedBlockCache cache(a, partition_rows(a.rows(), s), Regularization::scaled,
                        cfg.lambda_coef * static_cast<double>(s));
  const Index k = cache.partition().num_blocks();
  const double construct = seconds_since(setup_t0);
  Rng rng(cfg.seed);

  SolveResult out;
  SolverReport& rep = out.report;
  rep.method = method;
  const auto t0 = Clock::now();
  const double bnorm = norm2(b);
  SolverState state{Vector(x0.begin(), x0.end()), Vector(a.rows()), 0};
  if (bnorm == 0.0) {
    std::fill(state.x.begin(), state.x.end(), 0.0);
    rep.rrn_history = {0.0};
    rep.converged = true;
    if (cfg.record_iterates) rep.iterates.push_back(state.x);
    out.x = std::move(state.x);
    if (sys.x_star) rep.final_re = compute_metrics(sys, out.x).re;
    return out;
  }

  residual(a, b, state.x, state.r);
  double rrn = norm2(state.r) / bnorm;
  rep.rrn_history.push_back(rrn);
  if (cfg.record_iterates) rep.iterates.push_back(state.x);
  bool converged = rrn < cfg.tol_rrn;

  const Index window = cfg.tail_window;
  std::deque<Vector> tail;
  Vector tail_sum(a.cols(), 0.0);
  Vector avg(a.cols());
  Vector avg_resid(a.rows());

  while (!converged && state.iter < cfg.max_iters) {
    ++state.iter;
    for (Index u = 0; u < kUpdatesPerIter; ++u) {
      const Index t = rng.uniform_index(k);
      const BlockFactor* f = cache.factor(t);
      if (!f) continue;
      const RowBlock& blk = cache.block(t);
      apply_block(blk, *f, blk.residual(b, state.x), state.x);
    }
    residual(a, b, state.x, state.r);
    rrn = norm2(state.r) / bnorm;
    if (!std::isfinite(rrn) || !all_finite(state.x)) throw DivergenceDetected(method, state.iter);
    if (cfg.record_iterates) rep.iterates.push_back(state.x);

    tail.push_back(state.x);
    axpy(1.0, state.x, tail_sum);
    if (tail.size() > window) {
      axpy(-1.0, tail.front(), tail_sum);
      tail.pop_front();
    }
    if (state.iter % window == 0) {
      // Resum from scratch now and then so the running sum does not drift.
      std::fill(tail_sum.begin(), tail_sum.end(), 0.0);
      for (const auto& v : tail) axpy(1.0, v, tail_sum);
    }

    if (state.iter > window) {
      // Past the window the reported solution is the tail average, so the
      // stopping test is applied to it.
      const double inv = 1.0 / static_cast<double>(tail.size());
      for (Index j = 0; j < avg.size(); ++j) avg[j] = tail_sum[j] * inv;
      residual(a, b, avg, avg_resid);
      rrn = norm2(avg_resid) / bnorm;
    }
    rep.rrn_history.push_back(rrn);
    if (rrn < cfg.tol_rrn) {
      converged = true;
      break;
    }
    if (out_of_time(cfg, t0)) break;
  }

  if (state.iter == 0 || (converged && state.iter <= window)) {
    out.x = state.x;
  } else {
    out.x = mean_of(std::vector<Vector>(tail.begin(), tail.end()));
    rrn = norm2(residual(a, b, out.x)) / bnorm;
  }

  rep.iterations = state.iter;
  rep.final_rrn = rrn;
  rep.converged = rrn < cfg.tol_rrn;
  rep.wall_time_s = std::max(0.0, seconds_since(t0) - cache.factor_seconds());
  rep.setup_time_s = construct + cache.factor_seconds();
  if (sys.x_star) rep.final_re = compute_metrics(sys, out.x).re;
  return out;
}

}  // namespace rorbk
