#include "rorbk/fgmres.hpp"

#include <chrono>

namespace rorbk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr double kReorthogonalizeBelow = 0.7;
constexpr double kBreakdownRatio = 1e-14;

Vector assemble_solution(std::span<const double> x0, const std::vector<Vector>& z,
                         std::span<const double> y) {
  Vector x(x0.begin(), x0.end());
  for (Index j = 0; j < y.size(); ++j) axpy(y[j], z[j], x);
  return x;
}

}  // namespace

void FgmresConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("FgmresConfig: eta must lie in (0, 1)");
  if (inner_max < 1) throw std::invalid_argument("FgmresConfig: inner_max must be >= 1");
  if (outer_max < 1) throw std::invalid_argument("FgmresConfig: outer_max must be >= 1");
  if (!(tol_rrn > 0.0)) throw std::invalid_argument("FgmresConfig: tol_rrn must be > 0");
  if (!(time_limit_s >= 0.0)) throw std::invalid_argument("FgmresConfig: time_limit_s must be >= 0");
  inner_cfg.validate();
}

DenseMatrix KrylovState::hessenberg() const {
  const Index k = h.size();
  DenseMatrix out(k + 1, k);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < h[j].size(); ++i) out(i, j) = h[j][i];
  return out;
}

KrylovState start_krylov(std::span<const double> r0) {
  KrylovState s;
  s.beta = norm2(r0);
  if (!(s.beta > 0.0)) throw std::invalid_argument("start_krylov: zero initial residual");
  Vector v1(r0.begin(), r0.end());
  for (double& e : v1) e /= s.beta;
  s.v.push_back(std::move(v1));
  return s;
}

ArnoldiOutcome arnoldi_step(KrylovState& state, const MatrixHandle& a, Vector z) {
  const Index k = state.v.size();
  require_dims(k == state.z.size() + 1, "arnoldi_step: state already broke down");
  require_dims(z.size() == a.cols(), "arnoldi_step: z.size() != A.cols()");
  Vector w = matvec(a, z);
  const double norm0 = norm2(w);
  Vector col(k + 1, 0.0);
  for (Index i = 0; i < k; ++i) {
    col[i] = dot(state.v[i], w);
    axpy(-col[i], state.v[i], w);
  }
  double wnorm = norm2(w);
  if (wnorm < kReorthogonalizeBelow * norm0) {
    for (Index i = 0; i < k; ++i) {
      const double c = dot(state.v[i], w);
      col[i] += c;
      axpy(-c, state.v[i], w);
    }
    wnorm = norm2(w);
  }
  col[k] = wnorm;
  state.z.push_back(std::move(z));
  state.h.push_back(std::move(col));
  if (norm0 == 0.0 || wnorm < kBreakdownRatio * norm0) return ArnoldiOutcome::happy_breakdown;
  for (double& e : w) e /= wnorm;
  state.v.push_back(std::move(w));
  return ArnoldiOutcome::extended;
}

double GivensLsq::append_column(std::span<const double> column) {
  const Index j = r_.size();
  require_dims(column.size() == j + 2, "GivensLsq: column must have length k+2");
  Vector c(column.begin(), column.end());
  for (Index i = 0; i < j; ++i) {
    const double t = cs_[i] * c[i] + sn_[i] * c[i + 1];
    c[i + 1] = -sn_[i] * c[i] + cs_[i] * c[i + 1];
    c[i] = t;
  }
  const double r = std::hypot(c[j], c[j + 1]);
  const double cs = r == 0.0 ? 1.0 : c[j] / r;
  const double sn = r == 0.0 ? 0.0 : c[j + 1] / r;
  c[j] = r;
  c.pop_back();
  cs_.push_back(cs);
  sn_.push_back(sn);
  g_.push_back(-sn * g_[j]);
  g_[j] *= cs;
  r_.push_back(std::move(c));
  return residual();
}

Vector GivensLsq::solve() const {
  const Index k = r_.size();
  Vector y(k);
  for (Index jj = k; jj-- > 0;) {
    double v = g_[jj];
    for (Index c = jj + 1; c < k; ++c) v -= r_[c][jj] * y[c];
    const double pivot = r_[jj][jj];
    if (pivot == 0.0 || !std::isfinite(pivot))
      throw std::runtime_error("hessenberg_lsq: rank-deficient Hessenberg matrix");
    y[jj] = v / pivot;
  }
  return y;
}

HessenbergSolution hessenberg_lsq(const DenseMatrix& h, double beta) {
  const Index k = h.cols();
  require_dims(h.rows() == k + 1, "hessenberg_lsq: H must be (k+1) x k");
  GivensLsq lsq(beta);
  Vector col;
  for (Index j = 0; j < k; ++j) {
    col.assign(j + 2, 0.0);
    for (Index i = 0; i < j + 2; ++i) col[i] = h(i, j);
    lsq.append_column(col);
  }
  return {lsq.solve(), lsq.residual()};
}

InnerResult inner_precondition(RorBkSolver& solver, std::span<const double> v, double eta,
                               Index inner_max) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("inner_precondition: eta must lie in (0, 1)");
  if (inner_max < 1) throw std::invalid_argument("inner_precondition: inner_max must be >= 1");
  require_dims(v.size() == solver.matrix().rows(), "inner_precondition: v.size() != A.rows()");
  solver.set_stopping(eta, inner_max);
  const Vector z0(solver.matrix().cols(), 0.0);
  SolveResult res = solver.solve(v, z0);
  return {std::move(res.x), res.report.iterations, res.report.final_rrn};
}

FgmresResult flexible_gmres(const MatrixHandle& a, std::span<const double> b,
                            std::span<const double> x0, const FgmresConfig& cfg,
                            const Preconditioner& precondition) {
  cfg.validate();
  require_dims(b.size() == a.rows(), "flexible_gmres: b.size() != A.rows()");
  require_dims(x0.size() == a.cols(), "flexible_gmres: x0.size() != A.cols()");
  const auto t0 = Clock::now();
  FgmresResult out;
  FgmresReport& rep = out.report;

  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    out.x.assign(a.cols(), 0.0);
    rep.rrn_history = {0.0};
    rep.converged = true;
    return out;
  }
  const Vector r0 = residual(a, b, x0);
  const double beta = norm2(r0);
  rep.rrn_history.push_back(beta / bnorm);
  if (cfg.track_true_residual) rep.true_rrn_history.push_back(beta / bnorm);
  if (beta / bnorm < cfg.tol_rrn) {
    out.x.assign(x0.begin(), x0.end());
    rep.final_rrn = beta / bnorm;
    rep.converged = true;
    rep.wall_time_s = seconds_since(t0);
    return out;
  }

  KrylovState krylov = start_krylov(r0);
  GivensLsq lsq(beta);
  while (krylov.steps() < cfg.outer_max) {
    Vector z = precondition(krylov.v.back());
    require_dims(z.size() == a.cols(), "flexible_gmres: preconditioner returned wrong length");
    if (!all_finite(z)) throw DivergenceDetected("fab-gmres", krylov.steps() + 1);
    const ArnoldiOutcome outcome = arnoldi_step(krylov, a, std::move(z));
    const double small = lsq.append_column(krylov.h.back());
    rep.rrn_history.push_back(small / bnorm);
    if (cfg.track_true_residual) {
      const Vector xk = assemble_solution(x0, krylov.z, lsq.solve());
      rep.true_rrn_history.push_back(norm2(residual(a, b, xk)) / bnorm);
    }
    if (outcome == ArnoldiOutcome::happy_breakdown) {
      rep.happy_breakdown = true;
      break;
    }
    if (small / bnorm < cfg.tol_rrn) break;
    if (cfg.time_limit_s > 0.0 && seconds_since(t0) > cfg.time_limit_s) break;
  }

  rep.outer_iterations = krylov.steps();
  out.x = assemble_solution(x0, krylov.z, lsq.solve());
  if (!all_finite(out.x)) throw DivergenceDetected("fab-gmres", rep.outer_iterations);
  rep.final_rrn = norm2(residual(a, b, out.x)) / bnorm;
  rep.converged = rep.final_rrn < cfg.tol_rrn;
  rep.wall_time_s = seconds_since(t0);
  return out;
}

FgmresResult fab_gmres_solve(const LinearSystem& sys, std::span<const double> x0,
                             const FgmresConfig& cfg) {
  sys.validate();
  cfg.validate();
  RorBkSolver inner(sys.A(), cfg.inner_cfg);
  std::vector<Index> inner_counts;
  auto precondition = [&](std::span<const double> v) {
    InnerResult res = inner_precondition(inner, v, cfg.eta, cfg.inner_max);
    inner_counts.push_back(res.iterations);
    return std::move(res.z);
  };
  FgmresResult out = flexible_gmres(sys.A(), sys.b, x0, cfg, precondition);
  out.report.inner_iteration_counts = std::move(inner_counts);
  out.report.setup_time_s = inner.setup_seconds();
  out.report.wall_time_s = std::max(0.0, out.report.wall_time_s - inner.setup_seconds());
  return out;
}

}  // namespace rorbk
