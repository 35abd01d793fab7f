#include "dmoc/shooting.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dmoc/systems.hpp"

namespace dmoc {

const char* init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::kZeros: return "zeros";
    case InitStrategy::kLinear: return "linear";
    case InitStrategy::kWarmStart: return "warm";
  }
  return "?";
}

InitStrategy parse_init(const std::string& s) {
  if (s == "zeros") return InitStrategy::kZeros;
  if (s == "linear") return InitStrategy::kLinear;
  if (s == "warm") return InitStrategy::kWarmStart;
  throw UsageError("unknown init strategy '" + s + "' (zeros | linear | warm)");
}

void ShootingConfig::validate() const {
  if (segments < 1) throw UsageError("solver: segments must be at least 1");
  if (!(tol > 0.0)) throw UsageError("solver: tol must be positive");
  if (max_newton < 0) throw UsageError("solver: max_newton must be non-negative");
  if (!(fd_eps > 0.0 && fd_eps <= 1e-2)) throw UsageError("solver: fd_eps must lie in (0, 1e-2]");
  if (!(damping > 0.0 && damping < 1.0)) throw UsageError("solver: damping must lie in (0, 1)");
  if (!(min_step > 0.0 && min_step <= 1.0)) throw UsageError("solver: min_step must lie in (0, 1]");
  for (double s : homotopy_schedule) {
    if (!(s > 0.0)) throw UsageError("solver: homotopy scales must be positive");
  }
}

WarmStart OcSolution::as_warm_start() const { return {trajectory.controls, multipliers, trajectory.states}; }

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double eps) {
  Eigen::MatrixXd J;
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp(j) = x(j) + eps;
    const Eigen::VectorXd rp = f(xp);
    xp(j) = x(j) - eps;
    const Eigen::VectorXd rm = f(xp);
    xp(j) = x(j);
    if (j == 0) J.resize(rp.size(), x.size());
    J.col(j) = (rp - rm) / (2.0 * eps);
  }
  return J;
}

Eigen::VectorXd newton_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, bool* used_least_squares) {
  if (used_least_squares) *used_least_squares = false;
  if (J.rows() == J.cols()) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
    const Eigen::VectorXd d = lu.solve(-r);
    if (d.allFinite() && lu.rcond() > 1e-15) return d;
  }
  if (used_least_squares) *used_least_squares = true;
  return Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(J).solve(-r);
}

NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                          double tol, int max_iters, double fd_eps, double damping, double min_step) {
  NewtonResult out;
  Eigen::VectorXd r = f(x);
  for (;;) {
    out.residual = r.lpNorm<Eigen::Infinity>();
    if (out.residual <= tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iters) break;
    const Eigen::VectorXd d = newton_step(fd_jacobian(f, x, fd_eps), r);
    const double r0 = r.norm();
    bool accepted = false;
    for (double a = 1.0; a >= min_step; a *= damping) {
      const Eigen::VectorXd xt = x + a * d;
      const Eigen::VectorXd rt = f(xt);
      if (rt.allFinite() && rt.norm() < r0) {
        x = xt;
        r = rt;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      out.stalled = true;
      break;
    }
  }
  out.x = x;
  return out;
}

ShootingSystem::ShootingSystem(const OcProblem& p, int segments, StepOptions step)
    : p_(p), S_(segments), step_(step) {
  p_.validate();
  if (segments < 1 || segments > p.N) throw UsageError("shooting: segments must lie in [1, N]");
  da_ = p.model.ga.dim();
  du_ = p.model.gu.dim();
  lam_block_ = 2 * (da_ + du_);
  state_block_ = 2 * (da_ + du_);
  const int len = p.N / S_;
  for (int s = 0; s < S_; ++s) seg_begin_.push_back(s * len);
  seg_begin_.push_back(p.N);
  seg_of_.resize(p.N);
  for (int s = 0; s < S_; ++s) {
    for (int k = seg_begin_[s]; k < seg_begin_[s + 1]; ++k) seg_of_[k] = s;
  }
  n_unknowns_ = (p.N + 1) * da_ + p.N * lam_block_ + (S_ - 1) * state_block_;
  n_rows_ = row_of_step(p.N) + da_ + (S_ - 1) * state_block_ + state_block_;
  c_.state.resize(p.N);
  c_.seg_end.resize(S_);
  c_.f.resize(p.N);
  c_.z.resize(p.N);
  c_.res.resize(p.N);
  c_.terms.resize(p.N);
  c_.lam2.resize(p.N);
  c_.lam5.resize(p.N);
}

int ShootingSystem::row_of_step(int k) const { return k == 0 ? 0 : da_ + (k - 1) * (3 * da_ + 2 * du_); }
int ShootingSystem::rows_of_step(int k) const { return k == 0 ? da_ : 3 * da_ + 2 * du_; }

CoAlgebraVector ShootingSystem::control(const ShootingIterate& x, int j) const {
  return CoAlgebraVector(p_.model.ga, x.u[j]);
}

ShootingIterate ShootingSystem::initial(InitStrategy init, const WarmStart* warm) const {
  const int N = p_.N;
  ShootingIterate x;
  x.starts.resize(S_);
  x.starts[0] = p_.s0;
  if (init == InitStrategy::kWarmStart) {
    if (!warm) throw UsageError("shooting: warm start requested without a previous solution");
    if (static_cast<int>(warm->controls.size()) != N + 1 || static_cast<int>(warm->states.size()) != N + 1) {
      throw UsageError("shooting: warm start has the wrong horizon");
    }
    warm->multipliers.validate(p_.model, N);
    for (const auto& u : warm->controls) x.u.push_back(u.coords());
    for (int k = 0; k < N; ++k) {
      x.l1.push_back(warm->multipliers.lam1[k].coords());
      x.l3.push_back(warm->multipliers.lam3[k].coords());
      x.l4.push_back(warm->multipliers.lam4[k].coords());
      x.l6.push_back(warm->multipliers.lam6[k].coords());
    }
    for (int s = 1; s < S_; ++s) x.starts[s] = warm->states[seg_begin_[s]];
    return x;
  }
  x.u.assign(N + 1, Vec::Zero(da_));
  x.l1.assign(N, Vec::Zero(da_));
  x.l3 = x.l1;
  x.l4.assign(N, Vec::Zero(du_));
  x.l6 = x.l4;
  if (S_ == 1) return x;
  if (init == InitStrategy::kZeros) {
    std::vector<CoAlgebraVector> u0(N + 1, CoAlgebraVector::zero(p_.model.ga));
    const Trajectory t = simulate(p_.model, p_.s0, u0, seg_begin_[S_ - 1], step_);
    for (int s = 1; s < S_; ++s) x.starts[s] = t.states[seg_begin_[s]];
  } else {
    const AlgebraVector da = log(compose(inverse(p_.s0.ga), p_.sf.ga));
    const AlgebraVector du = log(compose(inverse(p_.s0.gu), p_.sf.gu));
    for (int s = 1; s < S_; ++s) {
      const double t = static_cast<double>(seg_begin_[s]) / N;
      x.starts[s] = {compose(p_.s0.ga, exp(t * da)), compose(p_.s0.gu, exp(t * du)),
                     (1.0 - t) * p_.s0.mu_a + t * p_.sf.mu_a, (1.0 - t) * p_.s0.mu_u + t * p_.sf.mu_u};
    }
  }
  return x;
}

namespace {

void retract_state(ProductState& s, const Eigen::Ref<const Eigen::VectorXd>& d, double alpha, int da, int du) {
  s.ga = compose(s.ga, exp(AlgebraVector(s.ga.group(), alpha * d.segment(0, da))));
  s.gu = compose(s.gu, exp(AlgebraVector(s.gu.group(), alpha * d.segment(da, du))));
  s.mu_a = CoAlgebraVector(s.mu_a.group(), s.mu_a.coords() + alpha * d.segment(da + du, da));
  s.mu_u = CoAlgebraVector(s.mu_u.group(), s.mu_u.coords() + alpha * d.segment(2 * da + du, du));
}

// The single-coordinate version of retract_state, bit-for-bit the same result.
void perturb_state(ProductState& s, int i, double e, int da, int du) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(2 * (da + du));
  d(i) = e;
  retract_state(s, d, 1.0, da, du);
}

}  // namespace

ShootingIterate ShootingSystem::retract(const ShootingIterate& x, const Eigen::VectorXd& delta, double alpha) const {
  if (delta.size() != n_unknowns_) throw UsageError("shooting: step has the wrong size");
  ShootingIterate y = x;
  for (int j = 0; j <= p_.N; ++j) y.u[j] += alpha * delta.segment(u_col(j), da_);
  for (int k = 0; k < p_.N; ++k) {
    const int c = lam_col(k);
    y.l1[k] += alpha * delta.segment(c, da_);
    y.l3[k] += alpha * delta.segment(c + da_, da_);
    y.l4[k] += alpha * delta.segment(c + 2 * da_, du_);
    y.l6[k] += alpha * delta.segment(c + 2 * da_ + du_, du_);
  }
  for (int s = 1; s < S_; ++s) retract_state(y.starts[s], delta.segment(start_col(s), state_block_), alpha, da_, du_);
  return y;
}

void ShootingSystem::update_lam25(const ShootingIterate& x, int k) {
  const kkt::StepMultipliers m{x.l1[k], x.l3[k], x.l4[k], x.l6[k]};
  c_.lam2[k] = kkt::lam2_value(p_, c_.terms[k], c_.state[k].mu_a.coords(), x.u[k], m);
  c_.lam5[k] = kkt::lam5_value(p_, c_.terms[k], c_.state[k].mu_u.coords(), m);
}

void ShootingSystem::simulate_from(const ShootingIterate& x, int s, int k_from) {
  const int a = seg_begin_[s], b = seg_begin_[s + 1];
  if (k_from == a) c_.state[a] = x.starts[s];
  for (int k = k_from; k < b; ++k) {
    StepResult r = step_hamilton(p_.model, c_.state[k], control(x, k), control(x, k + 1),
                                 k == a ? nullptr : &c_.z[k - 1], k, step_);
    c_.f[k] = r.f;
    c_.z[k] = r.z;
    c_.res[k] = r.residual;
    if (k + 1 < b) {
      c_.state[k + 1] = std::move(r.next);
    } else {
      c_.seg_end[s] = std::move(r.next);
    }
    c_.terms[k] = step_terms(p_, c_.state[k].config(), c_.f[k], control(x, k));
    update_lam25(x, k);
  }
}

void ShootingSystem::fill_step_rows(const ShootingIterate& x, int k, Eigen::Ref<Eigen::VectorXd> out) const {
  const StepTerms& t = c_.terms[k];
  const kkt::StepMultipliers m{x.l1[k], x.l3[k], x.l4[k], x.l6[k]};
  int o = 0;
  auto put = [&](const Vec& v) {
    out.segment(o, v.size()) = v;
    o += static_cast<int>(v.size());
  };
  if (k >= 1) {
    put(kkt::adjoint_a(t, m, c_.lam2[k - 1], c_.lam2[k]));
    put(kkt::adjoint_u(t, m, c_.lam5[k - 1], c_.lam5[k]));
    put(kkt::lam3_rec(t, m, x.l3[k - 1]));
    put(kkt::lam6_rec(t, m, x.l6[k - 1]));
    put(kkt::optimality(p_, t, m, &x.l3[k - 1]));
  } else {
    put(kkt::optimality(p_, t, m, nullptr));
  }
}

void ShootingSystem::fill_tail_rows(const ShootingIterate& x, Eigen::Ref<Eigen::VectorXd> out) const {
  out.head(da_) = kkt::terminal_control(p_, x.l3[p_.N - 1]);
  int o = da_;
  for (int s = 1; s < S_; ++s) {
    const ProductState& a = c_.seg_end[s - 1];
    const ProductState& b = c_.state[seg_begin_[s]];
    out.segment(o, da_) = log(compose(inverse(a.ga), b.ga)).coords();
    out.segment(o + da_, du_) = log(compose(inverse(a.gu), b.gu)).coords();
    out.segment(o + da_ + du_, da_) = (b.mu_a - a.mu_a).coords();
    out.segment(o + 2 * da_ + du_, du_) = (b.mu_u - a.mu_u).coords();
    o += state_block_;
  }
  out.segment(o, state_block_) = kkt::boundary(p_, c_.seg_end[S_ - 1]);
}

void ShootingSystem::fill_rows(const ShootingIterate& x, int k_lo, int k_hi, Eigen::VectorXd& r) const {
  for (int k = k_lo; k <= k_hi; ++k) fill_step_rows(x, k, r.segment(row_of_step(k), rows_of_step(k)));
  fill_tail_rows(x, r.segment(tail_row(), n_rows_ - tail_row()));
}

Eigen::VectorXd ShootingSystem::residual(const ShootingIterate& x) {
  for (int s = 0; s < S_; ++s) simulate_from(x, s, seg_begin_[s]);
  Eigen::VectorXd r(n_rows_);
  fill_rows(x, 0, p_.N - 1, r);
  return r;
}

void ShootingSystem::jacobian(const ShootingIterate& x, double eps, Eigen::Ref<Eigen::MatrixXd> J,
                              Eigen::VectorXd& r) {
  if (J.rows() != n_rows_ || J.cols() != n_unknowns_) throw UsageError("shooting: Jacobian has the wrong shape");
  r = residual(x);
  J.setZero();
  const int N = p_.N;
  const int tail = tail_row();
  const int n_tail = n_rows_ - tail;
  ShootingIterate w = x;

  // Cached quantities of steps [lo, hi] and every segment end, restored after
  // each perturbed evaluation so the next column starts from the base point.
  struct Saved {
    int lo = 0, hi = -1;
    Cache c;
  } saved;
  auto save = [&](int lo, int hi) {
    saved.lo = lo;
    saved.hi = hi;
    saved.c.state.assign(c_.state.begin() + lo, c_.state.begin() + hi + 1);
    saved.c.f.assign(c_.f.begin() + lo, c_.f.begin() + hi + 1);
    saved.c.z.assign(c_.z.begin() + lo, c_.z.begin() + hi + 1);
    saved.c.res.assign(c_.res.begin() + lo, c_.res.begin() + hi + 1);
    saved.c.terms.assign(c_.terms.begin() + lo, c_.terms.begin() + hi + 1);
    saved.c.lam2.assign(c_.lam2.begin() + lo, c_.lam2.begin() + hi + 1);
    saved.c.lam5.assign(c_.lam5.begin() + lo, c_.lam5.begin() + hi + 1);
    saved.c.seg_end = c_.seg_end;
  };
  auto restore = [&]() {
    std::copy(saved.c.state.begin(), saved.c.state.end(), c_.state.begin() + saved.lo);
    std::copy(saved.c.f.begin(), saved.c.f.end(), c_.f.begin() + saved.lo);
    std::copy(saved.c.z.begin(), saved.c.z.end(), c_.z.begin() + saved.lo);
    std::copy(saved.c.res.begin(), saved.c.res.end(), c_.res.begin() + saved.lo);
    std::copy(saved.c.terms.begin(), saved.c.terms.end(), c_.terms.begin() + saved.lo);
    std::copy(saved.c.lam2.begin(), saved.c.lam2.end(), c_.lam2.begin() + saved.lo);
    std::copy(saved.c.lam5.begin(), saved.c.lam5.end(), c_.lam5.begin() + saved.lo);
    c_.seg_end = saved.c.seg_end;
  };

  Eigen::VectorXd rp(n_rows_), rm(n_rows_);
  // Evaluates one column: perturb(+-eps) mutates w and the cache, rows of
  // steps [lo, min(hi + 1, N - 1)] and the tail are differenced.
  auto column = [&](int col, int lo, int hi, const std::function<void(double)>& perturb,
                    const std::function<void()>& unperturb) {
    const int row_hi = std::min(hi + 1, N - 1);
    save(lo, hi);
    for (int sign : {+1, -1}) {
      perturb(sign * eps);
      Eigen::VectorXd& out = sign > 0 ? rp : rm;
      fill_rows(w, lo, row_hi, out);
      unperturb();
      restore();
    }
    const int r0 = row_of_step(lo);
    const int r1 = row_of_step(row_hi) + rows_of_step(row_hi);
    J.col(col).segment(r0, r1 - r0) = (rp.segment(r0, r1 - r0) - rm.segment(r0, r1 - r0)) / (2.0 * eps);
    J.col(col).segment(tail, n_tail) = (rp.segment(tail, n_tail) - rm.segment(tail, n_tail)) / (2.0 * eps);
  };

  // Controls: u_j enters step j-1 through u+ and step j through u- and the cost.
  for (int j = 0; j <= N; ++j) {
    const int s_prev = j >= 1 ? seg_of_[j - 1] : -1;
    const int s_cur = j <= N - 1 ? seg_of_[j] : -1;
    const int lo = std::max(j - 1, 0);
    const int last_seg = std::max(s_prev, s_cur);
    const int hi = seg_begin_[last_seg + 1] - 1;
    for (int i = 0; i < da_; ++i) {
      const double orig = w.u[j](i);
      column(
          u_col(j) + i, lo, hi,
          [&](double e) {
            w.u[j](i) = orig + e;
            if (s_prev >= 0) simulate_from(w, s_prev, j - 1);
            if (s_cur >= 0 && s_cur != s_prev) simulate_from(w, s_cur, j);
          },
          [&]() { w.u[j](i) = orig; });
    }
  }

  // Multipliers: only lam2_k, lam5_k and the rows of steps k, k+1 move.
  for (int k = 0; k < N; ++k) {
    std::vector<Vec>* blocks[4] = {&w.l1, &w.l3, &w.l4, &w.l6};
    const int dims[4] = {da_, da_, du_, du_};
    int col = lam_col(k);
    for (int b = 0; b < 4; ++b) {
      for (int i = 0; i < dims[b]; ++i, ++col) {
        Vec& v = (*blocks[b])[k];
        const double orig = v(i);
        column(
            col, k, k,
            [&](double e) {
              v(i) = orig + e;
              update_lam25(w, k);
            },
            [&]() { v(i) = orig; });
      }
    }
  }

  // Segment start states: the whole segment is re-integrated.
  for (int s = 1; s < S_; ++s) {
    const ProductState orig = w.starts[s];
    for (int i = 0; i < state_block_; ++i) {
      column(
          start_col(s) + i, seg_begin_[s], seg_begin_[s + 1] - 1,
          [&](double e) {
            perturb_state(w.starts[s], i, e, da_, du_);
            simulate_from(w, s, seg_begin_[s]);
          },
          [&]() { w.starts[s] = orig; });
    }
  }
}

Trajectory ShootingSystem::trajectory(const ShootingIterate& x) const {
  Trajectory t;
  t.h = p_.model.h;
  t.states = c_.state;
  t.states.push_back(c_.seg_end[S_ - 1]);
  for (const auto& u : x.u) t.controls.push_back(CoAlgebraVector(p_.model.ga, u));
  t.increments = c_.f;
  t.step_residuals = c_.res;
  return t;
}

MultiplierSet ShootingSystem::multipliers(const ShootingIterate& x) const {
  MultiplierSet m;
  for (int k = 0; k < p_.N; ++k) {
    m.lam1.emplace_back(p_.model.ga, x.l1[k]);
    m.lam3.emplace_back(p_.model.ga, x.l3[k]);
    m.lam4.emplace_back(p_.model.gu, x.l4[k]);
    m.lam6.emplace_back(p_.model.gu, x.l6[k]);
    m.lam2.emplace_back(p_.model.ga, c_.lam2[k]);
    m.lam5.emplace_back(p_.model.gu, c_.lam5[k]);
  }
  return m;
}

namespace {

void say(const ShootingConfig& cfg, const std::string& s) {
  if (cfg.log) cfg.log(s);
}

// The shooting Jacobian is mostly zeros, so a sparse LU solve is far cheaper
// than the dense one; the dense path stays as a fallback.
Eigen::VectorXd sparse_newton_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, const ShootingConfig& cfg) {
  if (J.rows() == J.cols()) {
    Eigen::SparseMatrix<double> Js = J.sparseView();
    Js.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(Js);
    if (lu.info() == Eigen::Success) {
      const Eigen::VectorXd d = lu.solve(-r);
      if (lu.info() == Eigen::Success && d.allFinite()) return d;
    }
  }
  bool least_squares = false;
  Eigen::VectorXd d = newton_step(J, r, &least_squares);
  if (least_squares) say(cfg, "  singular Jacobian, least-squares step");
  return d;
}

double certificate_at(ShootingSystem& sys, const ShootingIterate& x, const OcProblem& p) {
  const Trajectory t = sys.trajectory(x);
  return certify(p, t.states, t.controls, sys.multipliers(x)).max_norm();
}

OcSolution solve_stage(const OcProblem& p, const ShootingConfig& cfg, const WarmStart* warm) {
  OcSolution sol;
  sol.segments = cfg.segments;
  ShootingSystem sys(p, cfg.segments, cfg.step);
  ShootingIterate x;
  Eigen::VectorXd r;
  try {
    x = sys.initial(warm ? InitStrategy::kWarmStart : cfg.init, warm);
    r = sys.residual(x);
  } catch (const StepFailure& e) {
    sol.numerical_failure = true;
    sol.message = std::string("integrator failed at the initial iterate: ") + e.what();
    return sol;
  } catch (const DomainError& e) {
    sol.numerical_failure = true;
    sol.message = std::string("integrator failed at the initial iterate: ") + e.what();
    return sol;
  }

  Eigen::MatrixXd J(sys.num_residuals(), sys.num_unknowns());
  bool converged = false;
  for (;;) {
    const double rn = r.lpNorm<Eigen::Infinity>();
    sol.history.push_back(rn);
    {
      char buf[160];
      std::snprintf(buf, sizeof buf, "newton %3d  |r|_inf %.3e", sol.newton_iters, rn);
      say(cfg, buf);
    }
    // The certificate re-derives increments from the states, so it can sit
    // above the shooting residual; keep iterating until both meet tol.
    if (rn <= cfg.tol && certificate_at(sys, x, p) <= cfg.tol) {
      converged = true;
      break;
    }
    if (sol.newton_iters >= cfg.max_newton) {
      sol.message = "iteration limit reached";
      break;
    }
    try {
      sys.jacobian(x, cfg.fd_eps, J, r);
    } catch (const std::exception& e) {
      sol.numerical_failure = true;
      sol.message = std::string("integrator failed while forming the Jacobian: ") + e.what();
      break;
    }
    const Eigen::VectorXd d = sparse_newton_step(J, r, cfg);
    const double r0 = r.norm();
    bool accepted = false;
    for (double a = 1.0; a >= cfg.min_step; a *= cfg.damping) {
      try {
        ShootingIterate xt = sys.retract(x, d, a);
        Eigen::VectorXd rt = sys.residual(xt);
        if (rt.allFinite() && rt.norm() < r0) {
          x = std::move(xt);
          r = std::move(rt);
          accepted = true;
          break;
        }
      } catch (const StepFailure&) {
      } catch (const DomainError&) {
      }
    }
    ++sol.newton_iters;
    if (!accepted) {
      sol.message = "line search stalled";
      break;
    }
  }

  // Re-evaluate at the kept iterate so the cache matches it.
  try {
    r = sys.residual(x);
  } catch (const std::exception& e) {
    sol.numerical_failure = true;
    sol.message = std::string("integrator failed at the final iterate: ") + e.what();
    return sol;
  }
  sol.trajectory = sys.trajectory(x);
  sol.multipliers = sys.multipliers(x);
  sol.cost = total_cost(p, sol.trajectory);
  sol.shooting_residual = r.lpNorm<Eigen::Infinity>();
  sol.residual_norm = certify(p, sol.trajectory.states, sol.trajectory.controls, sol.multipliers).max_norm();
  sol.converged = converged && sol.residual_norm <= cfg.tol;
  if (converged && !sol.converged) sol.message = "shooting residual met tol but the certificate did not";
  if (sol.converged) sol.message = "converged";
  return sol;
}

}  // namespace

OcSolution solve(const OcProblem& p, const ShootingConfig& cfg, const WarmStart* warm) {
  cfg.validate();
  p.validate();
  if (!cfg.homotopy) return solve_stage(p, cfg, warm);

  std::vector<double> scales = cfg.homotopy_schedule;
  if (scales.empty() || scales.back() != 1.0) scales.push_back(1.0);
  OcSolution sol;
  WarmStart current;
  const WarmStart* start = warm;
  std::vector<double> done;
  for (double s : scales) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "gravity scale %.3g", s);
    say(cfg, buf);
    OcProblem ps = p;
    if (s != 1.0) ps.model = with_gravity_scale(p.model, s);
    sol = solve_stage(ps, cfg, start);
    done.push_back(s);
    if (!sol.converged) {
      sol.message = std::string("continuation stopped at gravity scale ") + std::to_string(s) + ": " + sol.message;
      break;
    }
    current = sol.as_warm_start();
    start = &current;
  }
  sol.homotopy = done;
  return sol;
}

}  // namespace dmoc
