#include "dmoc/integrator.hpp"

#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dmoc {

Vec increment_coords(const FactorPair& f) {
  const Vec a = log(f.a).coords();
  const Vec u = log(f.u).coords();
  Vec z(a.size() + u.size());
  z << a, u;
  return z;
}

FactorPair increment_from_coords(const ModelSpec& model, const Vec& z) {
  const int da = model.ga.dim();
  const int du = model.gu.dim();
  if (z.size() != da + du) throw UsageError("increment_from_coords: wrong coordinate count");
  return {exp(AlgebraVector(model.ga, z.head(da))), exp(AlgebraVector(model.gu, z.tail(du)))};
}

std::pair<CoAlgebraVector, CoAlgebraVector> momentum_residual(const ModelSpec& model, const ProductState& s,
                                                              const FactorPair& f, const CoAlgebraVector& u_minus) {
  const FirstDerivs M = first_derivs(model, s.config(), f);
  CoAlgebraVector ra = -M.ag + coAd(inverse(f.a), M.af) - u_minus - s.mu_a;
  CoAlgebraVector ru = -M.ug + coAd(inverse(f.u), M.uf) - s.mu_u;
  return {ra, ru};
}

std::pair<CoAlgebraVector, CoAlgebraVector> momentum_update(const ModelSpec& model, const ProductState& s,
                                                            const FactorPair& f, const CoAlgebraVector& u_minus,
                                                            const CoAlgebraVector& u_plus) {
  const FirstDerivs M = first_derivs(model, s.config(), f);
  return {coAd(f.a, s.mu_a + M.ag + u_minus) + u_plus, coAd(f.u, s.mu_u + M.ug)};
}

namespace {

struct InnerEval {
  Vec r;
  double norm = 0.0;
  // Largest summand magnitude, used to recognise a roundoff floor above tol.
  double scale = 0.0;
};

InnerEval inner_residual(const ModelSpec& model, const ProductState& s, const Vec& z,
                         const CoAlgebraVector& u_minus) {
  const FactorPair f = increment_from_coords(model, z);
  const FirstDerivs M = first_derivs(model, s.config(), f);
  const CoAlgebraVector pa = coAd(inverse(f.a), M.af);
  const CoAlgebraVector pu = coAd(inverse(f.u), M.uf);
  const int da = model.ga.dim();
  InnerEval e;
  e.r.resize(z.size());
  e.r.head(da) = -M.ag.coords() + pa.coords() - u_minus.coords() - s.mu_a.coords();
  e.r.tail(z.size() - da) = -M.ug.coords() + pu.coords() - s.mu_u.coords();
  e.norm = e.r.lpNorm<Eigen::Infinity>();
  if (!std::isfinite(e.norm)) e.norm = std::numeric_limits<double>::infinity();
  e.scale = std::max({M.ag.coords().lpNorm<Eigen::Infinity>(), pa.coords().lpNorm<Eigen::Infinity>(),
                      u_minus.coords().lpNorm<Eigen::Infinity>(), s.mu_a.coords().lpNorm<Eigen::Infinity>(),
                      M.ug.coords().lpNorm<Eigen::Infinity>(), pu.coords().lpNorm<Eigen::Infinity>(),
                      s.mu_u.coords().lpNorm<Eigen::Infinity>()});
  return e;
}

void check_so3_radius(const ModelSpec& model, const Vec& z, int k) {
  int off = 0;
  for (Group g : {model.ga, model.gu}) {
    const std::vector<Group> leaves = g.kind() == Group::Kind::kProduct ? g.factors() : std::vector<Group>{g};
    for (Group leaf : leaves) {
      if (leaf.kind() == Group::Kind::kSO3 && z.segment(off, 3).norm() >= std::numbers::pi - 1e-6) {
        std::ostringstream os;
        os << "step " << k << ": increment rotation reached pi; step too large";
        throw DomainError(os.str());
      }
      off += leaf.dim();
    }
  }
}

}  // namespace

StepResult step_hamilton(const ModelSpec& model, const ProductState& s, const CoAlgebraVector& u_k,
                         const CoAlgebraVector& u_next, const Vec* guess, int k, const StepOptions& opt) {
  require_same_group(model.ga, s.ga.group(), "step_hamilton (g_a)");
  require_same_group(model.gu, s.gu.group(), "step_hamilton (g_u)");
  require_same_group(model.ga, u_k.group(), "step_hamilton (u_k)");
  require_same_group(model.ga, u_next.group(), "step_hamilton (u_k+1)");
  const int n = model.ga.dim() + model.gu.dim();
  const double h = model.h;
  const CoAlgebraVector u_minus = 0.5 * h * u_k;
  const CoAlgebraVector u_plus = 0.5 * h * u_next;

  Vec z = guess ? *guess : Vec(Vec::Zero(n));
  if (z.size() != n) throw UsageError("step_hamilton: guess has wrong size");

  InnerEval e = inner_residual(model, s, z, u_minus);
  int it = 0;
  bool polished = false;
  constexpr double kRoundoff = 64.0 * std::numeric_limits<double>::epsilon();
  for (;;) {
    const bool small = e.norm <= std::max(opt.tol, kRoundoff * e.scale);
    if (small && polished) break;
    if (it >= opt.max_iters) {
      if (small) break;
      std::ostringstream os;
      os << "step " << k << ": implicit solve did not converge in " << opt.max_iters
         << " iterations (residual " << e.norm << ")";
      throw StepFailure(os.str(), k, e.norm);
    }
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
      Vec zp = z, zm = z;
      zp(j) += opt.fd_eps;
      zm(j) -= opt.fd_eps;
      J.col(j) = (inner_residual(model, s, zp, u_minus).r - inner_residual(model, s, zm, u_minus).r) /
                 (2.0 * opt.fd_eps);
    }
    const Vec dz = J.partialPivLu().solve(-e.r);
    Vec z_new = z + dz;
    check_so3_radius(model, z_new, k);
    InnerEval e_new = inner_residual(model, s, z_new, u_minus);
    ++it;
    if (small) {
      // One extra iteration past tolerance pulls the root down to roundoff so
      // that outer finite differences see a smooth map.
      if (e_new.norm <= e.norm) {
        z = z_new;
        e = e_new;
      }
      polished = true;
      continue;
    }
    if (!std::isfinite(e_new.norm)) {
      std::ostringstream os;
      os << "step " << k << ": implicit solve diverged";
      throw StepFailure(os.str(), k, e_new.norm);
    }
    z = z_new;
    e = e_new;
  }

  StepResult out;
  out.f = increment_from_coords(model, z);
  out.z = z;
  out.residual = e.norm;
  out.iterations = it;
  auto [mu_a, mu_u] = momentum_update(model, s, out.f, u_minus, u_plus);
  out.next = {compose(s.ga, out.f.a), compose(s.gu, out.f.u), mu_a, mu_u};
  return out;
}

Trajectory simulate(const ModelSpec& model, const ProductState& s0, const std::vector<CoAlgebraVector>& controls,
                    int N, const StepOptions& opt) {
  if (N < 0) throw UsageError("simulate: negative horizon");
  if (static_cast<int>(controls.size()) < N + 1) {
    throw UsageError("simulate: needs N+1 control samples u_0..u_N");
  }
  Trajectory t;
  t.h = model.h;
  t.states.reserve(N + 1);
  t.increments.reserve(N);
  t.step_residuals.reserve(N);
  t.controls.assign(controls.begin(), controls.begin() + N + 1);
  t.states.push_back(s0);
  Vec guess;
  for (int k = 0; k < N; ++k) {
    StepResult r = step_hamilton(model, t.states.back(), controls[k], controls[k + 1], k ? &guess : nullptr, k, opt);
    guess = r.z;
    t.increments.push_back(r.f);
    t.step_residuals.push_back(r.residual);
    t.states.push_back(std::move(r.next));
  }
  return t;
}

ProductState legendre_minus(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                            const CoAlgebraVector& u_minus) {
  const FirstDerivs M = first_derivs(model, g, f);
  return {g.a, g.u, -M.ag + coAd(inverse(f.a), M.af) - u_minus, -M.ug + coAd(inverse(f.u), M.uf)};
}

ProductState legendre_plus(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                           const CoAlgebraVector& u_plus) {
  const FirstDerivs M = first_derivs(model, g, f);
  return {compose(g.a, f.a), compose(g.u, f.u), M.af + u_plus, M.uf};
}

std::pair<CoAlgebraVector, CoAlgebraVector> el_residual(const ModelSpec& model, const FactorPair& g_prev,
                                                        const FactorPair& f_prev, const FactorPair& g_k,
                                                        const FactorPair& f_k, const CoAlgebraVector& u_plus_prev,
                                                        const CoAlgebraVector& u_minus_k) {
  const FirstDerivs Mp = first_derivs(model, g_prev, f_prev);
  const FirstDerivs Mk = first_derivs(model, g_k, f_k);
  return {Mp.af + Mk.ag - coAd(inverse(f_k.a), Mk.af) + u_plus_prev + u_minus_k,
          Mp.uf + Mk.ug - coAd(inverse(f_k.u), Mk.uf)};
}

}  // namespace dmoc
