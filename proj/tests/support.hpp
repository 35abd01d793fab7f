#pragma once

// Shared helpers for the test binaries: seeded random inputs, small models
// and the augmented-cost oracle.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dmoc/optimal_control.hpp"
#include "dmoc/systems.hpp"

namespace dmoc::testing {

inline std::mt19937& rng() {
  static std::mt19937 gen(20240611u);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline Vec random_vec(int n, double scale = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(-scale, scale);
  return v;
}

inline AlgebraVector random_algebra(Group g, double scale = 1.0) { return AlgebraVector(g, random_vec(g.dim(), scale)); }
inline CoAlgebraVector random_coalgebra(Group g, double scale = 1.0) {
  return CoAlgebraVector(g, random_vec(g.dim(), scale));
}
inline GroupElement random_element(Group g, double scale = 1.0) { return exp(random_algebra(g, scale)); }

/// Random pair (g, f) on a model's factors with increments of size ~ step.
inline std::pair<FactorPair, FactorPair> random_window(const ModelSpec& m, double step = 0.05) {
  FactorPair g{random_element(m.ga, 1.0), random_element(m.gu, 1.0)};
  FactorPair f{random_element(m.ga, step), random_element(m.gu, step)};
  return {g, f};
}

inline MultiplierSet random_multipliers(const ModelSpec& m, int N, double scale = 1.0) {
  MultiplierSet s;
  for (int k = 0; k < N; ++k) {
    s.lam1.push_back(random_algebra(m.ga, scale));
    s.lam2.push_back(random_coalgebra(m.ga, scale));
    s.lam3.push_back(random_algebra(m.ga, scale));
    s.lam4.push_back(random_algebra(m.gu, scale));
    s.lam5.push_back(random_coalgebra(m.gu, scale));
    s.lam6.push_back(random_algebra(m.gu, scale));
  }
  return s;
}

/// Coupled oscillator on R x R with a nonlinear coupling, analytic derivatives
/// left to finite differences.
inline ModelSpec toy_rr_model(double h = 0.1) {
  ModelSpec m;
  m.name = "toy_rr";
  m.ga = Group::real_line(1);
  m.gu = Group::real_line(1);
  m.h = h;
  m.lagrangian = [h](const FactorPair& g, const FactorPair& f) {
    const double x = g.a.scalar(), y = g.u.scalar(), dx = f.a.scalar(), dy = f.u.scalar();
    return (1.5 * dx * dx + 0.8 * dy * dy + 0.3 * dx * dy * std::cos(y)) / (2 * h) -
           h * (0.5 * x * x + 2.0 * (1 - std::cos(y)) + 0.4 * x * std::sin(y));
  };
  m.first = [h](const FactorPair& g, const FactorPair& f) {
    const double x = g.a.scalar(), y = g.u.scalar(), dx = f.a.scalar(), dy = f.u.scalar();
    const Group ga = g.a.group(), gu = g.u.group();
    return FirstDerivs{CoAlgebraVector::scalar(ga, -h * (x + 0.4 * std::sin(y))),
                       CoAlgebraVector::scalar(ga, (3.0 * dx + 0.3 * dy * std::cos(y)) / (2 * h)),
                       CoAlgebraVector::scalar(gu, -0.3 * dx * dy * std::sin(y) / (2 * h) -
                                                       h * (2.0 * std::sin(y) + 0.4 * x * std::cos(y))),
                       CoAlgebraVector::scalar(gu, (1.6 * dy + 0.3 * dx * std::cos(y)) / (2 * h))};
  };
  return m;
}

/// Rigid body (actuated, SO(3)) carrying a point mass on a spring (R^1),
/// with an attitude-dependent potential. Derivatives by finite differences.
inline ModelSpec toy_so3_model(double h = 0.05) {
  ModelSpec m;
  m.name = "toy_so3";
  m.ga = Group::so3();
  m.gu = Group::real_line(1);
  m.h = h;
  const Eigen::Vector3d I(1.0, 1.4, 2.1);
  m.lagrangian = [h, I](const FactorPair& g, const FactorPair& f) {
    const Vec w = log(f.a).coords();
    const double x = g.u.scalar(), dx = f.u.scalar();
    const Eigen::Matrix3d R = g.a.rotation();
    double T = 0.0;
    for (int i = 0; i < 3; ++i) T += I(i) * w(i) * w(i);
    const double V = 3.0 * R(2, 2) + 0.5 * x * x + 0.7 * x * R(0, 2);
    return T / (2 * h) + 0.6 * dx * dx / (2 * h) - h * V;
  };
  return m;
}

/// Problem wrapper with the quadratic cost.
inline OcProblem toy_problem(const ModelSpec& m, int N, const ProductState& s0, const ProductState& sf) {
  OcProblem p;
  p.model = m;
  p.N = N;
  p.s0 = s0;
  p.sf = sf;
  p.cost = quadratic_control_cost();
  return p;
}

/// Augmented cost sum_k phi_d + J_d1..J_d6 written directly from the
/// Lagrangian's first derivatives, the group maps and the multipliers. The
/// configuration multipliers lam2 / lam5 here are the plain (unweighted) ones.
struct AugmentedCost {
  const OcProblem& p;

  double operator()(const std::vector<FactorPair>& g, const std::vector<FactorPair>& f,
                    const std::vector<CoAlgebraVector>& mu_a, const std::vector<CoAlgebraVector>& mu_u,
                    const std::vector<CoAlgebraVector>& u, const MultiplierSet& lam) const {
    const double h = p.model.h;
    double J = 0.0;
    for (int k = 0; k < p.N; ++k) {
      const FirstDerivs M = first_derivs(p.model, g[k], f[k]);
      J += p.cost.value(g[k], f[k], u[k]);
      const Vec ua = 0.5 * h * u[k].coords(), ua1 = 0.5 * h * u[k + 1].coords();
      // momentum matching
      const Vec r1 = M.ag.coords() - coAd(inverse(f[k].a), M.af).coords() + ua + mu_a[k].coords();
      const Vec r4 = M.ug.coords() - coAd(inverse(f[k].u), M.uf).coords() + mu_u[k].coords();
      J += lam.lam1[k].coords().dot(r1) + lam.lam4[k].coords().dot(r4);
      // configuration update
      const Vec c2 = log(compose(inverse(g[k].a), g[k + 1].a)).coords() - log(f[k].a).coords();
      const Vec c5 = log(compose(inverse(g[k].u), g[k + 1].u)).coords() - log(f[k].u).coords();
      J += lam.lam2[k].coords().dot(c2) + lam.lam5[k].coords().dot(c5);
      // momentum update
      const Vec r3 = mu_a[k + 1].coords() -
                     coAd(f[k].a, CoAlgebraVector(p.model.ga, mu_a[k].coords() + M.ag.coords() + ua)).coords() - ua1;
      const Vec r6 = mu_u[k + 1].coords() -
                     coAd(f[k].u, CoAlgebraVector(p.model.gu, mu_u[k].coords() + M.ug.coords())).coords();
      J += lam.lam3[k].coords().dot(r3) + lam.lam6[k].coords().dot(r6);
    }
    return J;
  }
};

/// Central difference of a scalar function of one real parameter.
inline double central(const std::function<double(double)>& fn, double eps) {
  return (fn(eps) - fn(-eps)) / (2.0 * eps);
}

/// Every adjoint, recursion and optimality residual on a random N-step window
/// compared with central differences of AugmentedCost in the matching
/// variable. Variations of f_k enter the cost with the opposite sign of the
/// adjoint_fa/fu residuals (those are written as lam2 - rhs). Returns the
/// worst |lib - fd| / max(|fd|, floor) and the entry where it occurred.
struct VariationalMismatch {
  double worst_rel = 0.0;
  std::string where;
  int compared = 0;
};

inline VariationalMismatch variational_mismatch(const ModelSpec& m, int N, double eps, double floor = 1e-6) {
  std::vector<FactorPair> g, f;
  std::vector<CoAlgebraVector> ma, mu, u;
  for (int k = 0; k <= N; ++k) {
    g.push_back({random_element(m.ga, 0.5), random_element(m.gu, 0.5)});
    ma.push_back(random_coalgebra(m.ga));
    mu.push_back(random_coalgebra(m.gu));
    u.push_back(random_coalgebra(m.ga));
  }
  for (int k = 0; k < N; ++k) f.push_back({random_element(m.ga, 0.1), random_element(m.gu, 0.1)});
  // keep g_{k+1} = g_k f_k so the log terms of the cost sit at their branch centre
  for (int k = 0; k < N; ++k) g[k + 1] = {compose(g[k].a, f[k].a), compose(g[k].u, f[k].u)};
  const OcProblem p = toy_problem(m, N, ProductState{g[0].a, g[0].u, ma[0], mu[0]},
                                  ProductState{g[N].a, g[N].u, ma[N], mu[N]});
  const MultiplierSet lam = random_multipliers(m, N);
  Trajectory t;
  t.h = m.h;
  for (int k = 0; k <= N; ++k) t.states.push_back({g[k].a, g[k].u, ma[k], mu[k]});
  t.controls = u;
  t.increments = f;
  t.step_residuals.assign(N, 0.0);
  const KktResidual R = assemble_kkt(p, t, lam);

  MultiplierSet plain = lam;
  for (int k = 0; k < N; ++k) {
    plain.lam2[k] = unweight_multiplier(log(f[k].a), lam.lam2[k]);
    plain.lam5[k] = unweight_multiplier(log(f[k].u), lam.lam5[k]);
  }
  const AugmentedCost J{p};
  VariationalMismatch out;
  auto record = [&](const ResidualSeries& s, int k, int i, double sign, double fd) {
    const double lib = sign * s.values[k - s.first_k](i);
    const double rel = std::abs(lib - fd) / std::max(std::abs(fd), floor);
    ++out.compared;
    if (rel >= out.worst_rel) {
      out.worst_rel = rel;
      out.where = s.name + "[" + std::to_string(k) + "](" + std::to_string(i) + ")";
    }
  };
  auto move_group = [&](auto pick, int k, int i, const Group& G, bool incr) {
    return central(
        [&](double e) {
          auto gg = g;
          auto ff = f;
          GroupElement& x = incr ? pick(ff[k]) : pick(gg[k]);
          x = compose(x, exp(e * AlgebraVector::basis(G, i)));
          return J(gg, ff, ma, mu, u, plain);
        },
        eps);
  };
  auto move_covec = [&](std::vector<CoAlgebraVector> v, int which, int k, int i) {
    return central(
        [&](double e) {
          auto x = v;
          Vec c = x[k].coords();
          c(i) += e;
          x[k] = CoAlgebraVector(x[k].group(), c);
          if (which == 0) return J(g, f, x, mu, u, plain);
          if (which == 1) return J(g, f, ma, x, u, plain);
          return J(g, f, ma, mu, x, plain);
        },
        eps);
  };
  auto A = [](FactorPair& q) -> GroupElement& { return q.a; };
  auto U = [](FactorPair& q) -> GroupElement& { return q.u; };
  for (int k = 1; k < N; ++k) {
    for (int i = 0; i < m.ga.dim(); ++i) record(R.adjoint_a, k, i, 1.0, move_group(A, k, i, m.ga, false));
    for (int i = 0; i < m.gu.dim(); ++i) record(R.adjoint_u, k, i, 1.0, move_group(U, k, i, m.gu, false));
    for (int i = 0; i < m.ga.dim(); ++i) record(R.lam3_rec, k, i, 1.0, move_covec(ma, 0, k, i));
    for (int i = 0; i < m.gu.dim(); ++i) record(R.lam6_rec, k, i, 1.0, move_covec(mu, 1, k, i));
  }
  for (int k = 0; k < N; ++k) {
    for (int i = 0; i < m.ga.dim(); ++i) record(R.adjoint_fa, k, i, -1.0, move_group(A, k, i, m.ga, true));
    for (int i = 0; i < m.gu.dim(); ++i) record(R.adjoint_fu, k, i, -1.0, move_group(U, k, i, m.gu, true));
    for (int i = 0; i < m.ga.dim(); ++i) record(R.optimality, k, i, 1.0, move_covec(u, 2, k, i));
  }
  for (int i = 0; i < m.ga.dim(); ++i) record(R.terminal_control, N, i, 1.0, move_covec(u, 2, N, i));
  return out;
}

/// Worst mismatch, |lib - printed| / max(1, |printed|), between the general
/// residual assembly and the hand-specialized multiplier equations of the
/// built-in models, evaluated on `count` random N-step windows. Both factor
/// groups are abelian so Ad = id and the ad* terms drop out. The printed
/// equations are written as "left - right" in the sign convention of the
/// corresponding residual family (the f-equations as lam2 - rhs).
inline double specialization_mismatch(const std::string& model_name, int count, int N = 4) {
  const bool bb = model_name == "ball_beam";
  const ModelSpec m = bb ? ball_beam_model({}) : cart_pole_model({});
  const double h = m.h;
  double worst = 0.0;
  auto cmp = [&](double lib, double printed) {
    worst = std::max(worst, std::abs(lib - printed) / std::max(1.0, std::abs(printed)));
  };
  for (int t = 0; t < count; ++t) {
    Trajectory tr;
    tr.h = h;
    ProductState s{random_element(m.ga, 1.0), random_element(m.gu, 1.0), random_coalgebra(m.ga),
                   random_coalgebra(m.gu)};
    for (int k = 0; k < N; ++k) {
      tr.states.push_back(s);
      const FactorPair f{random_element(m.ga, 0.05), random_element(m.gu, 0.05)};
      tr.increments.push_back(f);
      s = ProductState{compose(s.ga, f.a), compose(s.gu, f.u), random_coalgebra(m.ga), random_coalgebra(m.gu)};
    }
    tr.states.push_back(s);
    for (int k = 0; k <= N; ++k) tr.controls.push_back(random_coalgebra(m.ga, 3.0));
    tr.step_residuals.assign(N, 0.0);
    const OcProblem p = toy_problem(m, N, tr.states.front(), tr.states.back());
    const MultiplierSet lam = random_multipliers(m, N, 2.0);
    const KktResidual R = assemble_kkt(p, tr, lam);

    auto L = [&](const std::vector<AlgebraVector>& v, int k) { return v[k].coords()(0); };
    auto C = [&](const std::vector<CoAlgebraVector>& v, int k) { return v[k].coords()(0); };
    auto at = [](const ResidualSeries& r, int k) { return r.values[k - r.first_k](0); };
    for (int k = 0; k < N; ++k) {
      const double l1 = L(lam.lam1, k), l3 = L(lam.lam3, k), l4 = L(lam.lam4, k), l6 = L(lam.lam6, k);
      const double l2 = C(lam.lam2, k), l5 = C(lam.lam5, k), u = C(tr.controls, k);
      double fa, fu, ea = 0.0, eu = 0.0;
      if (bb) {
        const double m_b = 0.5, I_r = 6.0, g = 9.8;
        const double th = tr.states[k].ga.angle(), xi = tr.states[k].gu.scalar();
        const double dth = tr.increments[k].a.angle();
        ea = m_b * g * h * xi * std::sin(th) * (l1 - l3) - m_b * g * h * std::cos(th) * (l4 - l6);
        eu = m_b * g * h * std::cos(th) * (l3 - l1) - 2 * m_b / h * xi * dth * l1 + m_b / h * dth * dth * (l4 - l6);
        fa = -(I_r / h + m_b / h * xi * xi) * l1 + 2 * m_b / h * xi * dth * (l4 - l6);
        fu = -m_b / h * l4;
      } else {
        const double m_b = 0.1, m_c = 0.5, l = 0.1, g = 9.8;
        const double th = tr.states[k].gu.angle();
        const double dxi = tr.increments[k].a.scalar(), dth = tr.increments[k].u.angle();
        ea = 0.0;
        // gravity term with cos: the derivative of m_b h g l sin(theta)
        eu = -m_b * l / h * dth * std::sin(th) * l1 - m_b * l / h * dxi * std::sin(th) * l4 +
             m_b * l / h * dxi * dth * std::cos(th) * (l4 - l6) + m_b * h * g * l * std::cos(th) * (l4 - l6);
        fa = -(m_b + m_c) / h * l1 + m_b * l / h * dth * std::sin(th) * (l4 - l6) + m_b * l / h * std::cos(th) * l4;
        fu = m_b * l / h * std::cos(th) * l1 + m_b * l / h * dxi * std::sin(th) * (l4 - l6) - m_b * l * l / h * l4;
      }
      cmp(at(R.adjoint_fa, k), l2 - fa);
      cmp(at(R.adjoint_fu, k), l5 - fu);
      if (k == 0) {
        cmp(at(R.optimality, 0), u + h / 2 * l1 - h / 2 * l3);
        continue;
      }
      const double l3p = L(lam.lam3, k - 1), l6p = L(lam.lam6, k - 1);
      cmp(at(R.adjoint_a, k), ea - (-C(lam.lam2, k - 1) + l2));
      cmp(at(R.adjoint_u, k), eu - (-C(lam.lam5, k - 1) + l5));
      cmp(at(R.lam3_rec, k), l1 - l3 + l3p);
      cmp(at(R.lam6_rec, k), l4 - l6 + l6p);
      cmp(at(R.optimality, k), u + h / 2 * l1 - h / 2 * l3 - h / 2 * l3p);
    }
  }
  return worst;
}

/// Coefficients of z e^z / (e^z - 1) = sum_n b_n z^n from the Bernoulli
/// recurrence sum_{j<=n} C(n+1, j) B_j = 0 (B_1 = -1/2), with b_1 = +1/2.
inline std::vector<double> bernoulli_plus_over_factorial(int n_max) {
  std::vector<double> B(n_max + 1, 0.0);
  B[0] = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    double s = 0.0, c = 1.0;  // c = C(n+1, j)
    for (int j = 0; j < n; ++j) {
      s += c * B[j];
      c = c * (n + 1 - j) / (j + 1);
    }
    B[n] = -s / (n + 1);
  }
  std::vector<double> out(n_max + 1);
  double fact = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) fact *= n;
    out[n] = (n == 1 ? 0.5 : B[n]) / fact;
  }
  return out;
}

/// Truncated series sum_{n<terms} b_n ad_X^n v.
inline Vec dexpinv_series(const AlgebraVector& X, const AlgebraVector& v, int terms) {
  const std::vector<double> b = bernoulli_plus_over_factorial(terms);
  const Mat A = ad_matrix(X);
  Vec term = v.coords(), sum = Vec::Zero(v.dim());
  for (int n = 0; n < terms; ++n) {
    sum += b[n] * term;
    term = A * term;
  }
  return sum;
}

/// Worst absolute error of the four Ad-map derivative identities, central
/// differences with step eps over `count` random SO(3) instances.
struct AdIdentityErrors {
  double ad_right = 0, ad_inverse = 0, coad_right = 0, coad_inverse = 0;
  double max() const { return std::max(std::max(ad_right, ad_inverse), std::max(coad_right, coad_inverse)); }
};

inline AdIdentityErrors ad_identity_errors(int count, double eps) {
  const Group G = Group::so3();
  AdIdentityErrors e;
  for (int t = 0; t < count; ++t) {
    const GroupElement g = random_element(G, 2.0);
    const AlgebraVector eta = random_algebra(G), xi = random_algebra(G);
    const CoAlgebraVector alpha = random_coalgebra(G);
    auto moved = [&](double s) { return compose(g, exp(s * eta)); };
    const Vec d1 = (Ad(moved(eps), xi).coords() - Ad(moved(-eps), xi).coords()) / (2 * eps);
    const Vec d2 =
        (Ad(inverse(moved(eps)), xi).coords() - Ad(inverse(moved(-eps)), xi).coords()) / (2 * eps);
    const Vec d3 = (coAd(moved(eps), alpha).coords() - coAd(moved(-eps), alpha).coords()) / (2 * eps);
    const Vec d4 =
        (coAd(inverse(moved(eps)), alpha).coords() - coAd(inverse(moved(-eps)), alpha).coords()) / (2 * eps);
    const Vec r1 = ad(Ad(g, eta), Ad(g, xi)).coords();
    const Vec r2 = ad(Ad(inverse(g), xi), eta).coords();
    const Vec r3 = coAd(g, coad(Ad(g, eta), alpha)).coords();
    const Vec r4 = -coAd(inverse(g), coad(eta, alpha)).coords();
    e.ad_right = std::max(e.ad_right, (d1 - r1).cwiseAbs().maxCoeff());
    e.ad_inverse = std::max(e.ad_inverse, (d2 - r2).cwiseAbs().maxCoeff());
    e.coad_right = std::max(e.coad_right, (d3 - r3).cwiseAbs().maxCoeff());
    e.coad_inverse = std::max(e.coad_inverse, (d4 - r4).cwiseAbs().maxCoeff());
  }
  return e;
}

/// Third-order BCH truncation X + Y + [X,Y]/2 + ([X,[X,Y]] + [Y,[Y,X]])/12.
inline AlgebraVector bch3(const AlgebraVector& X, const AlgebraVector& Y) {
  const AlgebraVector XY = ad(X, Y);
  return X + Y + 0.5 * XY + (1.0 / 12.0) * (ad(X, XY) + ad(Y, ad(Y, X)));
}

/// Largest |log(exp X exp Y) - bch3(X, Y)| / max(|X|, |Y|)^4 over random
/// pairs with norms up to r.
inline double bch_fourth_order_constant(int count, double r) {
  const Group G = Group::so3();
  double C = 0.0;
  for (int t = 0; t < count; ++t) {
    Vec x = random_vec(3), y = random_vec(3);
    x *= uniform(0.2 * r, r) / x.norm();
    y *= uniform(0.2 * r, r) / y.norm();
    const AlgebraVector X(G, x), Y(G, y);
    const double err = (log(compose(exp(X), exp(Y))) - bch3(X, Y)).norm();
    C = std::max(C, err / std::pow(std::max(x.norm(), y.norm()), 4));
  }
  return C;
}

}  // namespace dmoc::testing
