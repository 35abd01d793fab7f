#include <doctest.h>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "dmoc/integrator.hpp"
#include "dmoc/systems.hpp"
#include "support.hpp"

using namespace dmoc;
using namespace dmoc::testing;

namespace {

std::vector<CoAlgebraVector> zero_controls(const ModelSpec& m, int N) {
  return std::vector<CoAlgebraVector>(N + 1, CoAlgebraVector::zero(m.ga));
}

std::vector<CoAlgebraVector> random_controls(const ModelSpec& m, int N, double scale) {
  std::vector<CoAlgebraVector> u;
  for (int k = 0; k <= N; ++k) u.push_back(random_coalgebra(m.ga, scale));
  return u;
}

/// Continuous cart-pole Hamiltonian at (xi, theta) with momenta (p_xi, p_theta).
double cart_pole_energy(const CartPoleParams& p, const ProductState& s) {
  const double c = std::cos(s.gu.angle());
  Eigen::Matrix2d M;
  M << p.m_b + p.m_c, -p.m_b * p.l * c, -p.m_b * p.l * c, p.m_b * p.l * p.l;
  const Eigen::Vector2d mom(s.mu_a.coords()(0), s.mu_u.coords()(0));
  return 0.5 * mom.dot(M.inverse() * mom) + p.m_b * p.g * p.l * c;
}

}  // namespace

TEST_CASE("ball-beam step from rest") {
  const ModelSpec bb = ball_beam_model({});
  const CoAlgebraVector zero = CoAlgebraVector::zero(bb.ga);
  const StepResult eq = step_hamilton(bb, scalar_state(bb, 0, 0), zero, zero);
  CHECK(eq.f.a.angle() == 0.0);
  CHECK(eq.f.u.scalar() == 0.0);
  CHECK(eq.next.mu_a.norm() == 0.0);
  CHECK(eq.next.mu_u.norm() == 0.0);

  const double m_b = 0.5, I_r = 6.0, g = 9.8, h = 0.01, xi0 = 0.5;
  const StepResult r = step_hamilton(bb, scalar_state(bb, 0, xi0), zero, zero);
  const double dth = -m_b * g * h * h * xi0 / (I_r + m_b * xi0 * xi0);
  CHECK(r.f.a.angle() == doctest::Approx(dth).epsilon(1e-11));
  CHECK(r.f.u.scalar() == doctest::Approx(xi0 * dth * dth).epsilon(1e-6));
  CHECK(r.residual <= 1e-12);
}

TEST_CASE("simulate") {
  const ModelSpec bb = ball_beam_model({});
  const Trajectory still = simulate(bb, scalar_state(bb, 0, 0), zero_controls(bb, 50), 50);
  for (const ProductState& s : still.states) {
    CHECK(s.ga.angle() == 0.0);
    CHECK(s.gu.scalar() == 0.0);
  }

  const Trajectory tr = simulate(bb, scalar_state(bb, 0, 0.5), zero_controls(bb, 1000), 1000);
  REQUIRE(tr.states.size() == 1001);
  CHECK(tr.states.back().gu.scalar() > 0.5);
  for (int k = 1; k <= 100; ++k) CHECK(tr.states[k].gu.scalar() > tr.states[k - 1].gu.scalar());
  CHECK(*std::max_element(tr.step_residuals.begin(), tr.step_residuals.end()) <= 1e-12);
}

TEST_CASE("cart momentum is conserved without force") {
  const ModelSpec cp = cart_pole_model({});
  const int N = 10000;
  const Trajectory tr = simulate(cp, scalar_state(cp, 2.0, 0.4, 0.03, -0.002), zero_controls(cp, N), N);
  double drift = 0.0;
  for (const ProductState& s : tr.states) drift = std::max(drift, std::abs(s.mu_a.coords()(0) - 0.03));
  CHECK(drift <= 1e-13);

  const StepResult r = step_hamilton(cp, scalar_state(cp, -0.3, 1.1, 0.2, 0.01), CoAlgebraVector::zero(cp.ga),
                                     CoAlgebraVector::zero(cp.ga));
  CHECK(r.next.mu_a.coords()(0) == 0.2);
}

TEST_CASE("energy of the unforced cart-pole does not drift") {
  const CartPoleParams p;
  const ModelSpec cp = cart_pole_model(p);
  const int N = 10000;
  const Trajectory tr = simulate(cp, scalar_state(cp, 0.0, 0.5), zero_controls(cp, N), N);
  const double E0 = cart_pole_energy(p, tr.states[0]);
  double short_dev = 0.0, long_dev = 0.0;
  for (int k = 0; k <= N; ++k) {
    const double d = std::abs(cart_pole_energy(p, tr.states[k]) - E0);
    if (k <= 100) short_dev = std::max(short_dev, d);
    long_dev = std::max(long_dev, d);
  }
  CHECK(short_dev > 0.0);
  CHECK(long_dev <= 10.0 * short_dev);
}

TEST_CASE("forward then time-reversed returns to the start") {
  const ModelSpec bb = ball_beam_model({});
  const int N = 100;
  const ProductState s0 = scalar_state(bb, 0.1, 0.5, 0.02, -0.01);
  const Trajectory fwd = simulate(bb, s0, zero_controls(bb, N), N);
  ProductState back = fwd.states.back();
  back.mu_a = -back.mu_a;
  back.mu_u = -back.mu_u;
  const ModelSpec rev = time_reversed(bb);
  const Trajectory bwd = simulate(rev, back, zero_controls(rev, N), N);
  const ProductState& end = bwd.states.back();
  CHECK(std::abs(end.ga.angle() - s0.ga.angle()) <= 1e-6);
  CHECK(std::abs(end.gu.scalar() - s0.gu.scalar()) <= 1e-6);
  CHECK(std::abs(end.mu_a.coords()(0) + s0.mu_a.coords()(0)) <= 1e-6);
}

TEST_CASE("Euler-Lagrange residual along simulated trajectories") {
  for (const ModelSpec& m : {ball_beam_model({}), cart_pole_model({}), toy_so3_model()}) {
    const int N = 60;
    // finite-difference derivatives (the SO(3) toy) are only good to ~1e-10
    const bool fd_model = !m.first;
    StepOptions opt;
    if (fd_model) opt.tol = 1e-9;
    const Trajectory tr = simulate(m, ProductState{random_element(m.ga, 0.5), random_element(m.gu, 0.5),
                                                   random_coalgebra(m.ga, 0.05), random_coalgebra(m.gu, 0.05)},
                                   random_controls(m, N, 0.5), N, opt);
    double worst = 0.0;
    for (int k = 1; k < N; ++k) {
      const CoAlgebraVector up = (0.5 * m.h) * tr.controls[k], um = (0.5 * m.h) * tr.controls[k];
      const auto [ra, ru] = el_residual(m, tr.states[k - 1].config(), tr.increments[k - 1], tr.states[k].config(),
                                        tr.increments[k], up, um);
      worst = std::max({worst, ra.coords().cwiseAbs().maxCoeff(), ru.coords().cwiseAbs().maxCoeff()});
    }
    INFO(m.name);
    CHECK(worst <= (fd_model ? 1e-8 : 1e-10));

    // moving one interior configuration breaks the equations
    const int k = N / 2;
    FactorPair gk = tr.states[k].config();
    gk.a = compose(gk.a, exp(AlgebraVector::basis(m.ga, 0) * 1e-3));
    const FactorPair gp = tr.states[k - 1].config(), gn = tr.states[k + 1].config();
    const FactorPair fp{compose(inverse(gp.a), gk.a), compose(inverse(gp.u), gk.u)};
    const FactorPair fk{compose(inverse(gk.a), gn.a), compose(inverse(gk.u), gn.u)};
    const CoAlgebraVector hu = (0.5 * m.h) * tr.controls[k];
    const auto [pa, pu] = el_residual(m, gp, fp, gk, fk, hu, hu);
    CHECK(std::max(pa.norm(), pu.norm()) > 1e-6);
  }
}

TEST_CASE("Euler-Lagrange residual expands to the printed equations") {
  const double h = 0.01;
  {
    const double m_b = 0.5, I_r = 6.0, g = 9.8;
    const ModelSpec bb = ball_beam_model({});
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double th0 = uniform(-0.5, 0.5), x0 = uniform(-1, 1), dth0 = uniform(-0.02, 0.02),
                   dx0 = uniform(-0.02, 0.02), dth = uniform(-0.02, 0.02), dx = uniform(-0.02, 0.02);
      const double u = uniform(-3, 3);
      const double th = th0 + dth0, x = x0 + dx0;
      const auto [ra, ru] = el_residual(
          bb, {GroupElement::angle(th0), GroupElement::real(x0)}, {GroupElement::angle(dth0), GroupElement::real(dx0)},
          {GroupElement::angle(th), GroupElement::real(x)}, {GroupElement::angle(dth), GroupElement::real(dx)},
          CoAlgebraVector::scalar(bb.ga, 0.5 * h * u), CoAlgebraVector::scalar(bb.ga, 0.5 * h * u));
      const double a = I_r / h * (dth0 - dth) + m_b / h * (x0 * x0 * dth0 - x * x * dth) -
                       m_b * h * g * x * std::cos(th) + h * u;
      const double b = m_b / h * (dx0 - dx) + m_b / h * (x * dth * dth) - m_b * h * g * std::sin(th);
      worst = std::max({worst, std::abs(ra.coords()(0) - a), std::abs(ru.coords()(0) - b)});
    }
    CHECK(worst <= 1e-10);
  }
  {
    const double m_b = 0.1, m_c = 0.5, l = 0.1, g = 9.8;
    const ModelSpec cp = cart_pole_model({});
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const double x0 = uniform(-2, 2), th0 = uniform(-1, 1), dx0 = uniform(-0.05, 0.05),
                   dth0 = uniform(-0.05, 0.05), dx = uniform(-0.05, 0.05), dth = uniform(-0.05, 0.05);
      const double F = uniform(-3, 3);
      const double x = x0 + dx0, th = th0 + dth0;
      const auto [ra, ru] = el_residual(
          cp, {GroupElement::real(x0), GroupElement::angle(th0)}, {GroupElement::real(dx0), GroupElement::angle(dth0)},
          {GroupElement::real(x), GroupElement::angle(th)}, {GroupElement::real(dx), GroupElement::angle(dth)},
          CoAlgebraVector::scalar(cp.ga, 0.5 * h * F), CoAlgebraVector::scalar(cp.ga, 0.5 * h * F));
      const double ea = (m_b + m_c) / h * (dx0 - dx) + m_b * l / h * (dth * std::cos(th) - dth0 * std::cos(th0)) + h * F;
      const double eu = m_b * l * l / h * (dth0 - dth) + m_b * l / h * (dx * std::cos(th) - dx0 * std::cos(th0)) +
                        m_b * l / h * dx * dth * std::sin(th) + m_b * g * l * h * std::sin(th);
      worst = std::max({worst, std::abs(ra.coords()(0) - ea), std::abs(ru.coords()(0) - eu)});
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("discrete Legendre transforms") {
  const ModelSpec bb = ball_beam_model({});
  const Trajectory tr = simulate(bb, scalar_state(bb, 0.2, 0.4, 0.01, 0.02), random_controls(bb, 20, 2.0), 20);
  for (int k = 0; k < 20; ++k) {
    const ProductState lm = legendre_minus(bb, tr.states[k].config(), tr.increments[k], (0.5 * bb.h) * tr.controls[k]);
    CHECK((lm.mu_a.coords() - tr.states[k].mu_a.coords()).norm() <= 1e-12);
    CHECK((lm.mu_u.coords() - tr.states[k].mu_u.coords()).norm() <= 1e-12);
  }

  const double m_b = 0.5, I_r = 6.0, h = 0.01;
  for (int t = 0; t < 50; ++t) {
    const double th = uniform(-1, 1), x = uniform(-1, 1), dth = uniform(-0.02, 0.02), dx = uniform(-0.02, 0.02);
    const double up = uniform(-0.05, 0.05);
    const ProductState lp = legendre_plus(bb, {GroupElement::angle(th), GroupElement::real(x)},
                                          {GroupElement::angle(dth), GroupElement::real(dx)},
                                          CoAlgebraVector::scalar(bb.ga, up));
    CHECK(lp.mu_a.coords()(0) == doctest::Approx((I_r / h + m_b * x * x / h) * dth + up).epsilon(1e-13));
    CHECK(lp.mu_u.coords()(0) == doctest::Approx(m_b / h * dx).epsilon(1e-13));
    CHECK(lp.ga.angle() == doctest::Approx(th + dth).epsilon(1e-15));
  }

  ModelSpec z = toy_rr_model();
  z.lagrangian = [](const FactorPair&, const FactorPair&) { return 0.0; };
  z.first = nullptr;
  const auto [g, f] = random_window(z);
  const CoAlgebraVector um = CoAlgebraVector::scalar(z.ga, 0.3), up = CoAlgebraVector::scalar(z.ga, -0.7);
  const ProductState m1 = legendre_minus(z, g, f, um), m2 = legendre_plus(z, g, f, up);
  CHECK(std::abs(m1.mu_a.coords()(0) + 0.3) <= 1e-9);
  CHECK(std::abs(m2.mu_a.coords()(0) + 0.7) <= 1e-9);
  CHECK(std::abs(m1.mu_u.coords()(0)) <= 1e-9);
  CHECK(std::abs(m2.mu_u.coords()(0)) <= 1e-9);
}
