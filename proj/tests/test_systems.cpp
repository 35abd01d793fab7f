#include <doctest.h>

#include <numbers>

#include "dmoc/systems.hpp"
#include "support.hpp"

using namespace dmoc;
using namespace dmoc::testing;

TEST_CASE("default parameters") {
  const BallBeamParams b;
  CHECK(b.m_b == 0.5);
  CHECK(b.I_r == 6.0);
  CHECK(b.g == 9.8);
  CHECK(b.h == 0.01);
  const CartPoleParams c;
  CHECK(c.m_c == 0.5);
  CHECK(c.m_b == 0.1);
  CHECK(c.l == 0.1);
  CHECK(c.g == 9.8);
  CHECK(c.h == 0.01);

  BallBeamParams bad;
  bad.I_r = -1.0;
  CHECK_THROWS_AS(ball_beam_model(bad), UsageError);
  CartPoleParams bad_h;
  bad_h.h = 0.0;
  CHECK_THROWS_AS(cart_pole_model(bad_h), UsageError);
}

TEST_CASE("model factors and labels") {
  const ModelSpec bb = ball_beam_model({});
  CHECK(bb.ga.kind() == Group::Kind::kCircle);
  CHECK(bb.gu.kind() == Group::Kind::kRealLine);
  CHECK(bb.label_a == "theta");
  const ModelSpec cp = cart_pole_model({});
  CHECK(cp.ga.kind() == Group::Kind::kRealLine);
  CHECK(cp.gu.kind() == Group::Kind::kCircle);
  CHECK(cp.label_u == "theta");
}

TEST_CASE("make_model") {
  const ModelSpec m = make_model("cart_pole", {{"l", 0.2}});
  CHECK(m.params.at("l") == 0.2);
  CHECK(m.params.at("m_c") == 0.5);
  CHECK_THROWS_AS(make_model("cart_pole", {{"I_r", 1.0}}), UsageError);
  CHECK_THROWS_AS(make_model("double_pendulum", {}), UsageError);
  CHECK(model_names() == std::vector<std::string>{"ball_beam", "cart_pole"});
}

TEST_CASE("benchmark cases") {
  constexpr double deg = std::numbers::pi / 180.0;
  const std::vector<BenchmarkCase> cases = benchmark_cases();
  REQUIRE(cases.size() == 4);
  for (const BenchmarkCase& c : cases) {
    CHECK_NOTHROW(c.problem.validate());
    CHECK(c.problem.N == 1000);
    CHECK(c.problem.model.h == 0.01);
    CHECK(c.problem.s0.mu_a.norm() == 0.0);
    CHECK(c.problem.s0.mu_u.norm() == 0.0);
    CHECK(c.problem.sf.ga.scalar() == 0.0);
    CHECK(c.problem.sf.gu.scalar() == 0.0);
    CHECK(c.problem.sf.mu_a.norm() == 0.0);
    CHECK(c.problem.sf.mu_u.norm() == 0.0);
  }
  const BenchmarkCase b1 = benchmark_case("bb_case1");
  CHECK(b1.problem.s0.ga.angle() == 0.0);
  CHECK(b1.problem.s0.gu.scalar() == 0.5);
  const BenchmarkCase b2 = benchmark_case("bb_case2");
  CHECK(b2.problem.s0.ga.angle() == doctest::Approx(18 * deg).epsilon(1e-15));
  CHECK(b2.problem.s0.gu.scalar() == 0.5);
  const BenchmarkCase c1 = benchmark_case("cp_case1");
  CHECK(c1.problem.s0.ga.scalar() == 2.0);
  CHECK(c1.problem.s0.gu.angle() == doctest::Approx(60 * deg).epsilon(1e-15));
  const BenchmarkCase c2 = benchmark_case("cp_case2");
  CHECK(c2.theta0_deg == -45.0);
  CHECK(c2.problem.s0.gu.angle() == doctest::Approx(-45 * deg).epsilon(1e-15));
  CHECK_THROWS_AS(benchmark_case("bb_case3"), UsageError);
}

TEST_CASE("gravity continuation") {
  const ModelSpec bb = ball_beam_model({});
  const ModelSpec half = with_gravity_scale(bb, 0.5);
  CHECK(half.params.at("g") == 4.9);
  const FactorPair g{GroupElement::angle(std::numbers::pi / 2), GroupElement::real(1.0)};
  const FactorPair still{GroupElement::angle(0), GroupElement::real(0)};
  CHECK(eval_lagrangian(half, g, still) == doctest::Approx(-0.0245).epsilon(1e-14));
}

TEST_CASE("scalar_state") {
  const ModelSpec cp = cart_pole_model({});
  const ProductState s = scalar_state(cp, 1.5, 0.25, 0.1, -0.2);
  CHECK(s.ga.scalar() == 1.5);
  CHECK(s.gu.angle() == 0.25);
  CHECK(s.mu_a.coords()(0) == 0.1);
  CHECK(s.mu_u.coords()(0) == -0.2);
  CHECK_THROWS_AS(scalar_state(toy_so3_model(), 0, 0), UsageError);
}
