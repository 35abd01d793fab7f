#include "dmoc/systems.hpp"

#include <cmath>
#include <numbers>

namespace dmoc {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string("parameter ") + name + " must be positive");
}

CoAlgebraVector scalar_co(Group g, double v) { return CoAlgebraVector::scalar(g, v); }

void set(SecondDerivOps& ops, std::array<std::array<bool, 4>, 4>& known, Slot x, Slot y, double v) {
  ops.block(x, y)(0, 0) = v;
  known[static_cast<int>(x)][static_cast<int>(y)] = true;
}

}  // namespace

void BallBeamParams::validate() const {
  require_positive(m_b, "m_b");
  require_positive(I_r, "I_r");
  require_positive(g, "g");
  require_positive(h, "h");
}

void CartPoleParams::validate() const {
  require_positive(m_c, "m_c");
  require_positive(m_b, "m_b");
  require_positive(l, "l");
  require_positive(g, "g");
  require_positive(h, "h");
}

ModelSpec ball_beam_model(const BallBeamParams& p) {
  p.validate();
  ModelSpec m;
  m.name = "ball_beam";
  m.ga = Group::circle();
  m.gu = Group::real_line(1);
  m.h = p.h;
  m.params = {{"m_b", p.m_b}, {"I_r", p.I_r}, {"g", p.g}, {"h", p.h}};
  m.label_a = "theta";
  m.label_u = "xi";
  const double mb = p.m_b, Ir = p.I_r, g = p.g, h = p.h;

  m.lagrangian = [=](const FactorPair& q, const FactorPair& f) {
    const double th = q.a.scalar(), xi = q.u.scalar(), dth = f.a.scalar(), dxi = f.u.scalar();
    return Ir * dth * dth / (2 * h) + mb * (dxi * dxi + xi * xi * dth * dth) / (2 * h) - mb * h * g * xi * std::sin(th);
  };
  m.first = [=](const FactorPair& q, const FactorPair& f) {
    const double th = q.a.scalar(), xi = q.u.scalar(), dth = f.a.scalar(), dxi = f.u.scalar();
    const Group ga = q.a.group(), gu = q.u.group();
    return FirstDerivs{scalar_co(ga, -mb * g * h * xi * std::cos(th)),
                       scalar_co(ga, (Ir / h + mb * xi * xi / h) * dth),
                       scalar_co(gu, (mb / h) * xi * dth * dth - mb * g * h * std::sin(th)),
                       scalar_co(gu, (mb / h) * dxi)};
  };
  m.second = [=](const FactorPair& q, const FactorPair& f, SecondDerivOps& o,
                 std::array<std::array<bool, 4>, 4>& known) {
    const double th = q.a.scalar(), xi = q.u.scalar(), dth = f.a.scalar();
    using S = Slot;
    set(o, known, S::kAG, S::kAG, mb * g * h * xi * std::sin(th));
    set(o, known, S::kAG, S::kAF, 0.0);
    set(o, known, S::kAG, S::kUG, -mb * g * h * std::cos(th));
    set(o, known, S::kAG, S::kUF, 0.0);
    set(o, known, S::kAF, S::kAG, 0.0);
    set(o, known, S::kAF, S::kAF, Ir / h + mb * xi * xi / h);
    set(o, known, S::kAF, S::kUG, 2 * (mb / h) * xi * dth);
    set(o, known, S::kAF, S::kUF, 0.0);
    set(o, known, S::kUG, S::kAG, -mb * g * h * std::cos(th));
    set(o, known, S::kUG, S::kAF, 2 * (mb / h) * xi * dth);
    set(o, known, S::kUG, S::kUG, (mb / h) * dth * dth);
    set(o, known, S::kUG, S::kUF, 0.0);
    set(o, known, S::kUF, S::kAG, 0.0);
    set(o, known, S::kUF, S::kAF, 0.0);
    set(o, known, S::kUF, S::kUG, 0.0);
    set(o, known, S::kUF, S::kUF, mb / h);
  };
  return m;
}

ModelSpec cart_pole_model(const CartPoleParams& p) {
  p.validate();
  ModelSpec m;
  m.name = "cart_pole";
  m.ga = Group::real_line(1);
  m.gu = Group::circle();
  m.h = p.h;
  m.params = {{"m_c", p.m_c}, {"m_b", p.m_b}, {"l", p.l}, {"g", p.g}, {"h", p.h}};
  m.label_a = "xi";
  m.label_u = "theta";
  const double mc = p.m_c, mb = p.m_b, l = p.l, g = p.g, h = p.h;

  m.lagrangian = [=](const FactorPair& q, const FactorPair& f) {
    const double th = q.u.scalar(), dxi = f.a.scalar(), dth = f.u.scalar();
    return (mb + mc) * dxi * dxi / (2 * h) + mb * l * l * dth * dth / (2 * h) -
           (mb / h) * l * dxi * dth * std::cos(th) - mb * h * g * l * std::cos(th);
  };
  m.first = [=](const FactorPair& q, const FactorPair& f) {
    const double th = q.u.scalar(), dxi = f.a.scalar(), dth = f.u.scalar();
    const Group ga = q.a.group(), gu = q.u.group();
    const double c = std::cos(th), s = std::sin(th);
    return FirstDerivs{scalar_co(ga, 0.0),
                       scalar_co(ga, ((mb + mc) / h) * dxi - (mb * l / h) * dth * c),
                       scalar_co(gu, (mb * l / h) * dxi * dth * s + mb * h * g * l * s),
                       scalar_co(gu, (mb * l * l / h) * dth - (mb * l / h) * dxi * c)};
  };
  m.second = [=](const FactorPair& q, const FactorPair& f, SecondDerivOps& o,
                 std::array<std::array<bool, 4>, 4>& known) {
    const double th = q.u.scalar(), dxi = f.a.scalar(), dth = f.u.scalar();
    const double c = std::cos(th), s = std::sin(th);
    using S = Slot;
    for (Slot y : kSlots) set(o, known, S::kAG, y, 0.0);
    set(o, known, S::kAF, S::kAG, 0.0);
    set(o, known, S::kAF, S::kAF, (mb + mc) / h);
    set(o, known, S::kAF, S::kUG, (mb * l / h) * dth * s);
    set(o, known, S::kAF, S::kUF, -(mb * l / h) * c);
    set(o, known, S::kUG, S::kAG, 0.0);
    set(o, known, S::kUG, S::kAF, (mb * l / h) * dth * s);
    set(o, known, S::kUG, S::kUG, (mb * l / h) * dxi * dth * c + mb * h * g * l * c);
    set(o, known, S::kUG, S::kUF, (mb * l / h) * dxi * s);
    set(o, known, S::kUF, S::kAG, 0.0);
    set(o, known, S::kUF, S::kAF, -(mb * l / h) * c);
    set(o, known, S::kUF, S::kUG, (mb * l / h) * dxi * s);
    set(o, known, S::kUF, S::kUF, mb * l * l / h);
  };
  return m;
}

namespace {

template <class P>
P fill_params(P p, const std::map<std::string, double>& kv, const std::vector<std::pair<const char*, double P::*>>& keys,
              const std::string& model) {
  for (const auto& [k, v] : kv) {
    bool found = false;
    for (const auto& [name, field] : keys) {
      if (k == name) {
        p.*field = v;
        found = true;
      }
    }
    if (!found) throw UsageError("model " + model + ": unknown parameter '" + k + "'");
  }
  return p;
}

}  // namespace

ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params) {
  if (name == "ball_beam") {
    return ball_beam_model(fill_params(BallBeamParams{}, params,
                                       {{"m_b", &BallBeamParams::m_b},
                                        {"I_r", &BallBeamParams::I_r},
                                        {"g", &BallBeamParams::g},
                                        {"h", &BallBeamParams::h}},
                                       name));
  }
  if (name == "cart_pole") {
    return cart_pole_model(fill_params(CartPoleParams{}, params,
                                       {{"m_c", &CartPoleParams::m_c},
                                        {"m_b", &CartPoleParams::m_b},
                                        {"l", &CartPoleParams::l},
                                        {"g", &CartPoleParams::g},
                                        {"h", &CartPoleParams::h}},
                                       name));
  }
  throw UsageError("unknown model '" + name + "'");
}

std::vector<std::string> model_names() { return {"ball_beam", "cart_pole"}; }

ProductState scalar_state(const ModelSpec& model, double a, double u, double mu_a, double mu_u) {
  auto element = [](Group g, double v) {
    if (g.kind() == Group::Kind::kCircle) return GroupElement::angle(v);
    if (g.kind() == Group::Kind::kRealLine && g.dim() == 1) return GroupElement::real(v);
    throw UsageError("scalar_state: factor " + g.name() + " is not one-dimensional");
  };
  return {element(model.ga, a), element(model.gu, u), CoAlgebraVector::scalar(model.ga, mu_a),
          CoAlgebraVector::scalar(model.gu, mu_u)};
}

std::vector<BenchmarkCase> benchmark_cases() {
  constexpr double deg = std::numbers::pi / 180.0;
  std::vector<BenchmarkCase> out;
  auto make = [&](const std::string& name, const ModelSpec& m, double theta0_deg, double xi0) {
    BenchmarkCase c;
    c.name = name;
    c.theta0_deg = theta0_deg;
    c.xi0 = xi0;
    c.problem.model = m;
    c.problem.N = 1000;
    // Coordinates are ordered (actuated, unactuated); theta is actuated on the
    // ball-beam and unactuated on the cart-pole.
    if (m.label_a == "theta") {
      c.problem.s0 = scalar_state(m, theta0_deg * deg, xi0);
    } else {
      c.problem.s0 = scalar_state(m, xi0, theta0_deg * deg);
    }
    c.problem.sf = scalar_state(m, 0.0, 0.0);
    c.problem.cost = quadratic_control_cost();
    out.push_back(std::move(c));
  };
  const ModelSpec bb = ball_beam_model({});
  const ModelSpec cp = cart_pole_model({});
  make("bb_case1", bb, 0.0, 0.5);
  make("bb_case2", bb, 18.0, 0.5);
  make("cp_case1", cp, 60.0, 2.0);
  make("cp_case2", cp, -45.0, 2.0);
  return out;
}

BenchmarkCase benchmark_case(const std::string& name) {
  for (auto& c : benchmark_cases()) {
    if (c.name == name) return c;
  }
  throw UsageError("unknown benchmark case '" + name + "'");
}

ModelSpec with_gravity_scale(const ModelSpec& model, double s) {
  auto params = model.params;
  const auto it = params.find("g");
  if (it == params.end()) throw UsageError("model " + model.name + " has no gravity parameter");
  it->second *= s;
  ModelSpec out = make_model(model.name, params);
  out.fd_eps_first = model.fd_eps_first;
  out.fd_eps_second = model.fd_eps_second;
  return out;
}

}  // namespace dmoc
