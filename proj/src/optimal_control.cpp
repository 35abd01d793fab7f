#include "dmoc/optimal_control.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <sstream>

namespace dmoc {

StageCost quadratic_control_cost() {
  StageCost c;
  c.name = "quadratic";
  c.value = [](const FactorPair&, const FactorPair&, const CoAlgebraVector& u) {
    return 0.5 * u.coords().squaredNorm();
  };
  c.derivs = [](const FactorPair& g, const FactorPair&, const CoAlgebraVector& u) {
    return CostDerivs{CoAlgebraVector::zero(g.a.group()), CoAlgebraVector::zero(g.u.group()),
                      CoAlgebraVector::zero(g.a.group()), CoAlgebraVector::zero(g.u.group()),
                      AlgebraVector(u.group(), u.coords())};
  };
  return c;
}

void OcProblem::validate() const {
  model.validate();
  if (N < 2) throw UsageError("problem: horizon N must be at least 2");
  for (const ProductState* s : {&s0, &sf}) {
    require_same_group(model.ga, s->ga.group(), "problem boundary (g_a)");
    require_same_group(model.gu, s->gu.group(), "problem boundary (g_u)");
    require_same_group(model.ga, s->mu_a.group(), "problem boundary (mu_a)");
    require_same_group(model.gu, s->mu_u.group(), "problem boundary (mu_u)");
  }
  if (!cost.value || !cost.derivs) throw UsageError("problem: stage cost incomplete");
}

MultiplierSet MultiplierSet::zeros(const ModelSpec& model, int N) {
  MultiplierSet m;
  m.lam1.assign(N, AlgebraVector::zero(model.ga));
  m.lam3 = m.lam1;
  m.lam4.assign(N, AlgebraVector::zero(model.gu));
  m.lam6 = m.lam4;
  m.lam2.assign(N, CoAlgebraVector::zero(model.ga));
  m.lam5.assign(N, CoAlgebraVector::zero(model.gu));
  return m;
}

void MultiplierSet::validate(const ModelSpec& model, int N) const {
  auto check = [&](const auto& seq, Group g, const char* name) {
    if (static_cast<int>(seq.size()) != N) {
      throw UsageError(std::string("multipliers: ") + name + " must have length N");
    }
    for (const auto& v : seq) require_same_group(g, v.group(), name);
  };
  check(lam1, model.ga, "lam1");
  check(lam2, model.ga, "lam2");
  check(lam3, model.ga, "lam3");
  check(lam4, model.gu, "lam4");
  check(lam5, model.gu, "lam5");
  check(lam6, model.gu, "lam6");
}

MultiplierSet MultiplierSet::scaled(double s) const {
  MultiplierSet m = *this;
  for (auto* seq : {&m.lam1, &m.lam3, &m.lam4, &m.lam6}) {
    for (auto& v : *seq) v *= s;
  }
  for (auto* seq : {&m.lam2, &m.lam5}) {
    for (auto& v : *seq) v *= s;
  }
  return m;
}

double ResidualSeries::max_norm() const {
  double n = 0.0;
  for (const auto& v : values) {
    if (v.size()) n = std::max(n, v.lpNorm<Eigen::Infinity>());
  }
  return n;
}

int ResidualSeries::argmax() const {
  int best = -1;
  double n = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double vi = values[i].size() ? values[i].lpNorm<Eigen::Infinity>() : 0.0;
    if (vi > n) {
      n = vi;
      best = first_k + static_cast<int>(i);
    }
  }
  return best;
}

std::vector<const ResidualSeries*> KktResidual::families() const {
  return {&state, &adjoint_a, &adjoint_u, &adjoint_fa, &adjoint_fu,
          &lam3_rec, &lam6_rec, &optimality, &terminal_control, &boundary};
}

Eigen::VectorXd KktResidual::stack() const {
  Eigen::Index n = 0;
  for (const auto* f : families()) {
    for (const auto& v : f->values) n += v.size();
  }
  Eigen::VectorXd out(n);
  Eigen::Index o = 0;
  for (const auto* f : families()) {
    for (const auto& v : f->values) {
      out.segment(o, v.size()) = v;
      o += v.size();
    }
  }
  return out;
}

double KktResidual::max_norm() const {
  double n = 0.0;
  for (const auto* f : families()) n = std::max(n, f->max_norm());
  return n;
}

std::string KktResidual::worst() const {
  const ResidualSeries* best = nullptr;
  for (const auto* f : families()) {
    if (!best || f->max_norm() > best->max_norm()) best = f;
  }
  std::ostringstream os;
  os << best->name << "[" << best->argmax() << "]";
  return os.str();
}

double stage_cost(const OcProblem& p, const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u) {
  return p.cost.value(g, f, u);
}

double total_cost(const OcProblem& p, const Trajectory& traj) {
  double J = 0.0;
  for (int k = 0; k < traj.N(); ++k) {
    J += stage_cost(p, traj.states[k].config(), traj.increments[k], traj.controls[k]);
  }
  return J;
}

StepTerms step_terms(const OcProblem& p, const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u) {
  StepTerms t{first_derivs(p.model, g, f), second_deriv_ops(p.model, g, f), p.cost.derivs(g, f, u),
              Ad_matrix(f.a), Mat(), Ad_matrix(f.u), Mat(), p.model.ga.abelian(), p.model.gu.abelian()};
  t.Ainv = Ad_matrix(inverse(f.a));
  t.Binv = Ad_matrix(inverse(f.u));
  return t;
}

namespace kkt {

namespace {

using S = Slot;

// G(x) in the header comment.
Vec generalized_force(const StepTerms& t, Slot x, const CoAlgebraVector& dphi, const StepMultipliers& m) {
  const auto& o = t.ops;
  const Vec va = m.l1 - t.A * m.l3;
  const Vec wa = t.Ainv * m.l1;
  const Vec vu = m.l4 - t.B * m.l6;
  const Vec wu = t.Binv * m.l4;
  Vec r = dphi.coords();
  r += o.block(x, S::kAG) * va;
  r -= o.block(x, S::kAF) * wa;
  r += o.block(x, S::kUG) * vu;
  r -= o.block(x, S::kUF) * wu;
  return r;
}

// Coordinates of ad*_eta alpha.
Vec coad_coords(Group g, const Vec& eta, const Vec& alpha) {
  return ad_matrix(AlgebraVector(g, eta)).transpose() * alpha;
}

}  // namespace

Vec lam2_value(const OcProblem& p, const StepTerms& t, const Vec& mu_a, const Vec& u_k, const StepMultipliers& m) {
  Vec r = generalized_force(t, S::kAF, t.dphi.fa, m);
  if (!t.abelian_a) {
    const Group g = p.model.ga;
    r -= coad_coords(g, t.Ainv * m.l1, t.M.af.coords());
    const Vec P = mu_a + t.M.ag.coords() + 0.5 * p.model.h * u_k;
    r += t.A.transpose() * coad_coords(g, t.A * m.l3, P);
  }
  return r;
}

Vec lam5_value(const OcProblem& p, const StepTerms& t, const Vec& mu_u, const StepMultipliers& m) {
  Vec r = generalized_force(t, S::kUF, t.dphi.fu, m);
  if (!t.abelian_u) {
    const Group g = p.model.gu;
    r -= coad_coords(g, t.Binv * m.l4, t.M.uf.coords());
    const Vec P = mu_u + t.M.ug.coords();
    r += t.B.transpose() * coad_coords(g, t.B * m.l6, P);
  }
  return r;
}

Vec adjoint_a(const StepTerms& t, const StepMultipliers& m, const Vec& lam2_prev, const Vec& lam2_k) {
  Vec r = generalized_force(t, S::kAG, t.dphi.ga, m);
  r += lam2_prev;
  r -= t.Ainv.transpose() * lam2_k;
  return r;
}

Vec adjoint_u(const StepTerms& t, const StepMultipliers& m, const Vec& lam5_prev, const Vec& lam5_k) {
  Vec r = generalized_force(t, S::kUG, t.dphi.gu, m);
  r += lam5_prev;
  r -= t.Binv.transpose() * lam5_k;
  return r;
}

Vec lam3_rec(const StepTerms& t, const StepMultipliers& m, const Vec& lam3_prev) {
  return m.l1 - t.A * m.l3 + lam3_prev;
}

Vec lam6_rec(const StepTerms& t, const StepMultipliers& m, const Vec& lam6_prev) {
  return m.l4 - t.B * m.l6 + lam6_prev;
}

Vec optimality(const OcProblem& p, const StepTerms& t, const StepMultipliers& m, const Vec* lam3_prev) {
  const double hh = 0.5 * p.model.h;
  Vec r = t.dphi.u.coords() + hh * m.l1 - hh * (t.A * m.l3);
  if (lam3_prev) r -= hh * *lam3_prev;
  return r;
}

Vec terminal_control(const OcProblem& p, const Vec& lam3_last) { return -0.5 * p.model.h * lam3_last; }

Eigen::VectorXd boundary(const OcProblem& p, const ProductState& sN) {
  const int da = p.model.ga.dim(), du = p.model.gu.dim();
  Eigen::VectorXd r(2 * (da + du));
  r << log(compose(inverse(sN.ga), p.sf.ga)).coords(), log(compose(inverse(sN.gu), p.sf.gu)).coords(),
      (sN.mu_a - p.sf.mu_a).coords(), (sN.mu_u - p.sf.mu_u).coords();
  return r;
}

Eigen::VectorXd state(const OcProblem& p, const ProductState& s, const FactorPair& f, const ProductState& next,
                      const CoAlgebraVector& u_k, const CoAlgebraVector& u_next) {
  const double h = p.model.h;
  const CoAlgebraVector um = 0.5 * h * u_k, up = 0.5 * h * u_next;
  const auto [ra, ru] = momentum_residual(p.model, s, f, um);
  const auto [ma, mu] = momentum_update(p.model, s, f, um, up);
  const int da = p.model.ga.dim(), du = p.model.gu.dim();
  Eigen::VectorXd r(3 * (da + du));
  r << ra.coords(), ru.coords(), (next.mu_a - ma).coords(), (next.mu_u - mu).coords(),
      log(compose(inverse(compose(s.ga, f.a)), next.ga)).coords(),
      log(compose(inverse(compose(s.gu, f.u)), next.gu)).coords();
  return r;
}

}  // namespace kkt

namespace {

void check_inputs(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m) {
  const int N = p.N;
  if (traj.N() != N || static_cast<int>(traj.states.size()) != N + 1 ||
      static_cast<int>(traj.controls.size()) != N + 1) {
    throw UsageError("kkt: trajectory must have N+1 states, N increments and N+1 controls");
  }
  m.validate(p.model, N);
}

std::vector<StepTerms> all_terms(const OcProblem& p, const Trajectory& traj) {
  std::vector<StepTerms> t;
  t.reserve(p.N);
  for (int k = 0; k < p.N; ++k) t.push_back(step_terms(p, traj.states[k].config(), traj.increments[k], traj.controls[k]));
  return t;
}

kkt::StepMultipliers at(const MultiplierSet& m, int k) {
  return {m.lam1[k].coords(), m.lam3[k].coords(), m.lam4[k].coords(), m.lam6[k].coords()};
}

ResidualSeries series(const char* name, int first_k) {
  ResidualSeries s;
  s.name = name;
  s.first_k = first_k;
  return s;
}

std::vector<ResidualSeries> adjoint_from_terms(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m,
                                               const std::vector<StepTerms>& T) {
  ResidualSeries a = series("adjoint_a", 1), u = series("adjoint_u", 1), fa = series("adjoint_fa", 0),
                 fu = series("adjoint_fu", 0);
  for (int k = 0; k < p.N; ++k) {
    const auto mk = at(m, k);
    if (k >= 1) {
      a.values.push_back(kkt::adjoint_a(T[k], mk, m.lam2[k - 1].coords(), m.lam2[k].coords()));
      u.values.push_back(kkt::adjoint_u(T[k], mk, m.lam5[k - 1].coords(), m.lam5[k].coords()));
    }
    const Vec l2 = kkt::lam2_value(p, T[k], traj.states[k].mu_a.coords(), traj.controls[k].coords(), mk);
    const Vec l5 = kkt::lam5_value(p, T[k], traj.states[k].mu_u.coords(), mk);
    fa.values.push_back(m.lam2[k].coords() - l2);
    fu.values.push_back(m.lam5[k].coords() - l5);
  }
  return {a, u, fa, fu};
}

std::vector<ResidualSeries> recursions_from_terms(const OcProblem& p, const MultiplierSet& m,
                                                  const std::vector<StepTerms>& T) {
  ResidualSeries r3 = series("lam3_rec", 1), r6 = series("lam6_rec", 1);
  for (int k = 1; k < p.N; ++k) {
    const auto mk = at(m, k);
    r3.values.push_back(kkt::lam3_rec(T[k], mk, m.lam3[k - 1].coords()));
    r6.values.push_back(kkt::lam6_rec(T[k], mk, m.lam6[k - 1].coords()));
  }
  return {r3, r6};
}

ResidualSeries optimality_from_terms(const OcProblem& p, const MultiplierSet& m, const std::vector<StepTerms>& T) {
  ResidualSeries o = series("optimality", 0);
  for (int k = 0; k < p.N; ++k) {
    const Vec prev = k ? m.lam3[k - 1].coords() : Vec();
    o.values.push_back(kkt::optimality(p, T[k], at(m, k), k ? &prev : nullptr));
  }
  return o;
}

}  // namespace

std::vector<ResidualSeries> adjoint_residuals(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m) {
  check_inputs(p, traj, m);
  return adjoint_from_terms(p, traj, m, all_terms(p, traj));
}

std::vector<ResidualSeries> lam_recursions(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m) {
  check_inputs(p, traj, m);
  return recursions_from_terms(p, m, all_terms(p, traj));
}

ResidualSeries optimality_residuals(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m) {
  check_inputs(p, traj, m);
  return optimality_from_terms(p, m, all_terms(p, traj));
}

ResidualSeries boundary_residuals(const OcProblem& p, const Trajectory& traj) {
  if (static_cast<int>(traj.states.size()) != p.N + 1) throw UsageError("boundary: trajectory length is not N+1");
  ResidualSeries b = series("boundary", p.N);
  b.values.push_back(kkt::boundary(p, traj.states.back()));
  return b;
}

void eliminate_lam25(const OcProblem& p, const Trajectory& traj, MultiplierSet& m) {
  check_inputs(p, traj, m);
  for (int k = 0; k < p.N; ++k) {
    const StepTerms t = step_terms(p, traj.states[k].config(), traj.increments[k], traj.controls[k]);
    const auto mk = at(m, k);
    m.lam2[k] = CoAlgebraVector(p.model.ga,
                                kkt::lam2_value(p, t, traj.states[k].mu_a.coords(), traj.controls[k].coords(), mk));
    m.lam5[k] = CoAlgebraVector(p.model.gu, kkt::lam5_value(p, t, traj.states[k].mu_u.coords(), mk));
  }
}

KktResidual assemble_kkt(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m) {
  p.validate();
  check_inputs(p, traj, m);
  const std::vector<StepTerms> T = all_terms(p, traj);
  KktResidual r;
  r.state = series("state", 0);
  for (int k = 0; k < p.N; ++k) {
    r.state.values.push_back(kkt::state(p, traj.states[k], traj.increments[k], traj.states[k + 1],
                                        traj.controls[k], traj.controls[k + 1]));
  }
  auto adj = adjoint_from_terms(p, traj, m, T);
  r.adjoint_a = adj[0];
  r.adjoint_u = adj[1];
  r.adjoint_fa = adj[2];
  r.adjoint_fu = adj[3];
  auto rec = recursions_from_terms(p, m, T);
  r.lam3_rec = rec[0];
  r.lam6_rec = rec[1];
  r.optimality = optimality_from_terms(p, m, T);
  r.terminal_control = series("terminal_control", p.N);
  r.terminal_control.values.push_back(kkt::terminal_control(p, m.lam3[p.N - 1].coords()));
  r.boundary = boundary_residuals(p, traj);
  return r;
}

KktResidual assemble_kkt(const OcProblem& p, const std::vector<CoAlgebraVector>& controls, const MultiplierSet& m) {
  p.validate();
  if (static_cast<int>(controls.size()) != p.N + 1) throw UsageError("assemble_kkt: needs N+1 controls");
  return assemble_kkt(p, simulate(p.model, p.s0, controls, p.N), m);
}

Trajectory trajectory_from_states(const ModelSpec& model, const std::vector<ProductState>& states,
                                  const std::vector<CoAlgebraVector>& controls) {
  if (states.size() < 1 || controls.size() != states.size()) {
    throw UsageError("trajectory_from_states: needs N+1 states and N+1 controls");
  }
  Trajectory t;
  t.h = model.h;
  t.states = states;
  t.controls = controls;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    t.increments.push_back(
        {compose(inverse(states[k].ga), states[k + 1].ga), compose(inverse(states[k].gu), states[k + 1].gu)});
    t.step_residuals.push_back(0.0);
  }
  return t;
}

KktResidual certify(const OcProblem& p, const std::vector<ProductState>& states,
                    const std::vector<CoAlgebraVector>& controls, const MultiplierSet& m) {
  return assemble_kkt(p, trajectory_from_states(p.model, states, controls), m);
}

CoAlgebraVector unweight_multiplier(const AlgebraVector& X, const CoAlgebraVector& lam_tilde) {
  require_same_group(X.group(), lam_tilde.group(), "unweight_multiplier");
  if (X.group().abelian()) return lam_tilde;
  const Mat D = dexpinv_matrix(X);
  return CoAlgebraVector(X.group(), D.transpose().partialPivLu().solve(lam_tilde.coords()));
}

}  // namespace dmoc
