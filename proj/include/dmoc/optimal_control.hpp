#pragma once

// Necessary conditions of the discrete optimal control problem
//   min sum_{k<N} phi_d(g_k, f_k, u_k)  subject to the forced discrete Hamilton
//   equations, (g_0, mu_0) fixed and (g_N, mu_N) = (g^f, mu^f).
//
// Multipliers: lam1, lam3 in g_a and lam4, lam6 in g_u attach to the
// momentum-matching and momentum-update equations; lam2 in g_a*, lam5 in g_u*
// attach to the configuration update. lam2/lam5 are stored after the change of
// variables by the transpose of dexpinv(log f_k) (identity on abelian factors).
//
// Residual families, with A = Ad_{f_ak}, B = Ad_{f_uk}, M^x_y the second
// derivative operators and G(x) = Dphi_x + M^x_ag(lam1 - A lam3) - M^x_af(A^-1 lam1)
//                               + M^x_ug(lam4 - B lam6) - M^x_uf(B^-1 lam4):
//   adjoint_a   (k=1..N-1): G(ag) + lam2_{k-1} - A^-T lam2_k
//   adjoint_u   (k=1..N-1): G(ug) + lam5_{k-1} - B^-T lam5_k
//   adjoint_fa  (k=0..N-1): lam2_k - [G(af) - ad*_{A^-1 lam1} M_af + A^T ad*_{A lam3}(mu_a + M_ag + (h/2) u_k)]
//   adjoint_fu  (k=0..N-1): lam5_k - [G(uf) - ad*_{B^-1 lam4} M_uf + B^T ad*_{B lam6}(mu_u + M_ug)]
//   lam3_rec    (k=1..N-1): lam1_k - A lam3_k + lam3_{k-1}
//   lam6_rec    (k=1..N-1): lam4_k - B lam6_k + lam6_{k-1}
//   optimality  (k=0..N-1): D_u phi + (h/2) lam1_k - (h/2)(A lam3_k + lam3_{k-1}), no lam3_{-1} at k=0
//   terminal_control:       -(h/2) lam3_{N-1}   (stationarity in u_N)
//   boundary:               log(g_N^-1 g^f) per factor, mu_N - mu^f
//   state       (k=0..N-1): momentum matching, momentum update and g_{k+1} = g_k f_k mismatches

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "dmoc/integrator.hpp"

namespace dmoc {

/// Left-trivialized derivatives of a stage cost.
struct CostDerivs {
  CoAlgebraVector ga, gu, fa, fu;
  /// D_u phi; u is a covector so this lives in g_a.
  AlgebraVector u;
};

struct StageCost {
  std::string name;
  std::function<double(const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u)> value;
  std::function<CostDerivs(const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u)> derivs;
};

/// phi_d = 1/2 |u|^2.
StageCost quadratic_control_cost();

struct OcProblem {
  ModelSpec model;
  int N = 0;
  ProductState s0;
  ProductState sf;
  StageCost cost;

  void validate() const;
};

struct MultiplierSet {
  std::vector<AlgebraVector> lam1, lam3, lam4, lam6;
  std::vector<CoAlgebraVector> lam2, lam5;

  static MultiplierSet zeros(const ModelSpec& model, int N);
  int N() const { return static_cast<int>(lam1.size()); }
  void validate(const ModelSpec& model, int N) const;
  MultiplierSet scaled(double s) const;
};

struct ResidualSeries {
  std::string name;
  int first_k = 0;
  std::vector<Eigen::VectorXd> values;

  double max_norm() const;
  /// Index k (not position) of the largest entry; -1 if empty.
  int argmax() const;
};

struct KktResidual {
  ResidualSeries state, adjoint_a, adjoint_u, adjoint_fa, adjoint_fu, lam3_rec, lam6_rec, optimality,
      terminal_control, boundary;

  std::vector<const ResidualSeries*> families() const;
  Eigen::VectorXd stack() const;
  double max_norm() const;
  /// "family[k]" of the largest entry.
  std::string worst() const;
};

double stage_cost(const OcProblem& p, const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u);
double total_cost(const OcProblem& p, const Trajectory& traj);

/// Everything a single step contributes to the residuals, independent of the
/// multipliers.
struct StepTerms {
  FirstDerivs M;
  SecondDerivOps ops;
  CostDerivs dphi;
  Mat A, Ainv, B, Binv;
  bool abelian_a = true, abelian_u = true;
};

StepTerms step_terms(const OcProblem& p, const FactorPair& g, const FactorPair& f, const CoAlgebraVector& u);

/// Coordinate kernels of the residual families; vectors are raw coordinates in
/// the bases of lie.hpp. These are shared by assemble_kkt and the shooting solver.
namespace kkt {

struct StepMultipliers {
  Vec l1, l3, l4, l6;
};

/// Right-hand sides of adjoint_fa / adjoint_fu, i.e. the eliminated lam2_k, lam5_k.
Vec lam2_value(const OcProblem& p, const StepTerms& t, const Vec& mu_a, const Vec& u_k, const StepMultipliers& m);
Vec lam5_value(const OcProblem& p, const StepTerms& t, const Vec& mu_u, const StepMultipliers& m);
Vec adjoint_a(const StepTerms& t, const StepMultipliers& m, const Vec& lam2_prev, const Vec& lam2_k);
Vec adjoint_u(const StepTerms& t, const StepMultipliers& m, const Vec& lam5_prev, const Vec& lam5_k);
Vec lam3_rec(const StepTerms& t, const StepMultipliers& m, const Vec& lam3_prev);
Vec lam6_rec(const StepTerms& t, const StepMultipliers& m, const Vec& lam6_prev);
/// lam3_prev == nullptr at k = 0.
Vec optimality(const OcProblem& p, const StepTerms& t, const StepMultipliers& m, const Vec* lam3_prev);
Vec terminal_control(const OcProblem& p, const Vec& lam3_last);
/// [log(g_N^-1 g^f)_a, _u, (mu_N - mu^f)_a, _u].
Eigen::VectorXd boundary(const OcProblem& p, const ProductState& sN);
/// [momentum matching a, u; momentum update a, u; log((g_k f_k)^-1 g_{k+1}) a, u].
Eigen::VectorXd state(const OcProblem& p, const ProductState& s, const FactorPair& f, const ProductState& next,
                      const CoAlgebraVector& u_k, const CoAlgebraVector& u_next);

}  // namespace kkt

/// Four sequences: adjoint_a, adjoint_u, adjoint_fa, adjoint_fu.
std::vector<ResidualSeries> adjoint_residuals(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m);
std::vector<ResidualSeries> lam_recursions(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m);
ResidualSeries optimality_residuals(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m);
ResidualSeries boundary_residuals(const OcProblem& p, const Trajectory& traj);

/// Overwrites lam2/lam5 with their closed-form values from the adjoint_fa/fu equations.
void eliminate_lam25(const OcProblem& p, const Trajectory& traj, MultiplierSet& m);

/// Simulates from p.s0 under the N+1 controls, then evaluates every family.
KktResidual assemble_kkt(const OcProblem& p, const std::vector<CoAlgebraVector>& controls, const MultiplierSet& m);
/// Evaluates every family on a given trajectory (states, controls, increments).
KktResidual assemble_kkt(const OcProblem& p, const Trajectory& traj, const MultiplierSet& m);

/// Rebuilds a trajectory from stored states alone: f_k = g_k^-1 g_{k+1}.
Trajectory trajectory_from_states(const ModelSpec& model, const std::vector<ProductState>& states,
                                  const std::vector<CoAlgebraVector>& controls);

/// Solver-independent certificate: trajectory_from_states followed by assemble_kkt.
KktResidual certify(const OcProblem& p, const std::vector<ProductState>& states,
                    const std::vector<CoAlgebraVector>& controls, const MultiplierSet& m);

/// lam2 before the change of variables: dexpinv(X)^-T lam2_tilde with X = log f.
CoAlgebraVector unweight_multiplier(const AlgebraVector& X, const CoAlgebraVector& lam_tilde);

}  // namespace dmoc
