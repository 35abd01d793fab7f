#pragma once

// Forced discrete Hamilton equations on G_a x G_u.
//
// Given (g_k, mu_k) and the half-step forces u-_k = (h/2) u_k, u+_k = (h/2) u_{k+1}
// (forces act on the actuated factor only), the increment f_k = (f_a, f_u) solves
//   mu_a = -M_ag + Ad*_{f_a^-1} M_af - u-_k
//   mu_u = -M_ug + Ad*_{f_u^-1} M_uf
// and the state advances by
//   g_{k+1} = g_k f_k
//   mu_a' = Ad*_{f_a}(mu_a + M_ag + u-_k) + u+_k
//   mu_u' = Ad*_{f_u}(mu_u + M_ug).

#include <optional>
#include <vector>

#include "dmoc/mechanics.hpp"

namespace dmoc {

struct ProductState {
  GroupElement ga, gu;
  CoAlgebraVector mu_a, mu_u;

  FactorPair config() const { return {ga, gu}; }
};

/// Inner-solve settings for the implicit step.
struct StepOptions {
  double tol = 1e-12;
  int max_iters = 50;
  double fd_eps = 1e-7;
};

struct StepResult {
  FactorPair f;
  /// Stacked (log f_a, log f_u) at the root; the natural guess for the next step.
  Vec z;
  ProductState next;
  /// Infinity norm of the momentum-matching residual at the returned root.
  double residual = 0.0;
  int iterations = 0;
};

struct Trajectory {
  std::vector<ProductState> states;       // N+1
  std::vector<CoAlgebraVector> controls;  // N+1 samples u_0..u_N
  std::vector<FactorPair> increments;     // N
  std::vector<double> step_residuals;     // N
  double h = 0.0;

  int N() const { return static_cast<int>(increments.size()); }
};

/// Momentum-matching residuals (R_a, R_u) for a candidate increment f.
std::pair<CoAlgebraVector, CoAlgebraVector> momentum_residual(const ModelSpec& model, const ProductState& s,
                                                              const FactorPair& f, const CoAlgebraVector& u_minus);

/// Momentum update for a given increment (valid once the residual vanishes).
std::pair<CoAlgebraVector, CoAlgebraVector> momentum_update(const ModelSpec& model, const ProductState& s,
                                                            const FactorPair& f, const CoAlgebraVector& u_minus,
                                                            const CoAlgebraVector& u_plus);

/// One step. guess holds stacked (log f_a, log f_u) coordinates; zero if absent.
/// k is reported in StepFailure.
StepResult step_hamilton(const ModelSpec& model, const ProductState& s, const CoAlgebraVector& u_k,
                         const CoAlgebraVector& u_next, const Vec* guess = nullptr, int k = 0,
                         const StepOptions& opt = {});

/// Runs N steps from s0 with the N+1 control samples u_0..u_N; each step's
/// inner solve starts from the previous step's increment.
Trajectory simulate(const ModelSpec& model, const ProductState& s0, const std::vector<CoAlgebraVector>& controls,
                    int N, const StepOptions& opt = {});

/// F-: (g_k, mu_k) from (g_k, f_k) with the actuated half force u-_k.
ProductState legendre_minus(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                            const CoAlgebraVector& u_minus);
/// F+: (g_k f_k, mu_{k+1}) from (g_k, f_k) with the actuated half force u+_k.
ProductState legendre_plus(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                           const CoAlgebraVector& u_plus);

/// Forced discrete Euler-Lagrange residuals at an interior index k:
///   M_f(k-1) + M_g(k) - Ad*_{f_k^-1} M_f(k) + (u+_{k-1} + u-_k on the actuated factor).
/// The forces passed in are the discrete half forces, not control samples.
std::pair<CoAlgebraVector, CoAlgebraVector> el_residual(const ModelSpec& model, const FactorPair& g_prev,
                                                        const FactorPair& f_prev, const FactorPair& g_k,
                                                        const FactorPair& f_k, const CoAlgebraVector& u_plus_prev,
                                                        const CoAlgebraVector& u_minus_k);

/// Stacked (log f_a, log f_u).
Vec increment_coords(const FactorPair& f);
FactorPair increment_from_coords(const ModelSpec& model, const Vec& z);

}  // namespace dmoc
