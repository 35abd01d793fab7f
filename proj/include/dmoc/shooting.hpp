#pragma once

// Multiple shooting for the two-point boundary-value problem formed by the
// necessary conditions.
//
// Unknowns: controls u_0..u_N, multipliers lam1, lam3, lam4, lam6 at every
// step (lam2, lam5 are eliminated in closed form), and the states (g, mu) at
// the start of segments 1..S-1. Each segment is integrated forward from its
// start state.
//
// Residual rows, in order: for each step k the block
//   [adjoint_a, adjoint_u, lam3_rec, lam6_rec] (k >= 1) followed by optimality,
// then terminal_control, then per interior segment boundary the continuity
//   [log(g_end^-1 g_start) a, u; mu_start - mu_end a, u],
// then the terminal boundary conditions.

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "dmoc/optimal_control.hpp"

namespace dmoc {

enum class InitStrategy { kZeros, kLinear, kWarmStart };
const char* init_name(InitStrategy s);
InitStrategy parse_init(const std::string& s);

struct ShootingConfig {
  int segments = 1;
  double tol = 1e-6;
  int max_newton = 200;
  double fd_eps = 1e-6;
  double damping = 0.5;
  double min_step = 1.0 / 1048576.0;  // 2^-20
  InitStrategy init = InitStrategy::kZeros;
  /// Gravity continuation through homotopy_schedule before the real problem.
  bool homotopy = false;
  std::vector<double> homotopy_schedule = {0.25, 0.5, 0.75, 1.0};
  StepOptions step;
  /// Progress lines (iteration, residual); may be empty.
  std::function<void(const std::string&)> log;

  void validate() const;
};

/// A previous solution used to initialize all unknowns.
struct WarmStart {
  std::vector<CoAlgebraVector> controls;  // N+1
  MultiplierSet multipliers;
  std::vector<ProductState> states;  // N+1
};

struct OcSolution {
  Trajectory trajectory;
  MultiplierSet multipliers;
  double cost = 0.0;
  /// Infinity norm of the independent certificate (certify) at the returned iterate.
  double residual_norm = 0.0;
  /// Infinity norm of the shooting residual at the returned iterate.
  double shooting_residual = 0.0;
  int newton_iters = 0;
  bool converged = false;
  /// The integrator failed at the initial iterate or inside a Jacobian.
  bool numerical_failure = false;
  int segments = 1;
  /// Gravity scales solved in order; empty when no continuation was used.
  std::vector<double> homotopy;
  std::vector<double> history;
  std::string message;

  WarmStart as_warm_start() const;
};

/// Central-difference Jacobian of a vector map; column j perturbs x_j by +-eps.
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double eps);

/// Newton direction solving J d = -r: dense LU for square J, least squares
/// when J is non-square or numerically singular.
Eigen::VectorXd newton_step(const Eigen::MatrixXd& J, const Eigen::VectorXd& r, bool* used_least_squares = nullptr);

struct NewtonResult {
  Eigen::VectorXd x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;
};

/// Damped Newton on R^n with an FD Jacobian; backtracks by `damping` until the
/// 2-norm of the residual decreases, giving up below min_step.
NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                          double tol, int max_iters, double fd_eps = 1e-6, double damping = 0.5,
                          double min_step = 1.0 / 1048576.0);

/// Point in the unknown space. Segment start states are group elements;
/// steps are taken through g exp(delta) on configurations and additively elsewhere.
struct ShootingIterate {
  std::vector<Vec> u;                 // N+1, coordinates on g_a*
  std::vector<Vec> l1, l3, l4, l6;    // N
  std::vector<ProductState> starts;   // S; starts[0] is the fixed initial state
};

class ShootingSystem {
 public:
  ShootingSystem(const OcProblem& p, int segments, StepOptions step = {});

  int N() const { return p_.N; }
  int segments() const { return S_; }
  int segment_begin(int s) const { return seg_begin_[s]; }
  int num_unknowns() const { return n_unknowns_; }
  int num_residuals() const { return n_rows_; }

  ShootingIterate initial(InitStrategy init, const WarmStart* warm = nullptr) const;
  ShootingIterate retract(const ShootingIterate& x, const Eigen::VectorXd& delta, double alpha) const;

  /// Full evaluation; throws StepFailure / DomainError from the integrator.
  Eigen::VectorXd residual(const ShootingIterate& x);
  /// Structured central-difference Jacobian at x (column j is the derivative
  /// along retract(x, e_j, .)); also returns the residual at x.
  void jacobian(const ShootingIterate& x, double eps, Eigen::Ref<Eigen::MatrixXd> J, Eigen::VectorXd& r);

  /// Trajectory, multipliers (with eliminated lam2, lam5) at the last evaluated iterate.
  Trajectory trajectory(const ShootingIterate& x) const;
  MultiplierSet multipliers(const ShootingIterate& x) const;

 private:
  struct Cache {
    std::vector<ProductState> state;  // start state of each step
    std::vector<ProductState> seg_end;
    std::vector<FactorPair> f;
    std::vector<Vec> z;
    std::vector<double> res;
    std::vector<StepTerms> terms;
    std::vector<Vec> lam2, lam5;
  };

  int row_of_step(int k) const;
  int rows_of_step(int k) const;
  int tail_row() const { return row_of_step(p_.N); }
  int u_col(int j) const { return j * da_; }
  int lam_col(int k) const { return (p_.N + 1) * da_ + k * lam_block_; }
  int start_col(int s) const { return lam_col(p_.N) + (s - 1) * state_block_; }

  CoAlgebraVector control(const ShootingIterate& x, int j) const;
  void simulate_from(const ShootingIterate& x, int s, int k_from);
  void update_lam25(const ShootingIterate& x, int k);
  void fill_step_rows(const ShootingIterate& x, int k, Eigen::Ref<Eigen::VectorXd> out) const;
  void fill_tail_rows(const ShootingIterate& x, Eigen::Ref<Eigen::VectorXd> out) const;
  void fill_rows(const ShootingIterate& x, int k_lo, int k_hi, Eigen::VectorXd& r) const;

  const OcProblem& p_;
  int S_;
  StepOptions step_;
  int da_, du_, lam_block_, state_block_;
  int n_unknowns_, n_rows_;
  std::vector<int> seg_begin_;  // S+1 entries, seg_begin_[S] = N
  std::vector<int> seg_of_;     // N entries
  Cache c_;
};

/// Solves the necessary conditions by damped Newton on the shooting system,
/// with optional gravity continuation. Never throws for numerical trouble:
/// failures are reported through converged = false and message.
OcSolution solve(const OcProblem& p, const ShootingConfig& cfg, const WarmStart* warm = nullptr);

}  // namespace dmoc
