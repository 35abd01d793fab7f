#pragma once

// Discrete Lagrangians on G_a x G_u and their left-trivialized derivatives.
//
// Notation: g = (g_a, g_u) is the configuration at step k, f = (f_a, f_u) the
// increment with g_{k+1} = g f. The four first derivatives are
//   M_ag = T*_e L_{g_a} D_{g_a} L_d,  M_af = T*_e L_{f_a} D_{f_a} L_d,
//   M_ug, M_uf likewise,
// and the sixteen second-derivative operators are
//   <M^x_y(lam), eta_x> = <D_x M_y . T_e L eta_x, lam>,
// x, y in {ag, af, ug, uf}: x is the slot being varied, y the derivative
// being differentiated, lam lives in the algebra of y's factor and the result
// in the dual of x's factor.

#include <Eigen/Core>

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "dmoc/lie.hpp"

namespace dmoc {

enum class Slot { kAG = 0, kAF = 1, kUG = 2, kUF = 3 };
inline constexpr std::array<Slot, 4> kSlots = {Slot::kAG, Slot::kAF, Slot::kUG, Slot::kUF};
const char* slot_name(Slot s);

/// An element of G_a x G_u kept as its two factors.
struct FactorPair {
  GroupElement a;
  GroupElement u;
};

struct FirstDerivs {
  CoAlgebraVector ag, af, ug, uf;

  const CoAlgebraVector& operator[](Slot s) const;
  CoAlgebraVector& operator[](Slot s);
};

/// All sixteen operators held as one (2 da + 2 du)^2 matrix; block (x, y) has
/// entry (i, j) = d(M_y)_j / d eta_{x,i}, so M^x_y(lam) = block(x, y) * lam.
class SecondDerivOps {
 public:
  SecondDerivOps() = default;
  SecondDerivOps(Group ga, Group gu);

  Group group_a() const { return ga_; }
  Group group_u() const { return gu_; }
  int offset(Slot s) const;
  int dim(Slot s) const;

  Eigen::Block<Eigen::MatrixXd> block(Slot x, Slot y);
  Eigen::Block<const Eigen::MatrixXd> block(Slot x, Slot y) const;
  const Eigen::MatrixXd& table() const { return table_; }
  Eigen::MatrixXd& table() { return table_; }

  /// M^x_y(lam).
  CoAlgebraVector apply(Slot x, Slot y, const AlgebraVector& lam) const;

 private:
  Group ga_, gu_;
  Eigen::MatrixXd table_;
};

using LagrangianFn = std::function<double(const FactorPair& g, const FactorPair& f)>;
using FirstDerivFn = std::function<FirstDerivs(const FactorPair& g, const FactorPair& f)>;
/// Fills the supplied blocks of ops and marks them in known (indexed [x][y]).
using SecondDerivFn = std::function<void(const FactorPair& g, const FactorPair& f, SecondDerivOps& ops,
                                         std::array<std::array<bool, 4>, 4>& known)>;

struct ModelSpec {
  std::string name;
  Group ga;
  Group gu;
  double h = 0.0;
  /// Physical parameters, SI units.
  std::map<std::string, double> params;
  LagrangianFn lagrangian;
  /// Optional analytic derivatives; missing ones fall back to finite differences.
  FirstDerivFn first;
  SecondDerivFn second;
  double fd_eps_first = 1e-6;
  double fd_eps_second = 1e-4;
  /// Column names for the scalar coordinates of each factor (artifact output).
  std::string label_a = "a";
  std::string label_u = "u";

  Group group() const { return Group::product({ga, gu}); }
  /// Throws UsageError if the model is malformed.
  void validate() const;
};

FactorPair split_pair(const GroupElement& g);
GroupElement join_pair(const FactorPair& p);

double eval_lagrangian(const ModelSpec& model, const FactorPair& g, const FactorPair& f);
FirstDerivs first_derivs(const ModelSpec& model, const FactorPair& g, const FactorPair& f);
SecondDerivOps second_deriv_ops(const ModelSpec& model, const FactorPair& g, const FactorPair& f);

/// Central differences of the Lagrangian along right-translated basis directions.
FirstDerivs fd_first_derivs(const ModelSpec& model, const FactorPair& g, const FactorPair& f, double eps);
/// Central differences of first_derivs (analytic where available).
SecondDerivOps fd_second_ops(const ModelSpec& model, const FactorPair& g, const FactorPair& f, double eps);

/// Perturbs one slot: slot element <- slot element * exp(eps * e_i).
void perturb_slot(FactorPair& g, FactorPair& f, Slot s, int i, double eps);

/// The discrete system run backwards in time: its Lagrangian is
/// L_d(g f, f^-1), so one of its steps from (g_{k+1}, -mu_{k+1}) lands on
/// (g_k, -mu_k) of the original. Derivatives fall back to finite differences.
ModelSpec time_reversed(const ModelSpec& model);

/// Worst analytic vs finite-difference mismatch at one point, measured as
/// |a - b| / max(|b|, floor / rel_tol).
struct DerivativeCheck {
  double first_rel = 0.0;
  double second_rel = 0.0;
  std::string worst_entry;
};
DerivativeCheck check_derivatives(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                                  double rel_tol = 1e-5, double abs_floor = 1e-8);

}  // namespace dmoc
