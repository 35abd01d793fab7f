#include "dmoc/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dmoc {

const char* slot_name(Slot s) {
  switch (s) {
    case Slot::kAG: return "ag";
    case Slot::kAF: return "af";
    case Slot::kUG: return "ug";
    case Slot::kUF: return "uf";
  }
  return "?";
}

const CoAlgebraVector& FirstDerivs::operator[](Slot s) const {
  switch (s) {
    case Slot::kAG: return ag;
    case Slot::kAF: return af;
    case Slot::kUG: return ug;
    default: return uf;
  }
}

CoAlgebraVector& FirstDerivs::operator[](Slot s) {
  return const_cast<CoAlgebraVector&>(static_cast<const FirstDerivs&>(*this)[s]);
}

SecondDerivOps::SecondDerivOps(Group ga, Group gu) : ga_(ga), gu_(gu) {
  const int d = 2 * (ga.dim() + gu.dim());
  table_ = Eigen::MatrixXd::Zero(d, d);
}

int SecondDerivOps::dim(Slot s) const {
  return (s == Slot::kAG || s == Slot::kAF) ? ga_.dim() : gu_.dim();
}

int SecondDerivOps::offset(Slot s) const {
  const int da = ga_.dim();
  switch (s) {
    case Slot::kAG: return 0;
    case Slot::kAF: return da;
    case Slot::kUG: return 2 * da;
    default: return 2 * da + gu_.dim();
  }
}

Eigen::Block<Eigen::MatrixXd> SecondDerivOps::block(Slot x, Slot y) {
  return table_.block(offset(x), offset(y), dim(x), dim(y));
}

Eigen::Block<const Eigen::MatrixXd> SecondDerivOps::block(Slot x, Slot y) const {
  return table_.block(offset(x), offset(y), dim(x), dim(y));
}

CoAlgebraVector SecondDerivOps::apply(Slot x, Slot y, const AlgebraVector& lam) const {
  const Group gy = (y == Slot::kAG || y == Slot::kAF) ? ga_ : gu_;
  const Group gx = (x == Slot::kAG || x == Slot::kAF) ? ga_ : gu_;
  require_same_group(gy, lam.group(), "second-derivative operator");
  return CoAlgebraVector(gx, block(x, y) * lam.coords());
}

void ModelSpec::validate() const {
  if (!ga.valid() || !gu.valid()) throw UsageError("model '" + name + "': factor groups not set");
  if (!(h > 0.0) || !std::isfinite(h)) throw UsageError("model '" + name + "': step h must be positive");
  if (!lagrangian) throw UsageError("model '" + name + "': no discrete Lagrangian");
  if (!(fd_eps_first >= 1e-9 && fd_eps_first <= 1e-3) || !(fd_eps_second >= 1e-9 && fd_eps_second <= 1e-3)) {
    throw UsageError("model '" + name + "': finite-difference steps must lie in [1e-9, 1e-3]");
  }
}

FactorPair split_pair(const GroupElement& g) {
  auto [a, u] = product_split(g);
  return {a, u};
}

GroupElement join_pair(const FactorPair& p) { return product_join(p.a, p.u); }

namespace {

void check_pair(const ModelSpec& model, const FactorPair& g, const FactorPair& f) {
  require_same_group(model.ga, g.a.group(), "model evaluation (g_a)");
  require_same_group(model.gu, g.u.group(), "model evaluation (g_u)");
  require_same_group(model.ga, f.a.group(), "model evaluation (f_a)");
  require_same_group(model.gu, f.u.group(), "model evaluation (f_u)");
}

}  // namespace

void perturb_slot(FactorPair& g, FactorPair& f, Slot s, int i, double eps) {
  GroupElement& e = (s == Slot::kAG) ? g.a : (s == Slot::kAF) ? f.a : (s == Slot::kUG) ? g.u : f.u;
  e = compose(e, exp(eps * AlgebraVector::basis(e.group(), i)));
}

double eval_lagrangian(const ModelSpec& model, const FactorPair& g, const FactorPair& f) {
  check_pair(model, g, f);
  return model.lagrangian(g, f);
}

FirstDerivs fd_first_derivs(const ModelSpec& model, const FactorPair& g, const FactorPair& f, double eps) {
  if (!(eps >= 1e-9 && eps <= 1e-3)) throw UsageError("fd_first_derivs: eps outside [1e-9, 1e-3]");
  check_pair(model, g, f);
  FirstDerivs out{CoAlgebraVector::zero(model.ga), CoAlgebraVector::zero(model.ga),
                  CoAlgebraVector::zero(model.gu), CoAlgebraVector::zero(model.gu)};
  for (Slot s : kSlots) {
    Vec c = out[s].coords();
    for (int i = 0; i < c.size(); ++i) {
      FactorPair gp = g, fp = f, gm = g, fm = f;
      perturb_slot(gp, fp, s, i, eps);
      perturb_slot(gm, fm, s, i, -eps);
      c(i) = (model.lagrangian(gp, fp) - model.lagrangian(gm, fm)) / (2.0 * eps);
    }
    out[s] = CoAlgebraVector(out[s].group(), c);
  }
  return out;
}

FirstDerivs first_derivs(const ModelSpec& model, const FactorPair& g, const FactorPair& f) {
  if (model.first) {
    check_pair(model, g, f);
    return model.first(g, f);
  }
  return fd_first_derivs(model, g, f, model.fd_eps_first);
}

namespace {

void fd_second_block_row(const ModelSpec& model, const FactorPair& g, const FactorPair& f, Slot x, double eps,
                         SecondDerivOps& ops, const std::array<std::array<bool, 4>, 4>* known) {
  const int dx = ops.dim(x);
  for (int i = 0; i < dx; ++i) {
    FactorPair gp = g, fp = f, gm = g, fm = f;
    perturb_slot(gp, fp, x, i, eps);
    perturb_slot(gm, fm, x, i, -eps);
    const FirstDerivs p = first_derivs(model, gp, fp);
    const FirstDerivs m = first_derivs(model, gm, fm);
    for (Slot y : kSlots) {
      if (known && (*known)[static_cast<int>(x)][static_cast<int>(y)]) continue;
      ops.block(x, y).row(i) = ((p[y].coords() - m[y].coords()) / (2.0 * eps)).transpose();
    }
  }
}

}  // namespace

SecondDerivOps fd_second_ops(const ModelSpec& model, const FactorPair& g, const FactorPair& f, double eps) {
  if (!(eps >= 1e-9 && eps <= 1e-3)) throw UsageError("fd_second_ops: eps outside [1e-9, 1e-3]");
  check_pair(model, g, f);
  SecondDerivOps ops(model.ga, model.gu);
  for (Slot x : kSlots) fd_second_block_row(model, g, f, x, eps, ops, nullptr);
  return ops;
}

SecondDerivOps second_deriv_ops(const ModelSpec& model, const FactorPair& g, const FactorPair& f) {
  if (!model.second) return fd_second_ops(model, g, f, model.fd_eps_second);
  check_pair(model, g, f);
  SecondDerivOps ops(model.ga, model.gu);
  std::array<std::array<bool, 4>, 4> known{};
  model.second(g, f, ops, known);
  for (Slot x : kSlots) {
    const auto& row = known[static_cast<int>(x)];
    if (std::all_of(row.begin(), row.end(), [](bool b) { return b; })) continue;
    fd_second_block_row(model, g, f, x, model.fd_eps_second, ops, &known);
  }
  return ops;
}

ModelSpec time_reversed(const ModelSpec& model) {
  ModelSpec r = model;
  r.name = model.name + "_reversed";
  r.first = nullptr;
  r.second = nullptr;
  const LagrangianFn L = model.lagrangian;
  r.lagrangian = [L](const FactorPair& g, const FactorPair& f) {
    return L({compose(g.a, f.a), compose(g.u, f.u)}, {inverse(f.a), inverse(f.u)});
  };
  return r;
}

DerivativeCheck check_derivatives(const ModelSpec& model, const FactorPair& g, const FactorPair& f,
                                  double rel_tol, double abs_floor) {
  DerivativeCheck out;
  const double scale_floor = abs_floor / rel_tol;
  auto err = [&](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), scale_floor); };

  const FirstDerivs an = first_derivs(model, g, f);
  const FirstDerivs fd = fd_first_derivs(model, g, f, model.fd_eps_first);
  for (Slot s : kSlots) {
    for (int i = 0; i < an[s].dim(); ++i) {
      const double e = err(an[s][i], fd[s][i]);
      if (e > out.first_rel) {
        out.first_rel = e;
        std::ostringstream os;
        os << "M_" << slot_name(s) << "[" << i << "]";
        out.worst_entry = os.str();
      }
    }
  }

  const SecondDerivOps san = second_deriv_ops(model, g, f);
  const SecondDerivOps sfd = fd_second_ops(model, g, f, model.fd_eps_second);
  for (Slot x : kSlots) {
    for (Slot y : kSlots) {
      const auto A = san.block(x, y);
      const auto B = sfd.block(x, y);
      for (int i = 0; i < A.rows(); ++i) {
        for (int j = 0; j < A.cols(); ++j) {
          const double e = err(A(i, j), B(i, j));
          if (e > out.second_rel) {
            out.second_rel = e;
            if (out.second_rel > out.first_rel) {
              std::ostringstream os;
              os << "M^" << slot_name(x) << "_" << slot_name(y) << "(" << i << "," << j << ")";
              out.worst_entry = os.str();
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace dmoc
