#include "dmoc/lie.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace dmoc {

struct Group::Node {
  Kind kind;
  int dim = 0;
  int rep_size = 0;
  bool abelian = true;
  bool has_so3 = false;
  std::string name;
  std::vector<Group> factors;
  std::vector<int> dim_offsets;
  std::vector<int> rep_offsets;
};

namespace {

using Node = Group::Node;

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, std::unique_ptr<Node>>& registry() {
  static std::map<std::string, std::unique_ptr<Node>> r;
  return r;
}

const Node* intern(std::unique_ptr<Node> n) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto& r = registry();
  auto it = r.find(n->name);
  if (it != r.end()) return it->second.get();
  const Node* raw = n.get();
  r.emplace(raw->name, std::move(n));
  return raw;
}

const Node& node_of(Group g) {
  if (!g.valid()) throw UsageError("operation on an empty group handle");
  return *g.node();
}

}  // namespace

Group Group::real_line(int n) {
  if (n < 1 || n > kMaxAlgebraDim) throw UsageError("real_line: dimension out of range");
  auto node = std::make_unique<Node>();
  node->kind = Kind::kRealLine;
  node->dim = n;
  node->rep_size = n;
  node->name = "R" + std::to_string(n);
  return Group(intern(std::move(node)));
}

Group Group::circle() {
  auto node = std::make_unique<Node>();
  node->kind = Kind::kCircle;
  node->dim = 1;
  node->rep_size = 1;
  node->name = "S1";
  return Group(intern(std::move(node)));
}

Group Group::so3() {
  auto node = std::make_unique<Node>();
  node->kind = Kind::kSO3;
  node->dim = 3;
  node->rep_size = 9;
  node->abelian = false;
  node->has_so3 = true;
  node->name = "SO3";
  return Group(intern(std::move(node)));
}

Group Group::product(const std::vector<Group>& factors) {
  if (factors.empty()) throw UsageError("product: needs at least one factor");
  auto node = std::make_unique<Node>();
  node->kind = Kind::kProduct;
  node->name = "(";
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const Node& f = node_of(factors[i]);
    node->dim_offsets.push_back(node->dim);
    node->rep_offsets.push_back(node->rep_size);
    node->dim += f.dim;
    node->rep_size += f.rep_size;
    node->abelian = node->abelian && f.abelian;
    node->has_so3 = node->has_so3 || f.has_so3;
    if (i) node->name += "x";
    node->name += f.name;
  }
  node->name += ")";
  node->factors = factors;
  if (node->dim > kMaxAlgebraDim || node->rep_size > kMaxRepSize) {
    throw UsageError("product: group too large (" + node->name + ")");
  }
  return Group(intern(std::move(node)));
}

Group::Kind Group::kind() const { return node_of(*this).kind; }
int Group::dim() const { return node_of(*this).dim; }
int Group::rep_size() const { return node_of(*this).rep_size; }
bool Group::abelian() const { return node_of(*this).abelian; }
const std::string& Group::name() const { return node_of(*this).name; }
const std::vector<Group>& Group::factors() const { return node_of(*this).factors; }

void require_same_group(Group a, Group b, const char* op) {
  if (a != b) {
    throw UsageError(std::string(op) + ": group mismatch (" + (a.valid() ? a.name() : "<none>") +
                     " vs " + (b.valid() ? b.name() : "<none>") + ")");
  }
}

double pair(const CoAlgebraVector& alpha, const AlgebraVector& xi) {
  require_same_group(alpha.group(), xi.group(), "pair");
  return alpha.coords().dot(xi.coords());
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  // clang-format off
  W <<    0.0, -w.z(),  w.y(),
        w.z(),    0.0, -w.x(),
       -w.y(),  w.x(),    0.0;
  // clang-format on
  return W;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& W) { return {W(2, 1), W(0, 2), W(1, 0)}; }

Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) = -U.col(2);
  return U * V.transpose();
}

namespace {

Eigen::Matrix3d so3_block(const RepVec& rep, int off) {
  return Eigen::Map<const Eigen::Matrix3d>(rep.data() + off);
}

void set_so3_block(RepVec& rep, int off, const Eigen::Matrix3d& R) {
  Eigen::Map<Eigen::Matrix3d>(rep.data() + off) = R;
}

// Applies fn(leaf_group, dim_offset, rep_offset) to every primitive factor.
template <class Fn>
void for_each_leaf(Group g, int dim_off, int rep_off, Fn&& fn) {
  const Node& n = node_of(g);
  if (n.kind != Group::Kind::kProduct) {
    fn(g, dim_off, rep_off);
    return;
  }
  for (std::size_t i = 0; i < n.factors.size(); ++i) {
    for_each_leaf(n.factors[i], dim_off + n.dim_offsets[i], rep_off + n.rep_offsets[i], fn);
  }
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double th2 = w.squaredNorm();
  const double th = std::sqrt(th2);
  double a, b;
  if (th < 1e-4) {
    a = 1.0 - th2 / 6.0 + th2 * th2 / 120.0;
    b = 0.5 - th2 / 24.0 + th2 * th2 / 720.0;
  } else {
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / th2;
  }
  const Eigen::Matrix3d W = hat(w);
  return Eigen::Matrix3d::Identity() + a * W + b * W * W;
}

// Rotations closer than this to angle pi are treated as outside the
// injectivity domain of log.
constexpr double kLogCutLocusMargin = 1e-6;

Eigen::Vector3d so3_log(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d s = 0.5 * vee(R - R.transpose());
  const double c = 0.5 * (R.trace() - 1.0);
  const double sn = s.norm();
  const double th = std::atan2(sn, c);
  if (th >= std::numbers::pi - kLogCutLocusMargin) {
    throw DomainError("log: rotation angle at the injectivity boundary (pi); step too large");
  }
  double k;
  if (th < 1e-4) {
    k = 1.0 + th * th / 6.0 + 7.0 * th * th * th * th / 360.0;
  } else {
    k = th / sn;
  }
  return k * s;
}

}  // namespace

GroupElement::GroupElement(Group g, const RepVec& rep) : group_(g), rep_(rep) {
  if (!g.valid() || rep.size() != g.rep_size()) {
    throw UsageError("group element: representation size does not match group");
  }
  for_each_leaf(g, 0, 0, [&](Group leaf, int, int ro) {
    switch (leaf.kind()) {
      case Group::Kind::kCircle:
        rep_(ro) = wrap_angle(rep_(ro));
        break;
      case Group::Kind::kSO3: {
        const Eigen::Matrix3d R = so3_block(rep_, ro);
        const double err = std::max((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(),
                                    std::abs(R.determinant() - 1.0));
        if (!(err <= 1e-10)) throw UsageError("group element: matrix is not a rotation to 1e-10");
        break;
      }
      default:
        break;
    }
  });
}

GroupElement GroupElement::identity(Group g) {
  RepVec rep = RepVec::Zero(g.rep_size());
  for_each_leaf(g, 0, 0, [&](Group leaf, int, int ro) {
    if (leaf.kind() == Group::Kind::kSO3) set_so3_block(rep, ro, Eigen::Matrix3d::Identity());
  });
  return GroupElement(g, std::move(rep), Unchecked{});
}

GroupElement GroupElement::real(const Vec& coords) {
  RepVec rep = coords;
  return GroupElement(Group::real_line(static_cast<int>(coords.size())), std::move(rep), Unchecked{});
}

GroupElement GroupElement::real(double x) {
  RepVec rep(1);
  rep(0) = x;
  return GroupElement(Group::real_line(1), std::move(rep), Unchecked{});
}

GroupElement GroupElement::angle(double theta) {
  RepVec rep(1);
  rep(0) = wrap_angle(theta);
  return GroupElement(Group::circle(), std::move(rep), Unchecked{});
}

GroupElement GroupElement::rotation(const Eigen::Matrix3d& R) {
  RepVec rep(9);
  set_so3_block(rep, 0, R);
  return GroupElement(Group::so3(), rep);
}

double GroupElement::angle() const {
  if (group_.kind() != Group::Kind::kCircle) throw UsageError("angle(): element is not on S1");
  return rep_(0);
}

Vec GroupElement::coords() const {
  if (group_.kind() != Group::Kind::kRealLine) throw UsageError("coords(): element is not on R^n");
  return rep_;
}

double GroupElement::scalar() const {
  const auto k = group_.kind();
  if ((k != Group::Kind::kRealLine && k != Group::Kind::kCircle) || rep_.size() != 1) {
    throw UsageError("scalar(): element is not on S1 or R1");
  }
  return rep_(0);
}

Eigen::Matrix3d GroupElement::rotation() const {
  if (group_.kind() != Group::Kind::kSO3) throw UsageError("rotation(): element is not on SO3");
  return so3_block(rep_, 0);
}

GroupElement compose(const GroupElement& a, const GroupElement& b) {
  require_same_group(a.group(), b.group(), "compose");
  const Group g = a.group();
  RepVec rep(g.rep_size());
  const bool has_so3 = node_of(g).has_so3;
  int drift = has_so3 ? std::max(a.drift_count(), b.drift_count()) + 1 : 0;
  const bool project = has_so3 && drift >= kReorthonormalizeEvery;
  for_each_leaf(g, 0, 0, [&](Group leaf, int, int ro) {
    const int n = leaf.rep_size();
    switch (leaf.kind()) {
      case Group::Kind::kRealLine:
        rep.segment(ro, n) = a.rep().segment(ro, n) + b.rep().segment(ro, n);
        break;
      case Group::Kind::kCircle:
        rep(ro) = wrap_angle(a.rep()(ro) + b.rep()(ro));
        break;
      case Group::Kind::kSO3: {
        Eigen::Matrix3d R = so3_block(a.rep(), ro) * so3_block(b.rep(), ro);
        if (project) R = project_to_so3(R);
        set_so3_block(rep, ro, R);
        break;
      }
      case Group::Kind::kProduct:
        break;
    }
  });
  if (project) drift = 0;
  return GroupElement(g, std::move(rep), GroupElement::Unchecked{}, drift);
}

GroupElement inverse(const GroupElement& x) {
  const Group g = x.group();
  RepVec rep(g.rep_size());
  for_each_leaf(g, 0, 0, [&](Group leaf, int, int ro) {
    const int n = leaf.rep_size();
    switch (leaf.kind()) {
      case Group::Kind::kRealLine:
        rep.segment(ro, n) = -x.rep().segment(ro, n);
        break;
      case Group::Kind::kCircle:
        rep(ro) = wrap_angle(-x.rep()(ro));
        break;
      case Group::Kind::kSO3:
        set_so3_block(rep, ro, so3_block(x.rep(), ro).transpose());
        break;
      case Group::Kind::kProduct:
        break;
    }
  });
  return GroupElement(g, std::move(rep), GroupElement::Unchecked{}, x.drift_count());
}

GroupElement exp(const AlgebraVector& X) {
  const Group g = X.group();
  RepVec rep(g.rep_size());
  for_each_leaf(g, 0, 0, [&](Group leaf, int d, int ro) {
    const int n = leaf.dim();
    switch (leaf.kind()) {
      case Group::Kind::kRealLine:
        rep.segment(ro, n) = X.coords().segment(d, n);
        break;
      case Group::Kind::kCircle:
        rep(ro) = wrap_angle(X.coords()(d));
        break;
      case Group::Kind::kSO3:
        set_so3_block(rep, ro, so3_exp(X.coords().segment<3>(d)));
        break;
      case Group::Kind::kProduct:
        break;
    }
  });
  return GroupElement(g, std::move(rep), GroupElement::Unchecked{});
}

AlgebraVector log(const GroupElement& x) {
  const Group g = x.group();
  Vec c(g.dim());
  for_each_leaf(g, 0, 0, [&](Group leaf, int d, int ro) {
    const int n = leaf.dim();
    switch (leaf.kind()) {
      case Group::Kind::kRealLine:
        c.segment(d, n) = x.rep().segment(ro, n);
        break;
      case Group::Kind::kCircle:
        c(d) = x.rep()(ro);
        break;
      case Group::Kind::kSO3:
        c.segment<3>(d) = so3_log(so3_block(x.rep(), ro));
        break;
      case Group::Kind::kProduct:
        break;
    }
  });
  return AlgebraVector(g, c);
}

Mat Ad_matrix(const GroupElement& x) {
  const Group g = x.group();
  Mat A = Mat::Identity(g.dim(), g.dim());
  if (node_of(g).abelian) return A;
  for_each_leaf(g, 0, 0, [&](Group leaf, int d, int ro) {
    if (leaf.kind() == Group::Kind::kSO3) A.block<3, 3>(d, d) = so3_block(x.rep(), ro);
  });
  return A;
}

Mat ad_matrix(const AlgebraVector& eta) {
  const Group g = eta.group();
  Mat A = Mat::Zero(g.dim(), g.dim());
  if (node_of(g).abelian) return A;
  for_each_leaf(g, 0, 0, [&](Group leaf, int d, int) {
    if (leaf.kind() == Group::Kind::kSO3) A.block<3, 3>(d, d) = hat(eta.coords().segment<3>(d));
  });
  return A;
}

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& xi) {
  require_same_group(g.group(), xi.group(), "Ad");
  if (g.group().abelian()) return xi;
  return AlgebraVector(xi.group(), Ad_matrix(g) * xi.coords());
}

AlgebraVector ad(const AlgebraVector& eta, const AlgebraVector& xi) {
  require_same_group(eta.group(), xi.group(), "ad");
  if (eta.group().abelian()) return AlgebraVector::zero(xi.group());
  return AlgebraVector(xi.group(), ad_matrix(eta) * xi.coords());
}

CoAlgebraVector coAd(const GroupElement& g, const CoAlgebraVector& alpha) {
  require_same_group(g.group(), alpha.group(), "coAd");
  if (g.group().abelian()) return alpha;
  return CoAlgebraVector(alpha.group(), Ad_matrix(g).transpose() * alpha.coords());
}

CoAlgebraVector coad(const AlgebraVector& eta, const CoAlgebraVector& alpha) {
  require_same_group(eta.group(), alpha.group(), "coad");
  if (eta.group().abelian()) return CoAlgebraVector::zero(alpha.group());
  return CoAlgebraVector(alpha.group(), ad_matrix(eta).transpose() * alpha.coords());
}

namespace {

// zeta(2m) for m = 1..kZetaCount.
constexpr int kZetaCount = 2600;

const std::vector<double>& even_zetas() {
  static const std::vector<double> table = [] {
    std::vector<double> z(kZetaCount + 1, 1.0);
    const double pi = std::numbers::pi;
    z[1] = pi * pi / 6.0;
    z[2] = pi * pi * pi * pi / 90.0;
    for (int m = 3; m <= kZetaCount; ++m) {
      double s = 0.0;
      for (int k = 1; k <= 2000; ++k) {
        const double t = std::pow(static_cast<double>(k), -2.0 * m);
        s += t;
        if (t < 1e-20 * s) break;
      }
      z[m] = s;
    }
    return z;
  }();
  return table;
}

}  // namespace

double dexpinv_coefficient(int n) {
  if (n < 0) throw UsageError("dexpinv_coefficient: negative order");
  if (n == 0) return 1.0;
  if (n == 1) return 0.5;
  if (n % 2) return 0.0;
  const int m = n / 2;
  if (m > kZetaCount) return 0.0;
  const double sign = (m % 2) ? 1.0 : -1.0;
  return sign * 2.0 * even_zetas()[m] / std::pow(2.0 * std::numbers::pi, n);
}

AlgebraVector dexpinv_op(const AlgebraVector& X, const AlgebraVector& v) {
  require_same_group(X.group(), v.group(), "dexpinv_op");
  const Group g = X.group();
  if (g.abelian()) return v;

  const double two_pi = 2.0 * std::numbers::pi;
  double radius = 0.0;
  for_each_leaf(g, 0, 0, [&](Group leaf, int d, int) {
    if (leaf.kind() == Group::Kind::kSO3) radius = std::max(radius, X.coords().segment<3>(d).norm());
  });
  if (radius >= two_pi) throw DomainError("dexpinv_op: |ad_X| outside the convergence disc (2 pi)");

  // Scaled series: with q_n = (ad_X / 2pi)^n v, the even coefficients become
  // (-1)^(m+1) 2 zeta(2m), which stay bounded for every order.
  const Mat Z = ad_matrix(X);
  const double vnorm = v.coords().norm();
  Vec acc = v.coords() + 0.5 * (Z * v.coords());
  if (vnorm == 0.0 || radius == 0.0) return AlgebraVector(g, acc);

  const auto& zeta = even_zetas();
  const Mat Zs = Z / two_pi;
  Vec q = v.coords();
  for (int m = 1; m <= kZetaCount; ++m) {
    q = Zs * (Zs * q).eval();
    const double c = ((m % 2) ? 2.0 : -2.0) * zeta[m];
    const Vec term = c * q;
    acc += term;
    if (term.norm() < 1e-15 * vnorm) return AlgebraVector(g, acc);
  }
  throw DomainError("dexpinv_op: series did not converge (X too close to 2 pi)");
}

Mat dexpinv_matrix(const AlgebraVector& X) {
  const Group g = X.group();
  Mat D(g.dim(), g.dim());
  for (int i = 0; i < g.dim(); ++i) D.col(i) = dexpinv_op(X, AlgebraVector::basis(g, i)).coords();
  return D;
}

namespace {

const Node& two_factor(Group g, const char* op) {
  const Node& n = node_of(g);
  if (n.kind != Group::Kind::kProduct || n.factors.size() != 2) {
    throw UsageError(std::string(op) + ": group " + n.name + " is not a two-factor product");
  }
  return n;
}

}  // namespace

std::pair<GroupElement, GroupElement> product_split(const GroupElement& g) {
  const Node& n = two_factor(g.group(), "product_split");
  const Group a = n.factors[0], b = n.factors[1];
  return {GroupElement(a, g.rep().segment(0, a.rep_size()), GroupElement::Unchecked{}, g.drift_count()),
          GroupElement(b, g.rep().segment(a.rep_size(), b.rep_size()), GroupElement::Unchecked{},
                       g.drift_count())};
}

GroupElement product_join(const GroupElement& a, const GroupElement& b) {
  const Group g = Group::product({a.group(), b.group()});
  RepVec rep(g.rep_size());
  rep << a.rep(), b.rep();
  return GroupElement(g, std::move(rep), GroupElement::Unchecked{},
                      std::max(a.drift_count(), b.drift_count()));
}

namespace {

template <class V>
std::pair<V, V> split_tangent(const V& x) {
  const Node& n = two_factor(x.group(), "product_split");
  const Group a = n.factors[0], b = n.factors[1];
  return {V(a, x.coords().segment(0, a.dim())), V(b, x.coords().segment(a.dim(), b.dim()))};
}

template <class V>
V join_tangent(const V& a, const V& b) {
  const Group g = Group::product({a.group(), b.group()});
  Vec c(g.dim());
  c << a.coords(), b.coords();
  return V(g, c);
}

}  // namespace

std::pair<AlgebraVector, AlgebraVector> product_split(const AlgebraVector& xi) { return split_tangent(xi); }
AlgebraVector product_join(const AlgebraVector& a, const AlgebraVector& b) { return join_tangent(a, b); }
std::pair<CoAlgebraVector, CoAlgebraVector> product_split(const CoAlgebraVector& xi) { return split_tangent(xi); }
CoAlgebraVector product_join(const CoAlgebraVector& a, const CoAlgebraVector& b) { return join_tangent(a, b); }

double constraint_violation(const GroupElement& x) {
  double err = 0.0;
  for_each_leaf(x.group(), 0, 0, [&](Group leaf, int, int ro) {
    if (leaf.kind() != Group::Kind::kSO3) return;
    const Eigen::Matrix3d R = so3_block(x.rep(), ro);
    err = std::max(err, (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
    err = std::max(err, std::abs(R.determinant() - 1.0));
  });
  return err;
}

}  // namespace dmoc
