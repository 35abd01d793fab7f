#pragma once

// Matrix Lie group kernel: the real line R^n (translations), the circle S^1,
// SO(3), and finite products of these.
//
// Every algebra carries a fixed basis and its dual carries the biorthogonal
// basis, so the pairing <alpha, xi> is the dot product of coordinates.
//   R^n : standard basis
//   S^1 : the generator d/dtheta (coordinate = angle rate)
//   SO3 : the skew generators, hat(e_i) x = e_i x x
// Product coordinates are the concatenation of the factor coordinates.

#include <Eigen/Core>

#include <string>
#include <utility>
#include <vector>

#include "dmoc/errors.hpp"

namespace dmoc {

inline constexpr int kMaxAlgebraDim = 8;
inline constexpr int kMaxRepSize = 32;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAlgebraDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAlgebraDim, kMaxAlgebraDim>;
using RepVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxRepSize, 1>;

/// Handle to an interned, immutable group descriptor. Two handles compare
/// equal iff they describe the same group, so the handle doubles as group id.
class Group {
 public:
  enum class Kind { kRealLine, kCircle, kSO3, kProduct };

  Group() = default;

  static Group real_line(int n = 1);
  static Group circle();
  static Group so3();
  static Group product(const std::vector<Group>& factors);

  bool valid() const { return node_ != nullptr; }
  Kind kind() const;
  int dim() const;
  int rep_size() const;
  bool abelian() const;
  const std::string& name() const;
  /// Factors of a product group; empty for the primitive groups.
  const std::vector<Group>& factors() const;

  friend bool operator==(Group a, Group b) { return a.node_ == b.node_; }
  friend bool operator!=(Group a, Group b) { return a.node_ != b.node_; }

  struct Node;
  const Node* node() const { return node_; }

 private:
  explicit Group(const Node* n) : node_(n) {}
  const Node* node_ = nullptr;
};

void require_same_group(Group a, Group b, const char* op);

/// Coordinates in the algebra basis (Tag = AlgebraTag) or in the dual basis
/// (Tag = CoAlgebraTag). The two are distinct types so that a momentum can
/// never be passed where a velocity is expected.
template <class Tag>
class TangentVector {
 public:
  TangentVector() = default;
  TangentVector(Group g, const Vec& coords) : group_(g), coords_(coords) {
    if (!g.valid() || coords.size() != g.dim()) {
      throw UsageError("tangent vector: coordinate count does not match group " +
                       (g.valid() ? g.name() : std::string("<none>")));
    }
  }

  static TangentVector zero(Group g) { return TangentVector(g, Vec::Zero(g.dim())); }
  static TangentVector basis(Group g, int i) {
    Vec c = Vec::Zero(g.dim());
    c(i) = 1.0;
    return TangentVector(g, c);
  }
  static TangentVector scalar(Group g, double v) {
    Vec c(1);
    c(0) = v;
    return TangentVector(g, c);
  }

  Group group() const { return group_; }
  const Vec& coords() const { return coords_; }
  int dim() const { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_(i); }
  double norm() const { return coords_.norm(); }

  TangentVector& operator+=(const TangentVector& o) {
    require_same_group(group_, o.group_, "+");
    coords_ += o.coords_;
    return *this;
  }
  TangentVector& operator-=(const TangentVector& o) {
    require_same_group(group_, o.group_, "-");
    coords_ -= o.coords_;
    return *this;
  }
  TangentVector& operator*=(double s) {
    coords_ *= s;
    return *this;
  }
  friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
  friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
  friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
  friend TangentVector operator*(TangentVector a, double s) { return a *= s; }
  friend TangentVector operator-(TangentVector a) {
    a.coords_ = -a.coords_;
    return a;
  }

 private:
  Group group_;
  Vec coords_;
};

struct AlgebraTag {};
struct CoAlgebraTag {};
using AlgebraVector = TangentVector<AlgebraTag>;
using CoAlgebraVector = TangentVector<CoAlgebraTag>;

/// <alpha, xi>; exactly the coordinate dot product.
double pair(const CoAlgebraVector& alpha, const AlgebraVector& xi);

/// A point of a group. S^1 stores the wrapped angle in (-pi, pi], R^n its
/// coordinates, SO(3) the column-major rotation matrix; products concatenate.
class GroupElement {
 public:
  GroupElement() = default;
  /// Validates the defining constraint to 1e-10.
  GroupElement(Group g, const RepVec& rep);

  static GroupElement identity(Group g);
  static GroupElement real(const Vec& coords);
  static GroupElement real(double x);
  static GroupElement angle(double theta);
  static GroupElement rotation(const Eigen::Matrix3d& R);

  Group group() const { return group_; }
  const RepVec& rep() const { return rep_; }

  double angle() const;                 // S^1
  Vec coords() const;                   // R^n
  double scalar() const;                // S^1 angle or R^1 coordinate
  Eigen::Matrix3d rotation() const;     // SO(3)

  /// Composes since the last re-orthonormalization of the SO(3) blocks.
  int drift_count() const { return drift_; }

  struct Unchecked {};
  GroupElement(Group g, RepVec rep, Unchecked, int drift = 0)
      : group_(g), rep_(std::move(rep)), drift_(drift) {}

 private:
  Group group_;
  RepVec rep_;
  int drift_ = 0;
};

/// Composes performed on an SO(3) representation before it is projected back
/// onto the group.
inline constexpr int kReorthonormalizeEvery = 100;

double wrap_angle(double a);

Eigen::Matrix3d hat(const Eigen::Vector3d& w);
Eigen::Vector3d vee(const Eigen::Matrix3d& W);
/// Nearest rotation in Frobenius norm (polar factor).
Eigen::Matrix3d project_to_so3(const Eigen::Matrix3d& M);

GroupElement compose(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& g);
GroupElement exp(const AlgebraVector& X);
/// Principal logarithm. Throws DomainError at or beyond a rotation angle of pi.
AlgebraVector log(const GroupElement& g);

/// Coordinate matrix of Ad_g (identity on abelian factors).
Mat Ad_matrix(const GroupElement& g);
/// Coordinate matrix of ad_eta (zero on abelian factors).
Mat ad_matrix(const AlgebraVector& eta);

AlgebraVector Ad(const GroupElement& g, const AlgebraVector& xi);
AlgebraVector ad(const AlgebraVector& eta, const AlgebraVector& xi);
/// Ad*_g, defined by <coAd(g, a), xi> = <a, Ad_g xi>.
CoAlgebraVector coAd(const GroupElement& g, const CoAlgebraVector& alpha);
/// ad*_eta, defined by <coad(eta, a), xi> = <a, ad_eta xi>.
CoAlgebraVector coad(const AlgebraVector& eta, const CoAlgebraVector& alpha);

/// z e^z / (e^z - 1) evaluated at z = ad_X and applied to v. This is the
/// derivative of Y -> log(exp(X) exp(Y)) at Y = 0. Identity on abelian groups.
/// Throws DomainError when the spectral radius of ad_X reaches 2 pi.
AlgebraVector dexpinv_op(const AlgebraVector& X, const AlgebraVector& v);
/// Matrix of v -> dexpinv_op(X, v).
Mat dexpinv_matrix(const AlgebraVector& X);

/// Coefficient of z^n in the series of z e^z / (e^z - 1).
double dexpinv_coefficient(int n);

std::pair<GroupElement, GroupElement> product_split(const GroupElement& g);
GroupElement product_join(const GroupElement& a, const GroupElement& b);
std::pair<AlgebraVector, AlgebraVector> product_split(const AlgebraVector& xi);
AlgebraVector product_join(const AlgebraVector& a, const AlgebraVector& b);
std::pair<CoAlgebraVector, CoAlgebraVector> product_split(const CoAlgebraVector& xi);
CoAlgebraVector product_join(const CoAlgebraVector& a, const CoAlgebraVector& b);

/// Max-norm violation of the group constraint (0 for R^n and S^1).
double constraint_violation(const GroupElement& g);

}  // namespace dmoc
