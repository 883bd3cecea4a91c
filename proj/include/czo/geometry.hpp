#pragma once

// Standard hyper curves: finite unions of graphs {(x, gamma_i(x)) : x in D_i}
// of bi-Lipschitz branch maps, plus dyadic cubes.

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "czo/vector.hpp"

namespace czo {

using BranchMap = std::function<Vector(const Vector&)>;
using ScalarMap = std::function<double(const Vector&)>;

/// One branch gamma_i : D_i -> R^n.
///
/// Invertible branches supply `inverse`, which may extend past the range
/// gamma_i(D_i) (callers re-check membership). A branch that is constant on its
/// domain has no inverse; it sets `constant_value` instead and its preimage of
/// that value is the whole domain.
struct CurveBranch {
  std::string label;
  Region domain;
  BranchMap forward;
  BranchMap inverse;
  ScalarMap jacobian;
  double lipschitz = 1.0;
  std::optional<Vector> constant_value;

  bool is_constant() const noexcept { return constant_value.has_value(); }
};

class HyperCurve {
 public:
  /// Lower clamp on the shared Lipschitz constant, which must exceed 1.
  static constexpr double kMinLipschitz = 1.0 + 1e-9;

  /// `exceptional_points` is the finite set Y of values where two branches
  /// agree at a common parameter. `sampling_box` bounds every sampling-based
  /// computation on unbounded domains. `certified_preimages` marks curves whose
  /// branches have monotone inverses, for which preimage bounding boxes taken
  /// from boundary samples are exact.
  HyperCurve(std::string name, std::size_t dim, std::vector<CurveBranch> branches,
             std::vector<Vector> exceptional_points, Box sampling_box,
             bool certified_preimages = false);

  const std::string& name() const noexcept { return name_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t branch_count() const noexcept { return branches_.size(); }
  const CurveBranch& branch(std::size_t i) const;
  const std::vector<CurveBranch>& branches() const noexcept { return branches_; }
  double c_gamma() const noexcept { return c_gamma_; }
  const std::vector<Vector>& exceptional_points() const noexcept { return exceptional_points_; }
  const Box& sampling_box() const noexcept { return sampling_box_; }
  bool certified_preimages() const noexcept { return certified_preimages_; }

 private:
  std::string name_;
  std::size_t dim_;
  std::vector<CurveBranch> branches_;
  std::vector<Vector> exceptional_points_;
  Box sampling_box_;
  bool certified_preimages_;
  double c_gamma_;
};

/// Tolerance for domain membership tests on user-supplied points.
inline constexpr double kDomainTolerance = 1e-12;

/// gamma_i(x); throws InvalidInput when x is outside D_i.
Vector branch_eval(const HyperCurve& curve, std::size_t i, const Vector& x);

/// gamma_i^{-1}(y); throws InvalidInput when y is outside gamma_i(D_i) or the
/// branch is constant.
Vector branch_inverse(const HyperCurve& curve, std::size_t i, const Vector& y);

/// xi_{i,x}: the point of D_i closest to x (exact clamping).
Vector nearest_domain_point(const HyperCurve& curve, std::size_t i, const Vector& x);

/// The nearest range point together with a parameter in D_i that attains it.
struct RangeProjection {
  Vector point;
  Vector parameter;
};

/// eta_{i,y}: the point of gamma_i(D_i) closest to y.
RangeProjection project_to_range(const HyperCurve& curve, std::size_t i, const Vector& y);
Vector nearest_range_point(const HyperCurve& curve, std::size_t i, const Vector& y);

/// det J_{gamma_i}(x) at an interior point of D_i. Throws InvalidInput off the
/// interior and CurveValidityError on a vanishing determinant.
double branch_jacobian(const HyperCurve& curve, std::size_t i, const Vector& x);

struct BranchValidation {
  std::size_t branch = 0;
  /// Constant branches are not bi-Lipschitz; only the forward ratio is audited.
  bool exempt = false;
  double forward_ratio = 0.0;
  double inverse_ratio = 0.0;
  double min_abs_jacobian = 0.0;
  double max_round_trip = 0.0;
  bool passed = true;
  std::string failure;
  std::optional<std::pair<Vector, Vector>> witness;
};

struct ValidationReport {
  bool passed = true;
  double c_gamma = 0.0;
  std::vector<BranchValidation> branches;
};

/// Audits the declared SHC conditions on `sample_count` random pairs per
/// branch drawn from D_i (within the sampling box).
ValidationReport validate_curve(const HyperCurve& curve, std::size_t sample_count, std::uint64_t seed);

/// 2^{-m} * prod_k [l_k, l_k + 1].
class DyadicCube {
 public:
  DyadicCube() = default;
  DyadicCube(int level, std::vector<std::int64_t> corner);

  int level() const noexcept { return level_; }
  std::size_t dim() const noexcept { return dim_; }
  std::int64_t corner(std::size_t k) const noexcept { return corner_[k]; }
  double side() const noexcept;
  Box box() const;
  Cube cube() const;
  double measure() const;

  bool contains_point(const Vector& p, double tol = 0.0) const;
  /// True when `other` lies inside this cube (equal cubes included).
  bool contains(const DyadicCube& other) const;
  bool interiors_disjoint(const DyadicCube& other) const;
  std::vector<DyadicCube> children() const;
  DyadicCube parent() const;

  /// The level-m cube whose half-open cell [l, l+1) 2^{-m} holds p.
  static DyadicCube containing(const Vector& p, int level);

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) noexcept;
  /// Orders by level, then lexicographically by corner.
  friend std::strong_ordering operator<=>(const DyadicCube& a, const DyadicCube& b) noexcept;

 private:
  int level_ = 0;
  std::size_t dim_ = 0;
  std::int64_t corner_[kMaxDim] = {};
};

std::string to_string(const DyadicCube& cube);

}  // namespace czo
