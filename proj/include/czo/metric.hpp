#pragma once

// Distances from (x, y) in R^{2n} to the graph of a hyper curve, their
// projection-based surrogates, and curve-adapted enlargements of cubes.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "czo/geometry.hpp"

namespace czo {

struct MetricValue {
  double value = 0.0;
  std::size_t branch = 0;
};

/// rho_i(x, y): distance from (x, y) to the graph of branch i.
MetricValue rho_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y);
/// min_i rho_i; ties go to the smallest branch index.
MetricValue rho(const HyperCurve& curve, const Vector& x, const Vector& y);

/// |x - xi_{i,x}| + |y - gamma_i(xi_{i,x})|.
double rho_tilde_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y);
MetricValue rho_tilde(const HyperCurve& curve, const Vector& x, const Vector& y);

/// |y - eta_{i,y}| + |x - gamma_i^{-1}(eta_{i,y})|. For a constant branch the
/// preimage of eta is the whole domain and its point nearest x is used.
double rho_tilde_star_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y);
MetricValue rho_tilde_star(const HyperCurve& curve, const Vector& x, const Vector& y);

/// rho(x, y) >= threshold. Uses rho_i <= rho~_i <= 2(c+1) rho_i to skip the
/// distance solver away from the threshold band; agrees with
/// rho(...).value >= threshold otherwise.
bool rho_at_least(const HyperCurve& curve, const Vector& x, const Vector& y, double threshold);

struct EquivalenceReport {
  bool passed = true;
  std::size_t pair_count = 0;
  /// 2 (c_gamma + 1).
  double bound = 0.0;
  /// Max of rho~/rho and rho~*/rho, globally and per branch.
  double max_tilde_ratio = 0.0;
  double max_star_ratio = 0.0;
  /// Min of rho~/rho and rho~*/rho (must stay >= 1).
  double min_tilde_ratio = 0.0;
  double min_star_ratio = 0.0;
  std::vector<double> branch_max_tilde_ratio;
  std::vector<double> branch_max_star_ratio;
  std::string failure;
  std::optional<std::pair<Vector, Vector>> witness;
};

/// Samples `pair_count` uniform pairs from `box` x `box` (the curve's sampling
/// box when omitted) and checks rho <= rho~ <= 2(c+1) rho and
/// rho <= rho~* <= 2(c+1) rho per branch and globally, with slack 1 + 1e-5.
EquivalenceReport check_equivalence(const HyperCurve& curve, std::size_t pair_count, std::uint64_t seed,
                                    std::optional<Box> box = std::nullopt);

/// One branch's part Q_{i,theta} of an enlarged cube.
struct EnlargedPiece {
  std::size_t branch = 0;
  bool empty = true;
  /// d(Q, gamma_i(D_i)) and a point of Q attaining it.
  double range_distance = 0.0;
  Vector nearest_in_cube;
  /// Constant branches pull back to their whole domain, so their piece is a
  /// neighbourhood of D_i and usually unbounded.
  bool whole_domain = false;
  bool unbounded = false;
  /// Parameters gamma_i^{-1}(eta_{i,y}) for y sampled in Q. In one dimension
  /// the anchor set is the interval [anchor_lo, anchor_hi].
  std::vector<Vector> anchors;
  Vector anchor_lo;
  Vector anchor_hi;
  /// Extra membership radius covering the gaps between sampled anchors (zero
  /// in one dimension).
  double anchor_slack = 0.0;
  /// Ball {|x - ball_center| <= ball_radius} containing the piece.
  Vector ball_center;
  double ball_radius = 0.0;
};

class EnlargedCube {
 public:
  EnlargedCube(const HyperCurve& curve, Cube base, double theta, std::vector<EnlargedPiece> pieces);

  const Cube& base() const noexcept { return base_; }
  double theta() const noexcept { return theta_; }
  const std::vector<EnlargedPiece>& pieces() const noexcept { return pieces_; }
  /// Sum of covering-ball volumes of the nonempty pieces (infinite when a
  /// piece is unbounded).
  double measure_upper_bound() const noexcept { return measure_upper_bound_; }

  bool piece_contains(std::size_t i, const Vector& x) const;
  bool contains(const Vector& x) const;
  /// Bounding box of the covering balls, or nullopt if some piece is
  /// unbounded or every piece is empty.
  std::optional<Box> covering_box() const;

 private:
  const HyperCurve* curve_;
  Cube base_;
  double theta_;
  std::vector<EnlargedPiece> pieces_;
  double measure_upper_bound_ = 0.0;
};

/// Builds Q_theta = union_i Q_{i,theta}. Throws InvalidInput for theta <= 1.
EnlargedCube enlarged_cube(const HyperCurve& curve, const Cube& q, double theta);

/// The covering constant C with |Q_theta| <= C theta^n |Q|:
/// omega_n * r * (1 + 6 sqrt(n) c / theta)^n.
double qtheta_covering_constant(const HyperCurve& curve, double theta);

struct QThetaReport {
  bool passed = true;
  bool measure_passed = true;
  bool separation_passed = true;
  double measured = 0.0;
  /// 99% confidence half-width of the Monte-Carlo measure.
  double half_width = 0.0;
  double bound = 0.0;
  std::size_t probes = 0;
  /// min rho(x, y) / (2 sqrt(n) l(Q)) over probes.
  double min_separation_ratio = 0.0;
  std::string failure;
  std::optional<std::pair<Vector, Vector>> witness;
};

/// Checks |Q_theta| <= C theta^n |Q| by Monte Carlo (`mc_samples` points) and
/// rho(x, y) >= 2 sqrt(n) l(Q) (1 - 1e-5) on `probe_count` pairs with
/// x outside Q_theta and y in Q. Requires theta > 2 sqrt(n) + 5 sqrt(n) c.
QThetaReport check_qtheta(const HyperCurve& curve, const Cube& q, double theta, std::size_t probe_count,
                          std::uint64_t seed, std::size_t mc_samples = 1000000);

/// Lower bound on theta for the separation property.
double qtheta_min_theta(const HyperCurve& curve);

}  // namespace czo
