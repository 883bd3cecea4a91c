#pragma once

// Kernels K(x, y) singular on a hyper curve and numerical audits of their
// size, Hoelder regularity and Hoermander integrals.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "czo/geometry.hpp"

namespace czo {

using KernelFunction = std::function<double(const Vector& x, const Vector& y)>;

struct KernelSpec {
  std::string name;
  std::shared_ptr<const HyperCurve> curve;
  KernelFunction evaluate;
  /// Claimed A in |K(x,y)| <= A / rho^n.
  double size_constant = 1.0;
  /// Claimed A in the two Hoelder conditions. Kept apart from the size
  /// constant because the smallest admissible values differ.
  double regularity_constant = 1.0;
  double delta = 1.0;
  /// False for kernels that only claim the size condition.
  bool regularity_audited = true;

  const HyperCurve& singular_curve() const { return *curve; }
};

/// K(x, y); throws SingularityError when rho(x, y) < 1e-12 or the value is not
/// finite.
double kernel_eval(const KernelSpec& kernel, const Vector& x, const Vector& y);

struct SizeAudit {
  double empirical = 0.0;
  double declared = 0.0;
  bool passed = true;
  std::size_t samples = 0;
  std::optional<std::pair<Vector, Vector>> witness;
};

/// sup |K(x,y)| rho(x,y)^n over `sample_count` uniform pairs in box x box
/// (default [-8, 8]^n), with the best samples refined by pattern search.
/// Passes iff the supremum is <= size_constant (1 + 1e-4).
SizeAudit audit_size(const KernelSpec& kernel, std::size_t sample_count, std::uint64_t seed,
                     std::optional<Box> box = std::nullopt);

struct RegularityAudit {
  /// Suprema of |K(x,y) - K(x,y')| rho^{n+delta} / |y-y'|^delta and the
  /// x-analogue.
  double a_y = 0.0;
  double a_x = 0.0;
  double declared = 0.0;
  bool passed = true;
  bool audited = true;
  std::size_t triples = 0;
};

/// Samples triples with |y - y'| <= rho(x,y)/2 (and |x - x'| <= rho(x,y)/2),
/// refines the best ones, and passes iff both suprema are <=
/// regularity_constant (1 + 1e-3).
RegularityAudit audit_regularity(const KernelSpec& kernel, std::size_t triple_count, std::uint64_t seed,
                                 std::optional<Box> box = std::nullopt);

struct HormanderResult {
  /// Max over pairs.
  double value = 0.0;
  std::vector<double> per_pair;
  /// Analytic bound on the part of the integral outside the box.
  double tail_bound = 0.0;
  bool adjoint = false;
};

/// Midpoint-rule integral over the cells of `box` (grid_n cells per axis) of
/// |K(x,y) - K(x,z)| on {rho(x,y) >= 2|y-z|}, or with `adjoint` of
/// |K(y,x) - K(z,x)| on {rho(y,x) >= 2|y-z|}; maximum over pairs.
HormanderResult hormander_constant(const KernelSpec& kernel, const std::vector<std::pair<Vector, Vector>>& pairs,
                                   const Box& box, std::size_t grid_n, bool adjoint = false);

}  // namespace czo
