#pragma once

// Truncated singular integrals T_eps by midpoint quadrature, branch
// multiplier operators, and recovery of multipliers from a black-box
// difference operator.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "czo/geometry.hpp"
#include "czo/grid.hpp"
#include "czo/kernel.hpp"
#include "czo/partition.hpp"

namespace czo {

/// T_eps f(x) = h^n * sum over input cells y with rho(x, y) >= eps of
/// K(x, y) f(y), evaluated at a fixed list of output points.
///
/// Each row is summed pairwise over the cells in mirrored order (cell k next
/// to cell size-1-k), so integrands that are odd under y -> -y on a symmetric
/// grid cancel exactly. Rows are cached as a dense masked kernel matrix when
/// it has at most 2^24 entries.
class TruncatedOperator {
 public:
  TruncatedOperator(KernelSpec kernel, double epsilon, GridGeometry input, std::vector<Vector> outputs);
  TruncatedOperator(KernelSpec kernel, double epsilon, GridGeometry input, const GridGeometry& output);

  double epsilon() const noexcept { return epsilon_; }
  const GridGeometry& input_geometry() const noexcept { return input_; }
  const std::vector<Vector>& outputs() const noexcept { return outputs_; }
  bool cached() const noexcept { return !matrix_.empty(); }
  /// eps exceeds the input cell width.
  bool reliable() const noexcept { return epsilon_ > input_.max_h(); }
  /// eps >= 4h, the recommended regime.
  bool recommended() const noexcept { return epsilon_ >= 4.0 * input_.max_h(); }

  std::vector<double> apply_values(const GridFunction& f) const;
  /// Requires construction from an output geometry.
  GridFunction apply(const GridFunction& f) const;
  /// T_eps of the function equal to `values[k]` on `cells[k]` and zero
  /// elsewhere.
  std::vector<double> apply_on_cells(const std::vector<std::size_t>& cells, const std::vector<double>& values) const;

 private:
  double entry(std::size_t row, std::size_t cell) const;
  std::size_t cell_at(std::size_t position) const noexcept;
  std::size_t position_of(std::size_t cell) const noexcept;

  KernelSpec kernel_;
  double epsilon_;
  GridGeometry input_;
  std::vector<Vector> outputs_;
  std::vector<Vector> input_points_;
  std::optional<GridGeometry> output_geometry_;
  std::vector<double> matrix_;
};

/// Throws InvalidInput for epsilon <= 0.
GridFunction apply_truncated(const KernelSpec& kernel, const GridFunction& f, double epsilon,
                             const GridGeometry& out);
std::vector<double> apply_truncated_at(const KernelSpec& kernel, const GridFunction& f, double epsilon,
                                       const std::vector<Vector>& points);

struct T0Estimate {
  /// T_{eps_min} f.
  GridFunction result;
  std::vector<double> epsilons;
  /// sup |T_{eps_k} f - T_{eps_{k+1}} f| on the output grid.
  std::vector<double> sup_differences;
  /// eps_k > h for each k.
  std::vector<bool> reliable;
  /// Differences are non-increasing from the second one on.
  bool monotone_tail = true;
};

/// Applies T_eps for a strictly decreasing eps list and reports successive
/// differences. Values of eps at or below h are flagged, not rejected.
T0Estimate estimate_T0(const KernelSpec& kernel, const GridFunction& f, const std::vector<double>& epsilons,
                       const GridGeometry& out);

/// Per-branch multipliers b_i sampled on a grid, forced to zero off D_i.
struct MultiplierField {
  GridGeometry geometry;
  std::vector<std::vector<double>> values;
  std::vector<std::vector<unsigned char>> in_domain;

  static MultiplierField zero(const HyperCurve& curve, const GridGeometry& geometry);
  static MultiplierField sample(const HyperCurve& curve, const GridGeometry& geometry,
                                const std::vector<std::function<double(const Vector&)>>& branches);
  std::size_t branch_count() const noexcept { return values.size(); }
};

/// x -> sum_i b_i(x) f(gamma_i(x)) chi_{D_i}(x) on b's grid; f is read by
/// multilinear interpolation and reads outside its box count in
/// *outside_reads.
GridFunction apply_multiplier(const HyperCurve& curve, const MultiplierField& b, const GridFunction& f,
                              std::size_t* outside_reads = nullptr);

/// A linear map on grid functions.
class OperatorHandle {
 public:
  enum class Kind { truncated, multiplier, sum, black_box };
  using BlackBox = std::function<GridFunction(const GridFunction& f, const GridGeometry& out)>;

  static OperatorHandle truncated(KernelSpec kernel, double epsilon);
  static OperatorHandle multiplier(std::shared_ptr<const HyperCurve> curve, MultiplierField b);
  /// alpha * a + beta * b.
  static OperatorHandle sum(double alpha, OperatorHandle a, double beta, OperatorHandle b);
  static OperatorHandle black_box(BlackBox map);

  Kind kind() const noexcept;
  GridFunction apply(const GridFunction& f, const GridGeometry& out) const;

 private:
  struct Impl;
  explicit OperatorHandle(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;
};

struct RecoveryResult {
  MultiplierField field;
  /// covered[i][cell]: x in D_i and gamma_i(x) lies in an accepted cube.
  std::vector<std::vector<unsigned char>> covered;
  std::size_t uncovered_points = 0;
};

/// b_i(x) = h_j(x) for the lowest-index cube I_j with gamma_i(x) in I_j, where
/// h_j = difference(chi_{I_j}) and chi_{I_j} marks the input cells whose
/// midpoints lie in the closed cube.
RecoveryResult recover_multipliers(const OperatorHandle& difference, const HyperCurve& curve,
                                   const BranchDisjointPartition& partition, const GridGeometry& input,
                                   const GridGeometry& output);

struct MultiplierBound {
  bool passed = true;
  double cap = 0.0;
  /// sup over cells in D_i of |b_i|^2 / |J_{gamma_i}|.
  std::vector<double> branch_sup;
};

MultiplierBound multiplier_bound_check(const HyperCurve& curve, const MultiplierField& b, double cap);

}  // namespace czo
