#pragma once

// Calderon-Zygmund decomposition at height lambda by dyadic stopping time,
// weak-L1 and L^p norms of grid functions, and the weak-type experiment.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "czo/grid.hpp"
#include "czo/kernel.hpp"
#include "czo/metric.hpp"

namespace czo {

/// b_k = f - mean_{Q_k}(f) on the cells of Q_k.
struct BadPart {
  std::vector<std::size_t> cells;
  std::vector<double> values;
};

struct DecompositionResult {
  double lambda = 0.0;
  Cube root;
  std::vector<Cube> cubes;
  /// Sum of |f| over each cube's cells, from the stopping-time pyramid.
  std::vector<double> abs_sums;
  GridFunction good;
  std::vector<BadPart> bad;

  /// b_k as a grid function on f's grid.
  GridFunction bad_function(std::size_t k) const;
};

/// Stopping-time decomposition of f on `root`, which must be aligned with f's
/// grid (square cells, corner on a cell boundary, side = 2^j cells, inside
/// the box). Children whose |f| average exceeds lambda are selected; others
/// are split down to single cells. Throws InvalidInput if the root average
/// exceeds lambda.
DecompositionResult cz_decompose(const GridFunction& f, double lambda, const Cube& root);

struct DecompositionCheck {
  bool disjoint = true;
  bool averages_bracketed = true;
  bool small_off_cubes = true;
  bool mean_zero = true;
  bool reconstructs = true;
  bool measure_bound = true;
  std::string failure;

  bool passed() const noexcept {
    return disjoint && averages_bracketed && small_off_cubes && mean_zero && reconstructs && measure_bound;
  }
};

/// Verifies the decomposition invariants exactly (no tolerance).
DecompositionCheck check_decomposition(const GridFunction& f, const DecompositionResult& result);

/// sup_v v |{|g| >= v}| over the distinct values v of |g|.
double weak_l1_quasinorm(const GridFunction& g);
/// (sum |g|^p h^n)^{1/p}; throws InvalidInput unless 1 <= p < inf.
double lp_norm(const GridFunction& g, double p);

/// {2^j ||f||_1 / |root| : j = 0..steps-1}.
std::vector<double> lambda_ladder(const GridFunction& f, const Cube& root, int steps = 13);

/// The grid's box as a root cube; requires a cubic box.
Cube grid_root(const GridGeometry& g);

struct SeparationCheck {
  bool passed = true;
  std::size_t pairs = 0;
  double min_ratio = 0.0;
  std::optional<std::pair<Vector, Vector>> witness;
};

/// For each selected cube Q_k, checks rho(x, y) >= 2 sqrt(n) l(Q_k) (1 - 1e-5)
/// for grid points x outside (Q_k)_theta and cell midpoints y of Q_k, using up
/// to `per_cube` sampled pairs per cube.
SeparationCheck check_separation(const HyperCurve& curve, const DecompositionResult& result, double theta,
                                 std::size_t per_cube, std::uint64_t seed);

struct WeakTypeRow {
  std::size_t function = 0;
  double lambda = 0.0;
  std::size_t cubes = 0;
  double superlevel_measure = 0.0;
  double ratio = 0.0;
  double b_star_measure = 0.0;
  /// |{|T g| >= lambda/2}|.
  double good_superlevel_measure = 0.0;
  /// sum_k of the integral of |T b_k| over the complement of B*.
  double bad_outside = 0.0;
};

struct WeakTypeReport {
  std::vector<WeakTypeRow> rows;
  double max_ratio = 0.0;
  /// Per-function max ratio.
  std::vector<double> function_max_ratio;
};

/// For each f and each lambda in the ladder: decompose f, form B* as the
/// union of (Q_k)_theta, apply T_eps to f, g and each b_k on f's grid, and
/// record lambda |{|T_eps f| >= lambda}| / ||f||_1 with the side quantities.
WeakTypeReport weak_type_experiment(const KernelSpec& kernel, const std::vector<GridFunction>& family, double epsilon,
                                    double theta, int ladder_steps = 13);

}  // namespace czo
