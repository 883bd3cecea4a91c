#pragma once

// Coarse-grid + golden-section minimization over a closed box. Shared by the
// curve projections (nearest range point) and the distance solver for rho.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "czo/vector.hpp"

namespace czo::detail {

struct SearchResult {
  Vector arg;
  double value = std::numeric_limits<double>::infinity();
};

/// Samples per axis that keeps the coarse grid at `budget` points in total.
inline std::size_t samples_per_axis(std::size_t dim, std::size_t budget) {
  if (dim <= 1) return budget;
  const double m = std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(dim)) + 1e-9);
  return std::max<std::size_t>(3, static_cast<std::size_t>(m));
}

/// Golden-section search of t -> f(t) on [a, b], updating `best` only on a
/// strict improvement.
template <class F>
void golden_refine(double a, double b, int iterations, F&& f, double& best_t, double& best_value) {
  if (!(b > a)) return;
  constexpr double phi = 0.6180339887498949;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  auto consider = [&](double t, double v) {
    if (v < best_value) {
      best_value = v;
      best_t = t;
    }
  };
  consider(c, fc);
  consider(d, fd);
  for (int it = 0; it < iterations; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
      consider(d, fd);
    }
  }
}

/// Minimizes `objective` over `box` (bounded, possibly degenerate): a grid of
/// `per_axis` points per axis including both faces, scanned in lexicographic
/// order with strict improvement (so ties keep the smallest parameter),
/// followed by coordinate-wise golden refinement inside the cell bracket of the
/// best grid point.
template <class F>
SearchResult minimize_on_box(const Box& box, std::size_t per_axis, int refine_iterations, F&& objective) {
  const std::size_t n = box.dim();
  per_axis = std::max<std::size_t>(per_axis, 2);
  Vector step(n);
  std::size_t axis_count[kMaxDim];
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = box.hi[k] - box.lo[k];
    axis_count[k] = w > 0.0 ? per_axis : 1;
    step[k] = w > 0.0 ? w / static_cast<double>(per_axis - 1) : 0.0;
    total *= axis_count[k];
  }

  SearchResult best;
  best.arg = box.lo;
  std::size_t idx[kMaxDim] = {};
  Vector p = box.lo;
  for (std::size_t count = 0; count < total; ++count) {
    for (std::size_t k = 0; k < n; ++k)
      p[k] = idx[k] + 1 == axis_count[k] ? box.hi[k] : box.lo[k] + static_cast<double>(idx[k]) * step[k];
    const double v = objective(p);
    if (v < best.value) {
      best.value = v;
      best.arg = p;
    }
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < axis_count[k]) break;
      idx[k] = 0;
    }
  }

  if (refine_iterations <= 0 || best.value == 0.0) return best;
  const int sweeps = n == 1 ? 1 : 3;
  Vector bracket_lo(n), bracket_hi(n);
  for (std::size_t k = 0; k < n; ++k) {
    bracket_lo[k] = std::max(box.lo[k], best.arg[k] - step[k]);
    bracket_hi[k] = std::min(box.hi[k], best.arg[k] + step[k]);
  }
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      Vector q = best.arg;
      double t = q[k];
      double v = best.value;
      golden_refine(bracket_lo[k], bracket_hi[k], refine_iterations,
                    [&](double x) {
                      q[k] = x;
                      return objective(q);
                    },
                    t, v);
      if (v < best.value) {
        best.value = v;
        best.arg[k] = t;
      }
    }
  }
  return best;
}

}  // namespace czo::detail
