#include "czo/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "czo/errors.hpp"
#include "czo/numeric.hpp"
#include "czo/operator.hpp"
#include "czo/random.hpp"

namespace czo {
namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

struct RootLayout {
  std::size_t n = 0;
  std::size_t offset[kMaxDim] = {};
  std::size_t cells = 0;  // root side in cells, a power of two
  int levels = 0;         // log2(cells)
  double h = 0.0;
};

RootLayout layout_root(const GridGeometry& g, const Cube& root) {
  RootLayout L;
  L.n = g.dim();
  if (root.dim() != L.n) throw InvalidInput("root cube dimension does not match the grid");
  L.h = g.h(0);
  for (std::size_t k = 1; k < L.n; ++k)
    if (g.h(k) != L.h) throw InvalidInput("decomposition needs square grid cells");
  const double side_cells = root.side / L.h;
  if (!(side_cells >= 1.0) || side_cells != std::floor(side_cells) || !is_power_of_two(static_cast<std::size_t>(side_cells)))
    throw InvalidInput("root side must be a power-of-two multiple of the cell width");
  L.cells = static_cast<std::size_t>(side_cells);
  while ((std::size_t{1} << L.levels) < L.cells) ++L.levels;
  for (std::size_t k = 0; k < L.n; ++k) {
    const double off = (root.lower[k] - g.box.lo[k]) / L.h;
    if (off < 0.0 || off != std::floor(off)) throw InvalidInput("root cube is not aligned with the grid");
    L.offset[k] = static_cast<std::size_t>(off);
    if (L.offset[k] + L.cells > g.cells_per_axis) throw InvalidInput("root cube extends past the grid");
  }
  return L;
}

// Sums of |f| over the dyadic subcubes of the root, finest level first.
// sums[j] holds (cells >> j)^n entries in row-major order.
std::vector<std::vector<double>> abs_pyramid(const GridFunction& f, const RootLayout& L) {
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(L.levels) + 1);
  const GridGeometry& g = f.geometry();
  std::size_t count = 1;
  for (std::size_t k = 0; k < L.n; ++k) count *= L.cells;
  sums[0].resize(count);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t rem = c, idx[kMaxDim];
    for (std::size_t k = L.n; k-- > 0;) {
      idx[k] = L.offset[k] + rem % L.cells;
      rem /= L.cells;
    }
    sums[0][c] = std::fabs(f[g.flat_index(idx)]);
  }
  for (int j = 1; j <= L.levels; ++j) {
    const std::size_t side = L.cells >> j, child_side = side * 2;
    std::size_t total = 1;
    for (std::size_t k = 0; k < L.n; ++k) total *= side;
    sums[j].assign(total, 0.0);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rem = c, idx[kMaxDim];
      for (std::size_t k = L.n; k-- > 0;) {
        idx[k] = rem % side;
        rem /= side;
      }
      double s = 0.0;
      for (std::size_t mask = 0; mask < (std::size_t{1} << L.n); ++mask) {
        std::size_t child = 0;
        for (std::size_t k = 0; k < L.n; ++k) child = child * child_side + 2 * idx[k] + ((mask >> (L.n - 1 - k)) & 1U);
        s += sums[j - 1][child];
      }
      sums[j][c] = s;
    }
  }
  return sums;
}

double root_average(const std::vector<std::vector<double>>& sums, const RootLayout& L) {
  const double root_count = std::pow(static_cast<double>(L.cells), static_cast<double>(L.n));
  return sums[static_cast<std::size_t>(L.levels)][0] / root_count;
}

}  // namespace

GridFunction DecompositionResult::bad_function(std::size_t k) const {
  GridFunction b(good.geometry());
  const BadPart& part = bad.at(k);
  for (std::size_t i = 0; i < part.cells.size(); ++i) b[part.cells[i]] = part.values[i];
  return b;
}

DecompositionResult cz_decompose(const GridFunction& f, double lambda, const Cube& root) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("lambda must be positive");
  const GridGeometry& g = f.geometry();
  const RootLayout L = layout_root(g, root);
  const auto sums = abs_pyramid(f, L);
  const double root_avg = root_average(sums, L);
  if (root_avg > lambda)
    throw InvalidInput("average of |f| over the root is " + std::to_string(root_avg) + ", above lambda = " +
                       std::to_string(lambda));

  DecompositionResult out;
  out.lambda = lambda;
  out.root = root;
  out.good = f;

  struct Node {
    int level;
    std::size_t idx[kMaxDim];
  };
  std::vector<Node> stack;
  Node top{L.levels, {}};
  stack.push_back(top);
  const std::size_t children = std::size_t{1} << L.n;
  while (!stack.empty()) {
    const Node node = stack.back();
    stack.pop_back();
    if (node.level == 0) continue;
    const int level = node.level - 1;
    const std::size_t side = L.cells >> level;
    const double count = std::pow(static_cast<double>(std::size_t{1} << level), static_cast<double>(L.n));
    std::vector<Node> descend;
    // Children in lexicographic order; pushed reversed so they pop in order.
    for (std::size_t mask = 0; mask < children; ++mask) {
      Node child{level, {}};
      std::size_t flat = 0;
      for (std::size_t k = 0; k < L.n; ++k) {
        child.idx[k] = 2 * node.idx[k] + ((mask >> (L.n - 1 - k)) & 1U);
        flat = flat * side + child.idx[k];
      }
      const double sum = sums[static_cast<std::size_t>(level)][flat];
      if (sum / count > lambda) {
        const std::size_t width = std::size_t{1} << level;
        Cube q{Vector(L.n), static_cast<double>(width) * L.h};
        for (std::size_t k = 0; k < L.n; ++k)
          q.lower[k] = g.box.lo[k] + static_cast<double>(L.offset[k] + child.idx[k] * width) * L.h;
        BadPart part;
        std::size_t cell_count = 1;
        for (std::size_t k = 0; k < L.n; ++k) cell_count *= width;
        part.cells.reserve(cell_count);
        for (std::size_t c = 0; c < cell_count; ++c) {
          std::size_t rem = c, idx[kMaxDim];
          for (std::size_t k = L.n; k-- > 0;) {
            idx[k] = L.offset[k] + child.idx[k] * width + rem % width;
            rem /= width;
          }
          part.cells.push_back(g.flat_index(idx));
        }
        std::vector<double> vals(cell_count);
        for (std::size_t c = 0; c < cell_count; ++c) vals[c] = f[part.cells[c]];
        const double mean = pairwise_sum(vals) / static_cast<double>(cell_count);
        part.values.resize(cell_count);
        for (std::size_t c = 0; c < cell_count; ++c) {
          part.values[c] = vals[c] - mean;
          out.good[part.cells[c]] = mean;
        }
        out.cubes.push_back(q);
        out.abs_sums.push_back(sum);
        out.bad.push_back(std::move(part));
      } else {
        descend.push_back(child);
      }
    }
    for (auto it = descend.rbegin(); it != descend.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

DecompositionCheck check_decomposition(const GridFunction& f, const DecompositionResult& r) {
  DecompositionCheck chk;
  auto fail = [&](bool& flag, const std::string& why) {
    if (flag && chk.failure.empty()) chk.failure = why;
    flag = false;
  };
  const GridGeometry& g = f.geometry();
  const RootLayout L = layout_root(g, r.root);
  const double lambda = r.lambda;
  const double two_n = std::ldexp(1.0, static_cast<int>(L.n));

  std::vector<int> owner(g.size(), -1);
  double covered_cells = 0.0;
  for (std::size_t k = 0; k < r.bad.size(); ++k) {
    const BadPart& part = r.bad[k];
    for (std::size_t c : part.cells) {
      if (owner[c] >= 0) fail(chk.disjoint, "cubes " + std::to_string(owner[c]) + " and " + std::to_string(k) + " overlap");
      owner[c] = static_cast<int>(k);
    }
    covered_cells += static_cast<double>(part.cells.size());
    const double avg = r.abs_sums[k] / static_cast<double>(part.cells.size());
    if (!(avg >= lambda && avg <= two_n * lambda))
      fail(chk.averages_bracketed, "cube " + std::to_string(k) + " has average " + std::to_string(avg));
    if (pairwise_sum(part.values) != 0.0) fail(chk.mean_zero, "b_" + std::to_string(k) + " does not integrate to 0");
  }

  std::vector<double> bad_at(g.size(), 0.0);
  for (const BadPart& part : r.bad)
    for (std::size_t i = 0; i < part.cells.size(); ++i) bad_at[part.cells[i]] = part.values[i];

  double root_abs = 0.0;
  std::vector<double> root_terms;
  const Box rb = r.root.box();
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (r.good[c] + bad_at[c] != f[c]) fail(chk.reconstructs, "f != g + sum b_k at cell " + std::to_string(c));
    const Vector x = g.midpoint(c);
    if (!rb.interior_contains(x)) continue;
    root_terms.push_back(std::fabs(f[c]));
    if (owner[c] < 0 && std::fabs(f[c]) > lambda)
      fail(chk.small_off_cubes, "|f| > lambda off the cubes at cell " + std::to_string(c));
  }
  root_abs = pairwise_sum(root_terms);
  if (covered_cells * lambda > root_abs) fail(chk.measure_bound, "sum |Q_k| exceeds ||f||_1 / lambda");
  return chk;
}

double weak_l1_quasinorm(const GridFunction& g) {
  std::vector<double> a(g.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::fabs(g[i]);
  std::sort(a.begin(), a.end(), std::greater<>());
  const double vol = g.geometry().cell_volume();
  double best = 0.0;
  for (std::size_t i = 0; i < a.size() && a[i] > 0.0;) {
    std::size_t j = i;
    while (j < a.size() && a[j] == a[i]) ++j;
    best = std::max(best, a[i] * static_cast<double>(j) * vol);
    i = j;
  }
  return best;
}

double lp_norm(const GridFunction& g, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("p must satisfy 1 <= p < infinity");
  std::vector<double> t(g.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double a = std::fabs(g[i]);
    t[i] = p == 1.0 ? a : p == 2.0 ? a * a : std::pow(a, p);
  }
  const double s = pairwise_sum(t) * g.geometry().cell_volume();
  return p == 1.0 ? s : p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

std::vector<double> lambda_ladder(const GridFunction& f, const Cube& root, int steps) {
  // The pyramid average is the value cz_decompose compares against; taking
  // the max keeps the first rung admissible despite rounding.
  const RootLayout L = layout_root(f.geometry(), root);
  const double base = std::max(lp_norm(f, 1.0) / root.measure(), root_average(abs_pyramid(f, L), L));
  std::vector<double> out;
  for (int j = 0; j < steps; ++j) out.push_back(std::ldexp(base, j));
  return out;
}

Cube grid_root(const GridGeometry& g) {
  for (std::size_t k = 1; k < g.dim(); ++k)
    if (g.box.width(k) != g.box.width(0)) throw InvalidInput("grid box is not a cube");
  return {g.box.lo, g.box.width(0)};
}

SeparationCheck check_separation(const HyperCurve& curve, const DecompositionResult& result, double theta,
                                 std::size_t per_cube, std::uint64_t seed) {
  if (!(theta > qtheta_min_theta(curve))) throw InvalidInput("theta is below 2 sqrt(n) + 5 sqrt(n) c_gamma");
  const GridGeometry& g = result.good.geometry();
  const double root_n = std::sqrt(static_cast<double>(g.dim()));
  SeparationCheck out;
  out.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < result.cubes.size(); ++k) {
    const EnlargedCube qt = enlarged_cube(curve, result.cubes[k], theta);
    std::vector<std::size_t> outside;
    for (std::size_t c = 0; c < g.size(); ++c)
      if (!qt.contains(g.midpoint(c))) outside.push_back(c);
    if (outside.empty()) continue;
    const auto& cells = result.bad[k].cells;
    const double target = 2.0 * root_n * result.cubes[k].side;
    Rng rng(seed, k);
    for (std::size_t s = 0; s < per_cube; ++s) {
      const Vector x = g.midpoint(outside[rng.index(outside.size())]);
      const Vector y = g.midpoint(cells[rng.index(cells.size())]);
      const double ratio = rho(curve, x, y).value / target;
      ++out.pairs;
      if (ratio < out.min_ratio) out.min_ratio = ratio;
      if (ratio < 1.0 - 1e-5 && out.passed) {
        out.passed = false;
        out.witness = std::make_pair(x, y);
      }
    }
  }
  return out;
}

WeakTypeReport weak_type_experiment(const KernelSpec& kernel, const std::vector<GridFunction>& family, double epsilon,
                                    double theta, int ladder_steps) {
  if (family.empty()) throw InvalidInput("function family is empty");
  const HyperCurve& curve = kernel.singular_curve();
  if (!(theta > qtheta_min_theta(curve))) throw InvalidInput("theta is below 2 sqrt(n) + 5 sqrt(n) c_gamma");

  std::vector<std::shared_ptr<const TruncatedOperator>> ops;
  auto op_for = [&](const GridGeometry& g) {
    for (const auto& op : ops)
      if (op->input_geometry() == g) return op;
    ops.push_back(std::make_shared<const TruncatedOperator>(kernel, epsilon, g, g));
    return ops.back();
  };

  WeakTypeReport report;
  for (std::size_t fi = 0; fi < family.size(); ++fi) {
    const GridFunction& f = family[fi];
    const GridGeometry& g = f.geometry();
    const double vol = g.cell_volume();
    const Cube root = grid_root(g);
    const auto op = op_for(g);
    const std::vector<double> tf = op->apply_values(f);
    const double norm1 = lp_norm(f, 1.0);
    double fmax = 0.0;

    for (double lambda : lambda_ladder(f, root, ladder_steps)) {
      WeakTypeRow row;
      row.function = fi;
      row.lambda = lambda;
      if (norm1 == 0.0) {
        report.rows.push_back(row);
        continue;
      }
      std::size_t above = 0;
      for (double v : tf)
        if (std::fabs(v) >= lambda) ++above;
      row.superlevel_measure = static_cast<double>(above) * vol;
      row.ratio = lambda * row.superlevel_measure / norm1;

      const DecompositionResult dec = cz_decompose(f, lambda, root);
      row.cubes = dec.cubes.size();
      std::vector<unsigned char> in_b_star(g.size(), 0);
      for (const Cube& q : dec.cubes) {
        const EnlargedCube qt = enlarged_cube(curve, q, theta);
        for (std::size_t c = 0; c < g.size(); ++c)
          if (!in_b_star[c] && qt.contains(g.midpoint(c))) in_b_star[c] = 1;
      }
      std::size_t star_cells = 0;
      for (unsigned char m : in_b_star) star_cells += m;
      row.b_star_measure = static_cast<double>(star_cells) * vol;

      const std::vector<double> tg = op->apply_values(dec.good);
      std::size_t good_above = 0;
      for (double v : tg)
        if (std::fabs(v) >= lambda / 2.0) ++good_above;
      row.good_superlevel_measure = static_cast<double>(good_above) * vol;

      double outside = 0.0;
      for (const BadPart& part : dec.bad) {
        const std::vector<double> tb = op->apply_on_cells(part.cells, part.values);
        for (std::size_t c = 0; c < g.size(); ++c)
          if (!in_b_star[c]) outside += std::fabs(tb[c]) * vol;
      }
      row.bad_outside = outside;
      fmax = std::max(fmax, row.ratio);
      report.rows.push_back(row);
    }
    report.function_max_ratio.push_back(fmax);
    report.max_ratio = std::max(report.max_ratio, fmax);
  }
  return report;
}

}  // namespace czo
