#include "czo/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "czo/errors.hpp"
#include "czo/metric.hpp"
#include "czo/numeric.hpp"
#include "czo/parallel.hpp"
#include "czo/random.hpp"

namespace czo {
namespace {

constexpr double kSingularRho = 1e-12;
constexpr std::size_t kRefineStarts = 16;

Box default_audit_box(const KernelSpec& k) { return Box::symmetric(k.singular_curve().dim(), 8.0); }

// Compass search maximizing f over the box lo <= z <= hi. Returns the best
// value; f returns -inf at inadmissible points.
template <class F>
double pattern_maximize(std::vector<double>& z, const std::vector<double>& lo, const std::vector<double>& hi,
                        double step, F&& f) {
  double best = f(z);
  double scale = 0.0;
  for (double v : z) scale = std::max(scale, std::fabs(v));
  const double min_step = 1e-13 * (1.0 + scale);
  for (int it = 0; it < 300 && step > min_step; ++it) {
    bool improved = false;
    for (std::size_t k = 0; k < z.size(); ++k) {
      for (double sign : {-1.0, 1.0}) {
        std::vector<double> trial = z;
        trial[k] = std::clamp(z[k] + sign * step, lo[k], hi[k]);
        if (trial[k] == z[k]) continue;
        const double v = f(trial);
        if (v > best) {
          best = v;
          z = std::move(trial);
          improved = true;
        }
      }
    }
    step *= improved ? 1.5 : 0.5;
  }
  return best;
}

Vector slice(const std::vector<double>& z, std::size_t offset, std::size_t n) {
  Vector v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = z[offset + k];
  return v;
}

void append(std::vector<double>& z, const Vector& v) { z.insert(z.end(), v.begin(), v.end()); }

Vector random_direction(Rng& rng, std::size_t n) {
  if (n == 1) return Vector{rng.uniform() < 0.5 ? -1.0 : 1.0};
  Vector u(n);
  double s = 0.0;
  do {
    for (std::size_t k = 0; k < n; ++k) u[k] = rng.uniform(-1.0, 1.0);
    s = norm_squared(u);
  } while (s > 1.0 || s < 1e-8);
  return u * (1.0 / std::sqrt(s));
}

std::vector<std::size_t> top_indices(const std::vector<double>& values, std::size_t count) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  count = std::min(count, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(),
                    [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); });
  order.resize(count);
  return order;
}

double regularity_ratio(const KernelSpec& k, const Vector& x, const Vector& y, double s, const Vector& u,
                        bool move_x) {
  const HyperCurve& curve = k.singular_curve();
  const double r = rho(curve, x, y).value;
  if (!(r > kSingularRho) || !(s > 0.0)) return -std::numeric_limits<double>::infinity();
  const Vector shift = u * (s * r / 2.0);
  const double step = norm(shift);
  if (!(step > 0.0)) return -std::numeric_limits<double>::infinity();
  const double diff = move_x ? k.evaluate(x, y) - k.evaluate(x + shift, y) : k.evaluate(x, y) - k.evaluate(x, y + shift);
  const double n = static_cast<double>(curve.dim());
  return std::fabs(diff) * std::pow(r, n + k.delta) / std::pow(step, k.delta);
}

}  // namespace

double kernel_eval(const KernelSpec& kernel, const Vector& x, const Vector& y) {
  const HyperCurve& curve = kernel.singular_curve();
  if (x.dim() != curve.dim() || y.dim() != curve.dim()) throw InvalidInput("kernel arguments have the wrong dimension");
  if (!rho_at_least(curve, x, y, kSingularRho))
    throw SingularityError("kernel '" + kernel.name + "' evaluated on its singular set at x = (" + to_string(x) +
                           "), y = (" + to_string(y) + ")");
  const double v = kernel.evaluate(x, y);
  if (!std::isfinite(v)) throw SingularityError("kernel '" + kernel.name + "' is not finite at the given pair");
  return v;
}

SizeAudit audit_size(const KernelSpec& kernel, std::size_t sample_count, std::uint64_t seed, std::optional<Box> box) {
  if (sample_count < 1) throw InvalidInput("audit_size needs at least one sample");
  const HyperCurve& curve = kernel.singular_curve();
  const std::size_t n = curve.dim();
  const Box region = box.value_or(default_audit_box(kernel));
  const double power = static_cast<double>(n);

  auto value_at = [&](const Vector& x, const Vector& y) {
    const double r = rho(curve, x, y).value;
    if (!(r > kSingularRho)) return -std::numeric_limits<double>::infinity();
    return std::fabs(kernel.evaluate(x, y)) * std::pow(r, power);
  };

  std::vector<std::pair<Vector, Vector>> pairs(sample_count);
  Rng rng(seed);
  for (auto& p : pairs) p = {rng.point_in(region), rng.point_in(region)};
  std::vector<double> values(sample_count);
  parallel_for(sample_count, [&](std::size_t s) { values[s] = value_at(pairs[s].first, pairs[s].second); }, 256);

  SizeAudit out;
  out.declared = kernel.size_constant;
  out.samples = sample_count;
  out.empirical = 0.0;
  for (std::size_t s = 0; s < sample_count; ++s)
    if (values[s] > out.empirical) {
      out.empirical = values[s];
      out.witness = pairs[s];
    }

  std::vector<double> lo, hi;
  append(lo, region.lo);
  append(lo, region.lo);
  append(hi, region.hi);
  append(hi, region.hi);
  const std::vector<std::size_t> starts = top_indices(values, kRefineStarts);
  std::vector<double> refined(starts.size());
  std::vector<std::vector<double>> args(starts.size());
  parallel_for(starts.size(), [&](std::size_t s) {
    std::vector<double> z;
    append(z, pairs[starts[s]].first);
    append(z, pairs[starts[s]].second);
    const double step = 0.25 * std::max(1e-6, rho(curve, pairs[starts[s]].first, pairs[starts[s]].second).value);
    refined[s] = pattern_maximize(z, lo, hi, step, [&](const std::vector<double>& w) {
      return value_at(slice(w, 0, n), slice(w, n, n));
    });
    args[s] = std::move(z);
  }, 1);
  for (std::size_t s = 0; s < starts.size(); ++s)
    if (refined[s] > out.empirical) {
      out.empirical = refined[s];
      out.witness = std::make_pair(slice(args[s], 0, n), slice(args[s], n, n));
    }
  out.passed = out.empirical <= kernel.size_constant * (1.0 + 1e-4);
  return out;
}

RegularityAudit audit_regularity(const KernelSpec& kernel, std::size_t triple_count, std::uint64_t seed,
                                 std::optional<Box> box) {
  if (triple_count < 1) throw InvalidInput("audit_regularity needs at least one triple");
  const HyperCurve& curve = kernel.singular_curve();
  const std::size_t n = curve.dim();
  const Box region = box.value_or(default_audit_box(kernel));

  RegularityAudit out;
  out.declared = kernel.regularity_constant;
  out.audited = kernel.regularity_audited;
  out.triples = triple_count;

  struct Triple {
    Vector x, y, u;
    double s = 1.0;
  };
  for (bool move_x : {false, true}) {
    std::vector<Triple> triples(triple_count);
    Rng rng(seed, move_x ? 2 : 1);
    for (Triple& t : triples) {
      t.x = rng.point_in(region);
      t.y = rng.point_in(region);
      t.u = random_direction(rng, n);
      t.s = 1.0 - rng.uniform();
    }
    std::vector<double> values(triple_count);
    parallel_for(triple_count, [&](std::size_t k) {
      values[k] = regularity_ratio(kernel, triples[k].x, triples[k].y, triples[k].s, triples[k].u, move_x);
    }, 256);
    double sup = 0.0;
    for (double v : values) sup = std::max(sup, v);

    std::vector<double> lo, hi;
    append(lo, region.lo);
    append(lo, region.lo);
    lo.push_back(1e-9);
    append(hi, region.hi);
    append(hi, region.hi);
    hi.push_back(1.0);
    const std::vector<std::size_t> starts = top_indices(values, kRefineStarts);
    std::vector<double> refined(starts.size(), 0.0);
    parallel_for(starts.size(), [&](std::size_t s) {
      const Triple& t = triples[starts[s]];
      std::vector<double> z;
      append(z, t.x);
      append(z, t.y);
      z.push_back(t.s);
      const double step = 0.25 * std::max(1e-6, rho(curve, t.x, t.y).value);
      refined[s] = pattern_maximize(z, lo, hi, step, [&](const std::vector<double>& w) {
        return regularity_ratio(kernel, slice(w, 0, n), slice(w, n, n), w[2 * n], t.u, move_x);
      });
    }, 1);
    for (double v : refined) sup = std::max(sup, v);
    (move_x ? out.a_x : out.a_y) = sup;
  }
  out.passed = out.a_y <= kernel.regularity_constant * (1.0 + 1e-3) &&
               out.a_x <= kernel.regularity_constant * (1.0 + 1e-3);
  return out;
}

HormanderResult hormander_constant(const KernelSpec& kernel, const std::vector<std::pair<Vector, Vector>>& pairs,
                                   const Box& box, std::size_t grid_n, bool adjoint) {
  const HyperCurve& curve = kernel.singular_curve();
  const std::size_t n = curve.dim();
  if (grid_n < 2) throw InvalidInput("grid_n must be at least 2");
  if (box.dim() != n || !box.bounded()) throw InvalidInput("integration box must be bounded and match the curve");
  for (const auto& [y, z] : pairs)
    if (y == z) throw InvalidInput("Hoermander pair has y = z");

  std::size_t cells = 1;
  double cell_volume = 1.0;
  Vector h(n);
  for (std::size_t k = 0; k < n; ++k) {
    cells *= grid_n;
    h[k] = box.width(k) / static_cast<double>(grid_n);
    cell_volume *= h[k];
  }
  auto midpoint = [&](std::size_t flat) {
    Vector x(n);
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t i = flat % grid_n;
      flat /= grid_n;
      x[k] = 2 * i < grid_n ? box.lo[k] + (static_cast<double>(i) + 0.5) * h[k]
                            : box.hi[k] - (static_cast<double>(grid_n - i) - 0.5) * h[k];
    }
    return x;
  };

  HormanderResult out;
  out.adjoint = adjoint;
  std::vector<double> terms(cells);
  for (const auto& [y, z] : pairs) {
    const double threshold = 2.0 * distance(y, z);
    parallel_chunks(cells, 4096, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        const Vector x = midpoint(c);
        if (adjoint) {
          terms[c] = rho_at_least(curve, y, x, threshold) ? std::fabs(kernel.evaluate(y, x) - kernel.evaluate(z, x)) : 0.0;
        } else {
          terms[c] = rho_at_least(curve, x, y, threshold) ? std::fabs(kernel.evaluate(x, y) - kernel.evaluate(x, z)) : 0.0;
        }
      }
    });
    const double v = pairwise_sum(terms) * cell_volume;
    out.per_pair.push_back(v);
    out.value = std::max(out.value, v);

    // Outside the box, rho >= |x - p_i| / (2c + 2) for anchors p_i of the
    // branches, which bounds the integrand by C' a^delta / |x - p_i|^{n+delta}.
    const double c = curve.c_gamma();
    const double nd = static_cast<double>(n);
    const double c_prime = kernel.regularity_constant * std::pow(2.0 * c + 2.0, nd + kernel.delta);
    double reach = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < curve.branch_count(); ++i) {
      const CurveBranch& b = curve.branch(i);
      Vector anchor;
      if (adjoint) {
        anchor = b.forward(nearest_domain_point(curve, i, y));
      } else {
        if (b.is_constant()) continue;
        anchor = project_to_range(curve, i, y).parameter;
      }
      double inner = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) inner = std::min({inner, anchor[k] - box.lo[k], box.hi[k] - anchor[k]});
      reach = std::min(reach, inner);
    }
    const double a = distance(y, z);
    const double tail = reach > 0.0
                            ? static_cast<double>(curve.branch_count()) * nd * unit_ball_volume(n) * c_prime *
                                  std::pow(a, kernel.delta) / (kernel.delta * std::pow(reach, kernel.delta))
                            : std::numeric_limits<double>::infinity();
    out.tail_bound = std::max(out.tail_bound, tail);
  }
  return out;
}

}  // namespace czo
