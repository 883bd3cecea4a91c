#include "czo/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "czo/detail/search.hpp"
#include "czo/errors.hpp"
#include "czo/parallel.hpp"
#include "czo/random.hpp"

namespace czo {
namespace {

constexpr std::size_t kRhoSearchBudget = 4096;
constexpr int kRhoRefineIterations = 60;
constexpr double kEquivalenceSlack = 1.0 + 1e-5;
constexpr double kQThetaTolerance = 1e-7;
constexpr std::size_t kMonteCarloChunk = 1 << 16;

double equivalence_factor(const HyperCurve& curve) { return 2.0 * (curve.c_gamma() + 1.0); }

template <class F>
MetricValue min_over_branches(const HyperCurve& curve, F&& per_branch) {
  MetricValue best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    // Values within solver noise of the current best count as ties, which
    // keep the smaller index.
    const double v = per_branch(i);
    if (v < best.value * (1.0 - 1e-12)) best = {v, i};
  }
  return best;
}

}  // namespace

MetricValue rho_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y) {
  const CurveBranch& b = curve.branch(i);
  const Vector xi = nearest_domain_point(curve, i, x);
  const Vector fx = b.forward(xi);
  if (b.is_constant()) return {std::sqrt(norm_squared(x - xi) + norm_squared(y - *b.constant_value)), i};

  const double dx = distance(x, xi);
  const double dy = distance(y, fx);
  double best = dx * dx + dy * dy;
  const double reach = dx + dy;
  if (reach == 0.0) return {0.0, i};

  // Any parameter closer to (x, y) than xi lies within rho_i <= reach of x.
  const Box window{x - Vector(x.dim(), reach), x + Vector(x.dim(), reach)};
  const std::size_t per_axis = detail::samples_per_axis(curve.dim(), kRhoSearchBudget);
  auto objective = [&](const Vector& t) { return norm_squared(x - t) + norm_squared(y - b.forward(t)); };
  for (const Box& piece : b.domain.clipped(window)) {
    const auto r = detail::minimize_on_box(piece, per_axis, kRhoRefineIterations, objective);
    best = std::min(best, r.value);
  }
  return {std::sqrt(best), i};
}

MetricValue rho(const HyperCurve& curve, const Vector& x, const Vector& y) {
  // rho_i >= rho~_i / (2(c+1)), so a branch whose lower bound already exceeds
  // the running minimum cannot win and is skipped.
  const double factor = equivalence_factor(curve);
  double best = std::numeric_limits<double>::infinity();
  return min_over_branches(curve, [&](std::size_t i) {
    if (rho_tilde_branch(curve, i, x, y) / factor > best) return std::numeric_limits<double>::infinity();
    const double v = rho_branch(curve, i, x, y).value;
    best = std::min(best, v);
    return v;
  });
}

double rho_tilde_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y) {
  const Vector xi = nearest_domain_point(curve, i, x);
  return distance(x, xi) + distance(y, curve.branch(i).forward(xi));
}

MetricValue rho_tilde(const HyperCurve& curve, const Vector& x, const Vector& y) {
  return min_over_branches(curve, [&](std::size_t i) { return rho_tilde_branch(curve, i, x, y); });
}

double rho_tilde_star_branch(const HyperCurve& curve, std::size_t i, const Vector& x, const Vector& y) {
  const CurveBranch& b = curve.branch(i);
  if (b.is_constant()) return distance(y, *b.constant_value) + b.domain.distance_to(x);
  const RangeProjection eta = project_to_range(curve, i, y);
  return distance(y, eta.point) + distance(x, eta.parameter);
}

MetricValue rho_tilde_star(const HyperCurve& curve, const Vector& x, const Vector& y) {
  return min_over_branches(curve, [&](std::size_t i) { return rho_tilde_star_branch(curve, i, x, y); });
}

bool rho_at_least(const HyperCurve& curve, const Vector& x, const Vector& y, double threshold) {
  const double far = equivalence_factor(curve) * threshold;
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const double rt = rho_tilde_branch(curve, i, x, y);
    if (rt < threshold) return false;
    if (rt >= far) continue;
    if (rho_branch(curve, i, x, y).value < threshold) return false;
  }
  return true;
}

EquivalenceReport check_equivalence(const HyperCurve& curve, std::size_t pair_count, std::uint64_t seed,
                                    std::optional<Box> box) {
  if (pair_count < 1) throw InvalidInput("check_equivalence needs at least one pair");
  const Box region = box.value_or(curve.sampling_box());
  if (region.dim() != curve.dim() || !region.bounded()) throw InvalidInput("sampling box must be bounded");

  std::vector<std::pair<Vector, Vector>> pairs(pair_count);
  Rng rng(seed);
  for (auto& p : pairs) {
    p.first = rng.point_in(region);
    p.second = rng.point_in(region);
  }

  const std::size_t r = curve.branch_count();
  const double bound = equivalence_factor(curve);
  struct Row {
    std::vector<double> rho_i, tilde_i, star_i;
  };
  std::vector<Row> rows(pair_count);
  parallel_for(pair_count, [&](std::size_t k) {
    Row& row = rows[k];
    row.rho_i.resize(r);
    row.tilde_i.resize(r);
    row.star_i.resize(r);
    const auto& [x, y] = pairs[k];
    for (std::size_t i = 0; i < r; ++i) {
      row.rho_i[i] = rho_branch(curve, i, x, y).value;
      row.tilde_i[i] = rho_tilde_branch(curve, i, x, y);
      row.star_i[i] = rho_tilde_star_branch(curve, i, x, y);
    }
  }, 16);

  EquivalenceReport report;
  report.pair_count = pair_count;
  report.bound = bound;
  report.min_tilde_ratio = std::numeric_limits<double>::infinity();
  report.min_star_ratio = std::numeric_limits<double>::infinity();
  report.branch_max_tilde_ratio.assign(r, 0.0);
  report.branch_max_star_ratio.assign(r, 0.0);

  auto fail = [&](const std::string& why, std::size_t k) {
    if (!report.passed) return;
    report.passed = false;
    report.failure = why;
    report.witness = pairs[k];
  };
  // lo <= v <= bound * lo, with relative slack and an absolute floor at zero.
  auto sandwiched = [&](double lo, double v) {
    constexpr double kAbs = 1e-12;
    return lo <= v * kEquivalenceSlack + kAbs && v <= bound * lo * kEquivalenceSlack + kAbs;
  };

  for (std::size_t k = 0; k < pair_count; ++k) {
    const Row& row = rows[k];
    for (std::size_t i = 0; i < r; ++i) {
      if (!sandwiched(row.rho_i[i], row.tilde_i[i]))
        fail("branch " + std::to_string(i) + ": rho_i <= rho~_i <= 2(c+1) rho_i violated", k);
      if (!sandwiched(row.rho_i[i], row.star_i[i]))
        fail("branch " + std::to_string(i) + ": rho_i <= rho~*_i <= 2(c+1) rho_i violated", k);
      if (row.rho_i[i] > 0.0) {
        report.branch_max_tilde_ratio[i] = std::max(report.branch_max_tilde_ratio[i], row.tilde_i[i] / row.rho_i[i]);
        report.branch_max_star_ratio[i] = std::max(report.branch_max_star_ratio[i], row.star_i[i] / row.rho_i[i]);
      }
    }
    const double g = *std::min_element(row.rho_i.begin(), row.rho_i.end());
    const double t = *std::min_element(row.tilde_i.begin(), row.tilde_i.end());
    const double s = *std::min_element(row.star_i.begin(), row.star_i.end());
    if (!sandwiched(g, t)) fail("rho <= rho~ <= 2(c+1) rho violated", k);
    if (!sandwiched(g, s)) fail("rho <= rho~* <= 2(c+1) rho violated", k);
    if (g > 0.0) {
      report.max_tilde_ratio = std::max(report.max_tilde_ratio, t / g);
      report.max_star_ratio = std::max(report.max_star_ratio, s / g);
      report.min_tilde_ratio = std::min(report.min_tilde_ratio, t / g);
      report.min_star_ratio = std::min(report.min_star_ratio, s / g);
    }
  }
  return report;
}

// --- enlarged cubes ------------------------------------------------------------

EnlargedCube::EnlargedCube(const HyperCurve& curve, Cube base, double theta, std::vector<EnlargedPiece> pieces)
    : curve_(&curve), base_(std::move(base)), theta_(theta), pieces_(std::move(pieces)) {
  const double omega = unit_ball_volume(curve.dim());
  for (const EnlargedPiece& p : pieces_) {
    if (p.empty) continue;
    if (p.unbounded) {
      measure_upper_bound_ = std::numeric_limits<double>::infinity();
      continue;
    }
    measure_upper_bound_ += omega * std::pow(p.ball_radius, static_cast<double>(curve.dim()));
  }
}

bool EnlargedCube::piece_contains(std::size_t i, const Vector& x) const {
  const EnlargedPiece& p = pieces_.at(i);
  if (p.empty) return false;
  const double reach = theta_ * base_.side + kQThetaTolerance * base_.side;
  if (p.whole_domain) return curve_->branch(i).domain.distance_to(x) <= reach;
  if (x.dim() == 1) {
    const double d = std::max({p.anchor_lo[0] - x[0], x[0] - p.anchor_hi[0], 0.0});
    return d <= reach;
  }
  const double limit = reach + p.anchor_slack;
  return std::any_of(p.anchors.begin(), p.anchors.end(), [&](const Vector& a) { return distance(x, a) <= limit; });
}

bool EnlargedCube::contains(const Vector& x) const {
  for (std::size_t i = 0; i < pieces_.size(); ++i)
    if (piece_contains(i, x)) return true;
  return false;
}

std::optional<Box> EnlargedCube::covering_box() const {
  std::optional<Box> out;
  for (const EnlargedPiece& p : pieces_) {
    if (p.empty) continue;
    if (p.unbounded) return std::nullopt;
    const Vector r(p.ball_center.dim(), p.ball_radius);
    Box b{p.ball_center - r, p.ball_center + r};
    if (!out) {
      out = b;
      continue;
    }
    for (std::size_t k = 0; k < b.dim(); ++k) {
      out->lo[k] = std::min(out->lo[k], b.lo[k]);
      out->hi[k] = std::max(out->hi[k], b.hi[k]);
    }
  }
  return out;
}

EnlargedCube enlarged_cube(const HyperCurve& curve, const Cube& q, double theta) {
  if (!(theta > 1.0)) throw InvalidInput("theta must exceed 1");
  if (q.dim() != curve.dim() || !(q.side > 0.0)) throw InvalidInput("cube must be nondegenerate and match the curve");
  const std::size_t n = curve.dim();
  const double root_n = std::sqrt(static_cast<double>(n));
  const double ell = q.side;
  const Box qbox = q.box();
  const std::size_t per_axis = n == 1 ? 257 : detail::samples_per_axis(n, 4096) + 1;

  std::vector<EnlargedPiece> pieces;
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const CurveBranch& b = curve.branch(i);
    EnlargedPiece p;
    p.branch = i;

    if (b.is_constant()) {
      p.nearest_in_cube = qbox.clamp(*b.constant_value);
      p.range_distance = distance(p.nearest_in_cube, *b.constant_value);
    } else {
      const auto r = detail::minimize_on_box(qbox, per_axis, 40, [&](const Vector& y) {
        return norm_squared(y - project_to_range(curve, i, y).point);
      });
      p.nearest_in_cube = r.arg;
      p.range_distance = std::sqrt(r.value);
    }
    p.empty = !(p.range_distance < 2.0 * root_n * ell);
    if (!p.empty) {
      if (b.is_constant()) {
        p.whole_domain = true;
        p.unbounded = !b.domain.bounded();
        const Box hull = [&] {
          Box h = b.domain.boxes().front();
          for (const Box& d : b.domain.boxes())
            for (std::size_t k = 0; k < n; ++k) {
              h.lo[k] = std::min(h.lo[k], d.lo[k]);
              h.hi[k] = std::max(h.hi[k], d.hi[k]);
            }
          return h;
        }();
        p.anchor_lo = hull.lo;
        p.anchor_hi = hull.hi;
        p.ball_center = hull.center();
        if (!p.unbounded) {
          double half_diag = 0.0;
          for (std::size_t k = 0; k < n; ++k) half_diag += 0.25 * hull.width(k) * hull.width(k);
          p.ball_radius = std::sqrt(half_diag) + theta * ell;
        }
      } else {
        // Anchor grid over Q, faces included.
        std::size_t idx[kMaxDim] = {};
        std::size_t total = 1;
        for (std::size_t k = 0; k < n; ++k) total *= per_axis;
        Vector y(n);
        p.anchors.reserve(total);
        for (std::size_t c = 0; c < total; ++c) {
          for (std::size_t k = 0; k < n; ++k)
            y[k] = idx[k] + 1 == per_axis ? qbox.hi[k]
                                           : qbox.lo[k] + ell * static_cast<double>(idx[k]) / static_cast<double>(per_axis - 1);
          p.anchors.push_back(project_to_range(curve, i, y).parameter);
          for (std::size_t k = n; k-- > 0;) {
            if (++idx[k] < per_axis) break;
            idx[k] = 0;
          }
        }
        p.anchor_lo = p.anchors.front();
        p.anchor_hi = p.anchors.front();
        for (const Vector& a : p.anchors)
          for (std::size_t k = 0; k < n; ++k) {
            p.anchor_lo[k] = std::min(p.anchor_lo[k], a[k]);
            p.anchor_hi[k] = std::max(p.anchor_hi[k], a[k]);
          }
        if (n > 1) p.anchor_slack = curve.c_gamma() * ell * root_n / (2.0 * static_cast<double>(per_axis - 1));
        p.ball_center = project_to_range(curve, i, p.nearest_in_cube).parameter;
        p.ball_radius = (theta + 6.0 * root_n * curve.c_gamma()) * ell;
      }
    }
    pieces.push_back(std::move(p));
  }
  return EnlargedCube(curve, q, theta, std::move(pieces));
}

double qtheta_covering_constant(const HyperCurve& curve, double theta) {
  const double n = static_cast<double>(curve.dim());
  return unit_ball_volume(curve.dim()) * static_cast<double>(curve.branch_count()) *
         std::pow(1.0 + 6.0 * std::sqrt(n) * curve.c_gamma() / theta, n);
}

double qtheta_min_theta(const HyperCurve& curve) {
  const double root_n = std::sqrt(static_cast<double>(curve.dim()));
  return 2.0 * root_n + 5.0 * root_n * curve.c_gamma();
}

QThetaReport check_qtheta(const HyperCurve& curve, const Cube& q, double theta, std::size_t probe_count,
                          std::uint64_t seed, std::size_t mc_samples) {
  if (!(theta > qtheta_min_theta(curve)))
    throw InvalidInput("theta = " + std::to_string(theta) + " does not exceed 2 sqrt(n) + 5 sqrt(n) c_gamma = " +
                       std::to_string(qtheta_min_theta(curve)));
  const std::size_t n = curve.dim();
  const double root_n = std::sqrt(static_cast<double>(n));
  const EnlargedCube qt = enlarged_cube(curve, q, theta);

  QThetaReport report;
  report.bound = qtheta_covering_constant(curve, theta) * std::pow(theta, static_cast<double>(n)) * q.measure();

  // Containment of each piece in its covering ball, checked on the anchors.
  for (const EnlargedPiece& p : qt.pieces()) {
    if (p.empty || p.unbounded || p.whole_domain) continue;
    const double reach = theta * q.side * (1.0 + kQThetaTolerance) + p.anchor_slack;
    for (const Vector& a : p.anchors) {
      if (distance(a, p.ball_center) + reach > p.ball_radius * (1.0 + 1e-9)) {
        report.measure_passed = false;
        report.failure = "piece " + std::to_string(p.branch) + " leaves its covering ball";
        report.witness = std::make_pair(a, p.ball_center);
        break;
      }
    }
  }

  const std::optional<Box> cover = qt.covering_box();
  if (!std::isfinite(qt.measure_upper_bound())) {
    report.measured = std::numeric_limits<double>::infinity();
    report.measure_passed = false;
    if (report.failure.empty()) report.failure = "Q_theta has an unbounded piece";
  } else if (cover && mc_samples > 0) {
    const std::size_t chunks = (mc_samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
    std::vector<std::size_t> hits(chunks, 0);
    parallel_chunks(mc_samples, kMonteCarloChunk, [&](std::size_t begin, std::size_t end) {
      const std::size_t chunk = begin / kMonteCarloChunk;
      Rng rng(seed, 1000 + chunk);
      std::size_t h = 0;
      for (std::size_t s = begin; s < end; ++s)
        if (qt.contains(rng.point_in(*cover))) ++h;
      hits[chunk] = h;
    });
    std::size_t total_hits = 0;
    for (std::size_t h : hits) total_hits += h;
    const double vol = cover->volume();
    const double frac = static_cast<double>(total_hits) / static_cast<double>(mc_samples);
    report.measured = frac * vol;
    report.half_width = 2.576 * vol * std::sqrt(frac * (1.0 - frac) / static_cast<double>(mc_samples));
    if (report.measured > report.bound) {
      report.measure_passed = false;
      if (report.failure.empty()) report.failure = "Monte-Carlo measure exceeds the covering bound";
    }
  }

  // Separation probes.
  const double target = 2.0 * root_n * q.side;
  Box probe_box = curve.sampling_box();
  if (cover) {
    const Vector pad(n, 4.0 * root_n * q.side);
    probe_box = {cover->lo - pad, cover->hi + pad};
  } else if (std::isfinite(qt.measure_upper_bound())) {
    const Vector pad(n, (theta + 4.0 * root_n) * q.side);
    probe_box = {q.box().lo - pad, q.box().hi + pad};
  }
  Rng rng(seed, 1);
  std::vector<std::pair<Vector, Vector>> probes;
  probes.reserve(probe_count);
  for (std::size_t attempts = 0; probes.size() < probe_count && attempts < 1000 * probe_count + 1000; ++attempts) {
    const Vector x = rng.point_in(probe_box);
    if (qt.contains(x)) continue;
    probes.emplace_back(x, rng.point_in(q.box()));
  }
  report.probes = probes.size();
  std::vector<double> ratios(probes.size());
  parallel_for(probes.size(), [&](std::size_t k) {
    ratios[k] = rho(curve, probes[k].first, probes[k].second).value / target;
  }, 16);
  report.min_separation_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < probes.size(); ++k) {
    report.min_separation_ratio = std::min(report.min_separation_ratio, ratios[k]);
    if (ratios[k] < 1.0 - 1e-5 && report.separation_passed) {
      report.separation_passed = false;
      report.failure = "rho(x, y) < 2 sqrt(n) l(Q) for x outside Q_theta";
      report.witness = probes[k];
    }
  }
  if (probes.size() < probe_count && report.separation_passed) {
    report.separation_passed = false;
    report.failure = "could not draw enough probes outside Q_theta";
  }
  report.passed = report.measure_passed && report.separation_passed;
  return report;
}

}  // namespace czo
