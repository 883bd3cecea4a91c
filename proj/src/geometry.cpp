#include "czo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "czo/detail/search.hpp"
#include "czo/errors.hpp"
#include "czo/random.hpp"

namespace czo {
namespace {

constexpr std::size_t kRangeSearchBudget = 4096;
constexpr int kRangeRefineIterations = 40;

void check_index(const HyperCurve& curve, std::size_t i) {
  if (i >= curve.branch_count())
    throw InvalidInput("branch index " + std::to_string(i) + " out of range for curve '" + curve.name() + "'");
}

void check_point(const HyperCurve& curve, const Vector& p, const char* what) {
  if (p.dim() != curve.dim()) throw InvalidInput(std::string(what) + " has the wrong dimension");
  if (!all_finite(p)) throw InvalidInput(std::string(what) + " has non-finite coordinates");
}

bool in_range_exactly(const CurveBranch& b, const Vector& y, Vector& parameter) {
  if (!b.inverse) return false;
  const Vector t = b.inverse(y);
  if (!all_finite(t) || !b.domain.contains(t, kDomainTolerance)) return false;
  if (distance(b.forward(t), y) > 1e-12 * (1.0 + norm(y))) return false;
  parameter = t;
  return true;
}

// Draws a point of D_i (clipped to the sampling box), choosing boxes in
// proportion to their volume.
Vector sample_domain(const std::vector<Box>& pieces, Rng& rng) {
  double total = 0.0;
  for (const Box& b : pieces) total += b.volume();
  if (total <= 0.0) return rng.point_in(pieces[rng.index(pieces.size())]);
  double u = rng.uniform() * total;
  for (const Box& b : pieces) {
    if (u < b.volume()) return rng.point_in(b);
    u -= b.volume();
  }
  return rng.point_in(pieces.back());
}

}  // namespace

HyperCurve::HyperCurve(std::string name, std::size_t dim, std::vector<CurveBranch> branches,
                       std::vector<Vector> exceptional_points, Box sampling_box, bool certified_preimages)
    : name_(std::move(name)),
      dim_(dim),
      branches_(std::move(branches)),
      exceptional_points_(std::move(exceptional_points)),
      sampling_box_(std::move(sampling_box)),
      certified_preimages_(certified_preimages),
      c_gamma_(kMinLipschitz) {
  if (dim_ == 0 || dim_ > kMaxDim) throw InvalidInput("curve dimension out of range");
  if (branches_.empty()) throw InvalidInput("a curve needs at least one branch");
  if (sampling_box_.dim() != dim_ || !sampling_box_.bounded())
    throw InvalidInput("sampling box must be bounded and match the curve dimension");
  for (const CurveBranch& b : branches_) {
    if (b.domain.dim() != dim_) throw InvalidInput("branch '" + b.label + "' domain has the wrong dimension");
    if (!b.forward) throw InvalidInput("branch '" + b.label + "' has no forward map");
    if (!b.inverse && !b.is_constant())
      throw InvalidInput("branch '" + b.label + "' needs an inverse or a constant value");
    if (!(b.lipschitz > 0.0) || !std::isfinite(b.lipschitz))
      throw InvalidInput("branch '" + b.label + "' needs a finite positive Lipschitz bound");
    c_gamma_ = std::max(c_gamma_, b.lipschitz);
  }
  for (const Vector& y : exceptional_points_)
    if (y.dim() != dim_) throw InvalidInput("exceptional point has the wrong dimension");
}

const CurveBranch& HyperCurve::branch(std::size_t i) const {
  check_index(*this, i);
  return branches_[i];
}

Vector branch_eval(const HyperCurve& curve, std::size_t i, const Vector& x) {
  const CurveBranch& b = curve.branch(i);
  check_point(curve, x, "x");
  if (!b.domain.contains(x, kDomainTolerance))
    throw InvalidInput("x = (" + to_string(x) + ") is outside the domain of branch '" + b.label + "'");
  return b.forward(x);
}

Vector branch_inverse(const HyperCurve& curve, std::size_t i, const Vector& y) {
  const CurveBranch& b = curve.branch(i);
  check_point(curve, y, "y");
  if (b.is_constant()) throw InvalidInput("branch '" + b.label + "' is constant and has no inverse");
  Vector t;
  if (!in_range_exactly(b, y, t))
    throw InvalidInput("y = (" + to_string(y) + ") is outside the range of branch '" + b.label + "'");
  return t;
}

Vector nearest_domain_point(const HyperCurve& curve, std::size_t i, const Vector& x) {
  const CurveBranch& b = curve.branch(i);
  check_point(curve, x, "x");
  return b.domain.nearest_point(x);
}

RangeProjection project_to_range(const HyperCurve& curve, std::size_t i, const Vector& y) {
  const CurveBranch& b = curve.branch(i);
  check_point(curve, y, "y");
  if (b.is_constant()) return {*b.constant_value, b.domain.nearest_point(y)};

  Vector exact;
  if (in_range_exactly(b, y, exact)) return {y, exact};

  // Rigorous search window: a candidate p = gamma(xi0) bounds |eta - y| <= R,
  // so |eta - p| <= 2R and the Lipschitz inverse confines the minimizing
  // parameter to a box of half-width 2 L R around xi0.
  Box window = curve.sampling_box();
  Vector seed_param;
  double seed_value = std::numeric_limits<double>::infinity();
  const Vector t0 = b.inverse(y);
  if (all_finite(t0)) {
    seed_param = b.domain.nearest_point(t0);
    const double r = distance(y, b.forward(seed_param));
    seed_value = r * r;
    const double half = 2.0 * b.lipschitz * (1.0 + 1e-6) * r + 1e-12;
    window = {seed_param - Vector(curve.dim(), half), seed_param + Vector(curve.dim(), half)};
  }

  detail::SearchResult best;
  const std::size_t per_axis = detail::samples_per_axis(curve.dim(), kRangeSearchBudget);
  for (const Box& piece : b.domain.clipped(window)) {
    auto r = detail::minimize_on_box(piece, per_axis, kRangeRefineIterations, [&](const Vector& t) {
      return norm_squared(y - b.forward(t));
    });
    if (r.value < best.value || (r.value == best.value && lex_less(r.arg, best.arg))) best = r;
  }
  if (seed_value < best.value) best = {seed_param, seed_value};
  if (!std::isfinite(best.value))
    throw CurveValidityError("branch '" + b.label + "' has no domain points inside the sampling box");
  return {b.forward(best.arg), best.arg};
}

Vector nearest_range_point(const HyperCurve& curve, std::size_t i, const Vector& y) {
  return project_to_range(curve, i, y).point;
}

double branch_jacobian(const HyperCurve& curve, std::size_t i, const Vector& x) {
  const CurveBranch& b = curve.branch(i);
  check_point(curve, x, "x");
  if (!b.domain.interior_contains(x))
    throw InvalidInput("x = (" + to_string(x) + ") is not interior to the domain of branch '" + b.label + "'");
  const double j = b.jacobian ? b.jacobian(x) : 0.0;
  if (j == 0.0 || !std::isfinite(j))
    throw CurveValidityError("branch '" + b.label + "' has a vanishing Jacobian at x = (" + to_string(x) + ")");
  return j;
}

ValidationReport validate_curve(const HyperCurve& curve, std::size_t sample_count, std::uint64_t seed) {
  if (sample_count < 2) throw InvalidInput("validate_curve needs at least two samples");
  ValidationReport report;
  report.c_gamma = curve.c_gamma();
  const double limit = curve.c_gamma() * (1.0 + 1e-6);

  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const CurveBranch& b = curve.branch(i);
    BranchValidation v;
    v.branch = i;
    v.exempt = b.is_constant();
    v.min_abs_jacobian = std::numeric_limits<double>::infinity();
    const std::vector<Box> pieces = b.domain.clipped(curve.sampling_box());
    if (pieces.empty()) {
      v.passed = false;
      v.failure = "domain does not meet the sampling box";
      report.branches.push_back(v);
      report.passed = false;
      continue;
    }
    Rng rng(seed, i);
    auto fail = [&](std::string why, const Vector& a, const Vector& c) {
      if (!v.passed) return;
      v.passed = false;
      v.failure = std::move(why);
      v.witness = std::make_pair(a, c);
    };
    for (std::size_t s = 0; s < sample_count; ++s) {
      const Vector x = sample_domain(pieces, rng);
      const Vector x2 = sample_domain(pieces, rng);
      const Vector y = b.forward(x);
      const Vector y2 = b.forward(x2);
      const double dx = distance(x, x2);
      if (dx > 0.0) {
        const double ratio = distance(y, y2) / dx;
        v.forward_ratio = std::max(v.forward_ratio, ratio);
        if (ratio > limit) fail("forward Lipschitz ratio exceeds c_gamma", x, x2);
      }
      if (v.exempt) continue;
      const double dy = distance(y, y2);
      const Vector back = b.inverse(y);
      const Vector back2 = b.inverse(y2);
      if (dy > 0.0) {
        const double ratio = distance(back, back2) / dy;
        v.inverse_ratio = std::max(v.inverse_ratio, ratio);
        if (ratio > limit) fail("inverse Lipschitz ratio exceeds c_gamma", y, y2);
      }
      const double trip = distance(back, x);
      v.max_round_trip = std::max(v.max_round_trip, trip);
      if (trip > 1e-9) fail("inverse(forward(x)) differs from x", x, back);
      if (b.domain.interior_contains(x)) {
        const double j = b.jacobian ? std::fabs(b.jacobian(x)) : 0.0;
        v.min_abs_jacobian = std::min(v.min_abs_jacobian, j);
        if (!(j > 0.0)) fail("Jacobian vanishes", x, x);
      }
    }
    if (v.exempt) v.min_abs_jacobian = 0.0;
    report.passed = report.passed && v.passed;
    report.branches.push_back(std::move(v));
  }
  return report;
}

// --- DyadicCube --------------------------------------------------------------

DyadicCube::DyadicCube(int level, std::vector<std::int64_t> corner) : level_(level), dim_(corner.size()) {
  if (dim_ == 0 || dim_ > kMaxDim) throw InvalidInput("dyadic cube dimension out of range");
  std::copy(corner.begin(), corner.end(), corner_);
}

double DyadicCube::side() const noexcept { return std::ldexp(1.0, -level_); }

Box DyadicCube::box() const {
  Box b{Vector(dim_), Vector(dim_)};
  for (std::size_t k = 0; k < dim_; ++k) {
    b.lo[k] = std::ldexp(static_cast<double>(corner_[k]), -level_);
    b.hi[k] = std::ldexp(static_cast<double>(corner_[k] + 1), -level_);
  }
  return b;
}

Cube DyadicCube::cube() const { return {box().lo, side()}; }

double DyadicCube::measure() const { return std::ldexp(1.0, -level_ * static_cast<int>(dim_)); }

bool DyadicCube::contains_point(const Vector& p, double tol) const { return box().contains(p, tol); }

bool DyadicCube::contains(const DyadicCube& other) const {
  if (other.level_ < level_ || other.dim_ != dim_) return false;
  const int shift = other.level_ - level_;
  for (std::size_t k = 0; k < dim_; ++k)
    if ((other.corner_[k] >> shift) != corner_[k]) return false;
  return true;
}

bool DyadicCube::interiors_disjoint(const DyadicCube& other) const {
  return !contains(other) && !other.contains(*this);
}

std::vector<DyadicCube> DyadicCube::children() const {
  std::vector<DyadicCube> out;
  const std::size_t count = std::size_t{1} << dim_;
  out.reserve(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    DyadicCube c = *this;
    c.level_ = level_ + 1;
    for (std::size_t k = 0; k < dim_; ++k) c.corner_[k] = 2 * corner_[k] + static_cast<std::int64_t>((mask >> (dim_ - 1 - k)) & 1U);
    out.push_back(c);
  }
  return out;
}

DyadicCube DyadicCube::parent() const {
  DyadicCube p = *this;
  p.level_ = level_ - 1;
  for (std::size_t k = 0; k < dim_; ++k) p.corner_[k] = corner_[k] >> 1;
  return p;
}

DyadicCube DyadicCube::containing(const Vector& p, int level) {
  std::vector<std::int64_t> corner(p.dim());
  for (std::size_t k = 0; k < p.dim(); ++k)
    corner[k] = static_cast<std::int64_t>(std::floor(std::ldexp(p[k], level)));
  return DyadicCube(level, std::move(corner));
}

bool operator==(const DyadicCube& a, const DyadicCube& b) noexcept {
  return a.level_ == b.level_ && a.dim_ == b.dim_ && std::equal(a.corner_, a.corner_ + a.dim_, b.corner_);
}

std::strong_ordering operator<=>(const DyadicCube& a, const DyadicCube& b) noexcept {
  if (auto c = a.level_ <=> b.level_; c != 0) return c;
  for (std::size_t k = 0; k < std::min(a.dim_, b.dim_); ++k)
    if (auto c = a.corner_[k] <=> b.corner_[k]; c != 0) return c;
  return a.dim_ <=> b.dim_;
}

std::string to_string(const DyadicCube& cube) {
  std::string out;
  for (std::size_t k = 0; k < cube.dim(); ++k) {
    if (k) out += ' ';
    out += std::to_string(cube.corner(k));
  }
  return out;
}

}  // namespace czo
