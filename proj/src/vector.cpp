#include "czo/vector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "czo/errors.hpp"

namespace czo {

Vector::Vector(std::initializer_list<double> coords) : dim_(coords.size()) {
  if (dim_ > kMaxDim) throw InvalidInput("dimension exceeds kMaxDim");
  std::copy(coords.begin(), coords.end(), c_.begin());
}

void Vector::throw_too_large() { throw InvalidInput("dimension exceeds kMaxDim"); }

bool operator==(const Vector& a, const Vector& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (std::size_t k = 0; k < a.dim_; ++k)
    if (a.c_[k] != b.c_[k]) return false;
  return true;
}

Vector operator-(Vector a) noexcept {
  for (double& v : a) v = -v;
  return a;
}

double norm(const Vector& a) noexcept {
  if (a.dim() == 1) return std::fabs(a[0]);
  return std::sqrt(norm_squared(a));
}

bool all_finite(const Vector& a) noexcept {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

bool lex_less(const Vector& a, const Vector& b) noexcept {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::string to_string(const Vector& a) {
  std::string out;
  char buf[32];
  for (std::size_t k = 0; k < a.dim(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", a[k]);
    if (k) out += ' ';
    out += buf;
  }
  return out;
}

// --- Box -------------------------------------------------------------------

Box Box::whole_space(std::size_t dim) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return {Vector(dim, -inf), Vector(dim, inf)};
}

Box Box::symmetric(std::size_t dim, double half_width) {
  return {Vector(dim, -half_width), Vector(dim, half_width)};
}

Box Box::interval(double lo, double hi) { return {Vector{lo}, Vector{hi}}; }

bool Box::bounded() const noexcept { return all_finite(lo) && all_finite(hi); }

bool Box::contains(const Vector& p, double tol) const noexcept {
  for (std::size_t k = 0; k < dim(); ++k)
    if (p[k] < lo[k] - tol || p[k] > hi[k] + tol) return false;
  return true;
}

bool Box::interior_contains(const Vector& p) const noexcept {
  for (std::size_t k = 0; k < dim(); ++k)
    if (!(p[k] > lo[k] && p[k] < hi[k])) return false;
  return true;
}

Vector Box::clamp(const Vector& p) const noexcept {
  Vector q = p;
  for (std::size_t k = 0; k < dim(); ++k) q[k] = std::clamp(p[k], lo[k], hi[k]);
  return q;
}

std::optional<Box> Box::intersect(const Box& other) const noexcept {
  Box out{lo, hi};
  for (std::size_t k = 0; k < dim(); ++k) {
    out.lo[k] = std::max(lo[k], other.lo[k]);
    out.hi[k] = std::min(hi[k], other.hi[k]);
    if (out.lo[k] > out.hi[k]) return std::nullopt;
  }
  return out;
}

double Box::volume() const noexcept {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= hi[k] - lo[k];
  return v;
}

Vector Box::center() const noexcept { return (lo + hi) * 0.5; }

// --- Region ----------------------------------------------------------------

Region::Region(std::vector<Box> boxes) : boxes_(std::move(boxes)) {
  if (boxes_.empty()) throw InvalidInput("a region needs at least one box");
  const std::size_t n = boxes_.front().dim();
  for (const Box& b : boxes_) {
    if (b.dim() != n || b.hi.dim() != n) throw InvalidInput("region boxes disagree on dimension");
    for (std::size_t k = 0; k < n; ++k)
      if (!(b.lo[k] <= b.hi[k])) throw InvalidInput("region box with lo > hi");
  }
}

Region Region::whole_space(std::size_t dim) { return Region({Box::whole_space(dim)}); }

bool Region::bounded() const noexcept {
  return std::all_of(boxes_.begin(), boxes_.end(), [](const Box& b) { return b.bounded(); });
}

bool Region::contains(const Vector& p, double tol) const noexcept {
  return std::any_of(boxes_.begin(), boxes_.end(), [&](const Box& b) { return b.contains(p, tol); });
}

bool Region::interior_contains(const Vector& p) const noexcept {
  return std::any_of(boxes_.begin(), boxes_.end(),
                     [&](const Box& b) { return b.interior_contains(p); });
}

Vector Region::nearest_point(const Vector& p) const {
  Vector best = boxes_.front().clamp(p);
  double best_d = distance(p, best);
  for (std::size_t b = 1; b < boxes_.size(); ++b) {
    const Vector q = boxes_[b].clamp(p);
    const double d = distance(p, q);
    if (d < best_d || (d == best_d && lex_less(q, best))) {
      best = q;
      best_d = d;
    }
  }
  return best;
}

std::vector<Box> Region::clipped(const Box& window) const {
  std::vector<Box> out;
  for (const Box& b : boxes_)
    if (auto c = b.intersect(window)) out.push_back(*c);
  return out;
}

// --- Cube ------------------------------------------------------------------

Box Cube::box() const { return {lower, lower + Vector(lower.dim(), side)}; }

Vector Cube::center() const { return lower + Vector(lower.dim(), 0.5 * side); }

double Cube::measure() const { return std::pow(side, static_cast<double>(lower.dim())); }

double unit_ball_volume(std::size_t dim) {
  const double n = static_cast<double>(dim);
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

}  // namespace czo
