#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace czo {

/// Largest ambient dimension n supported by the fixed-capacity point type.
inline constexpr std::size_t kMaxDim = 4;

/// A point of R^n with inline storage; copying never allocates.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t dim, double fill = 0.0) : dim_(dim) {
    if (dim > kMaxDim) throw_too_large();
    for (std::size_t k = 0; k < dim; ++k) c_[k] = fill;
  }
  Vector(std::initializer_list<double> coords);

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t k) const noexcept { return c_[k]; }
  double& operator[](std::size_t k) noexcept { return c_[k]; }

  const double* begin() const noexcept { return c_.data(); }
  const double* end() const noexcept { return c_.data() + dim_; }
  double* begin() noexcept { return c_.data(); }
  double* end() noexcept { return c_.data() + dim_; }

  Vector& operator+=(const Vector& other) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] += other.c_[k];
    return *this;
  }
  Vector& operator-=(const Vector& other) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] -= other.c_[k];
    return *this;
  }
  Vector& operator*=(double s) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] *= s;
    return *this;
  }

  friend bool operator==(const Vector& a, const Vector& b) noexcept;

 private:
  [[noreturn]] static void throw_too_large();

  std::array<double, kMaxDim> c_{};
  std::size_t dim_ = 0;
};

inline Vector operator+(Vector a, const Vector& b) noexcept { return a += b; }
inline Vector operator-(Vector a, const Vector& b) noexcept { return a -= b; }
inline Vector operator*(Vector a, double s) noexcept { return a *= s; }
inline Vector operator*(double s, Vector a) noexcept { return a *= s; }
Vector operator-(Vector a) noexcept;

inline double dot(const Vector& a, const Vector& b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) s += a[k] * b[k];
  return s;
}
inline double norm_squared(const Vector& a) noexcept { return dot(a, a); }
double norm(const Vector& a) noexcept;
inline double distance(const Vector& a, const Vector& b) noexcept {
  if (a.dim() == 1) return std::fabs(a[0] - b[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}
bool all_finite(const Vector& a) noexcept;
/// Strict lexicographic order on coordinates; the tie-break for argmins.
bool lex_less(const Vector& a, const Vector& b) noexcept;
/// Coordinates joined by ' ' (one token per axis), printed with %.17g.
std::string to_string(const Vector& a);

/// Closed axis-aligned box; bounds may be infinite.
struct Box {
  Vector lo;
  Vector hi;

  static Box whole_space(std::size_t dim);
  static Box symmetric(std::size_t dim, double half_width);
  static Box interval(double lo, double hi);

  std::size_t dim() const noexcept { return lo.dim(); }
  bool bounded() const noexcept;
  bool contains(const Vector& p, double tol = 0.0) const noexcept;
  bool interior_contains(const Vector& p) const noexcept;
  Vector clamp(const Vector& p) const noexcept;
  std::optional<Box> intersect(const Box& other) const noexcept;
  double volume() const noexcept;
  Vector center() const noexcept;
  double width(std::size_t k) const noexcept { return hi[k] - lo[k]; }
};

/// A finite union of closed boxes: the admissible shape of a branch domain.
class Region {
 public:
  Region() = default;
  explicit Region(std::vector<Box> boxes);
  static Region whole_space(std::size_t dim);

  const std::vector<Box>& boxes() const noexcept { return boxes_; }
  std::size_t dim() const noexcept { return boxes_.empty() ? 0 : boxes_.front().dim(); }
  bool bounded() const noexcept;
  bool contains(const Vector& p, double tol = 0.0) const noexcept;
  bool interior_contains(const Vector& p) const noexcept;
  /// Exact Euclidean projection; among equidistant boxes the lexicographically
  /// smallest projection wins.
  Vector nearest_point(const Vector& p) const;
  double distance_to(const Vector& p) const { return distance(p, nearest_point(p)); }
  /// Pieces of the region inside `window` (empty pieces dropped).
  std::vector<Box> clipped(const Box& window) const;

 private:
  std::vector<Box> boxes_;
};

/// A cube given by its lower corner and side length.
struct Cube {
  Vector lower;
  double side = 1.0;

  Box box() const;
  Vector center() const;
  double measure() const;
  std::size_t dim() const noexcept { return lower.dim(); }
};

/// Volume of the unit ball in R^n.
double unit_ball_volume(std::size_t dim);

}  // namespace czo
