#pragma once

// Functions sampled at the cell midpoints of a uniform grid.

#include <functional>
#include <string>
#include <vector>

#include "czo/vector.hpp"

namespace czo {

/// A bounded box split into `cells_per_axis` equal cells along each axis.
struct GridGeometry {
  Box box;
  std::size_t cells_per_axis = 0;

  GridGeometry() = default;
  GridGeometry(Box box, std::size_t cells_per_axis);

  std::size_t dim() const noexcept { return box.dim(); }
  std::size_t size() const noexcept;
  double h(std::size_t axis) const noexcept { return box.width(axis) / static_cast<double>(cells_per_axis); }
  /// Largest cell width.
  double max_h() const noexcept;
  double cell_volume() const noexcept;
  /// Midpoint coordinate of cell i along an axis. Cells mirrored about the
  /// box center get exactly mirrored midpoints.
  double coordinate(std::size_t axis, std::size_t i) const noexcept;
  /// Row-major flat index -> midpoint.
  Vector midpoint(std::size_t flat) const;
  std::size_t flat_index(const std::size_t* multi) const noexcept;

  friend bool operator==(const GridGeometry& a, const GridGeometry& b) noexcept;
};

class GridFunction {
 public:
  GridFunction() = default;
  /// Zero function.
  explicit GridFunction(GridGeometry geometry);
  GridFunction(GridGeometry geometry, std::vector<double> values);

  static GridFunction sample(const GridGeometry& geometry, const std::function<double(const Vector&)>& f);

  const GridGeometry& geometry() const noexcept { return geometry_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool compatible(const GridFunction& other) const noexcept { return geometry_ == other.geometry_; }
  /// Midpoint rule: sum of values times the cell volume.
  double integral() const;
  double sup_norm() const noexcept;

  /// Multilinear interpolation between midpoints. Inside the box but beyond
  /// the outermost midpoints the nearest midpoint value is used; outside the
  /// box the result is 0 and *outside (if given) is set.
  double interpolate(const Vector& p, bool* outside = nullptr) const;

  /// alpha * a + beta * b on a shared geometry.
  static GridFunction combine(double alpha, const GridFunction& a, double beta, const GridFunction& b);

  /// `# box=lo..hi[,lo..hi] n=N` followed by one %.17g value per line.
  void save_csv(const std::string& path) const;
  std::string to_csv() const;
  static GridFunction load_csv(const std::string& path);
  static GridFunction parse_csv(const std::string& text);

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
};

}  // namespace czo
