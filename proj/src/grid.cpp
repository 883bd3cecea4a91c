#include "czo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "czo/errors.hpp"
#include "czo/numeric.hpp"

namespace czo {

GridGeometry::GridGeometry(Box b, std::size_t n) : box(std::move(b)), cells_per_axis(n) {
  if (n == 0) throw InvalidInput("grid needs at least one cell per axis");
  if (box.dim() == 0 || !box.bounded()) throw InvalidInput("grid box must be bounded");
  for (std::size_t k = 0; k < box.dim(); ++k)
    if (!(box.hi[k] > box.lo[k])) throw InvalidInput("grid box must have positive width");
  std::size_t total = 1;
  for (std::size_t k = 0; k < box.dim(); ++k) {
    if (total > (std::size_t{1} << 40) / n) throw InvalidInput("grid is too large");
    total *= n;
  }
}

std::size_t GridGeometry::size() const noexcept {
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim(); ++k) total *= cells_per_axis;
  return total;
}

double GridGeometry::max_h() const noexcept {
  double m = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) m = std::max(m, h(k));
  return m;
}

double GridGeometry::cell_volume() const noexcept {
  double v = 1.0;
  for (std::size_t k = 0; k < dim(); ++k) v *= h(k);
  return v;
}

double GridGeometry::coordinate(std::size_t axis, std::size_t i) const noexcept {
  const double step = h(axis);
  if (2 * i < cells_per_axis) return box.lo[axis] + (static_cast<double>(i) + 0.5) * step;
  return box.hi[axis] - (static_cast<double>(cells_per_axis - i) - 0.5) * step;
}

Vector GridGeometry::midpoint(std::size_t flat) const {
  Vector p(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    p[k] = coordinate(k, flat % cells_per_axis);
    flat /= cells_per_axis;
  }
  return p;
}

std::size_t GridGeometry::flat_index(const std::size_t* multi) const noexcept {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < dim(); ++k) flat = flat * cells_per_axis + multi[k];
  return flat;
}

bool operator==(const GridGeometry& a, const GridGeometry& b) noexcept {
  return a.cells_per_axis == b.cells_per_axis && a.box.lo == b.box.lo && a.box.hi == b.box.hi;
}

GridFunction::GridFunction(GridGeometry geometry) : geometry_(std::move(geometry)), values_(geometry_.size(), 0.0) {}

GridFunction::GridFunction(GridGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
  if (values_.size() != geometry_.size()) throw InvalidInput("value count does not match the grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("grid function values must be finite");
}

GridFunction GridFunction::sample(const GridGeometry& geometry, const std::function<double(const Vector&)>& f) {
  std::vector<double> values(geometry.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = f(geometry.midpoint(i));
  return GridFunction(geometry, std::move(values));
}

double GridFunction::integral() const { return pairwise_sum(values_) * geometry_.cell_volume(); }

double GridFunction::sup_norm() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

double GridFunction::interpolate(const Vector& p, bool* outside) const {
  const std::size_t n = geometry_.dim();
  const std::size_t cells = geometry_.cells_per_axis;
  if (p.dim() != n) throw InvalidInput("interpolation point has the wrong dimension");
  std::size_t lo_idx[kMaxDim];
  double weight[kMaxDim];
  for (std::size_t k = 0; k < n; ++k) {
    if (!(p[k] >= geometry_.box.lo[k] && p[k] <= geometry_.box.hi[k])) {
      if (outside) *outside = true;
      return 0.0;
    }
    const double s = (p[k] - geometry_.box.lo[k]) / geometry_.h(k) - 0.5;
    if (s <= 0.0 || cells == 1) {
      lo_idx[k] = 0;
      weight[k] = 0.0;
    } else if (s >= static_cast<double>(cells - 1)) {
      lo_idx[k] = cells - 1;
      weight[k] = 0.0;
    } else {
      double base = std::floor(s);
      double w = s - base;
      // Snap rounding noise so midpoints read their own value exactly.
      if (w < 1e-9) {
        w = 0.0;
      } else if (w > 1.0 - 1e-9) {
        base += 1.0;
        w = 0.0;
      }
      lo_idx[k] = static_cast<std::size_t>(base);
      weight[k] = w;
    }
  }
  double sum = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 1.0;
    std::size_t idx[kMaxDim];
    bool skip = false;
    for (std::size_t k = 0; k < n; ++k) {
      const bool upper = (mask >> k) & 1U;
      if (upper && weight[k] == 0.0) {
        skip = true;
        break;
      }
      w *= upper ? weight[k] : 1.0 - weight[k];
      idx[k] = lo_idx[k] + (upper ? 1 : 0);
    }
    if (skip) continue;
    sum += w * values_[geometry_.flat_index(idx)];
  }
  return sum;
}

GridFunction GridFunction::combine(double alpha, const GridFunction& a, double beta, const GridFunction& b) {
  if (!a.compatible(b)) throw InvalidInput("grid functions have different geometries");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = alpha * a[i] + beta * b[i];
  return GridFunction(a.geometry_, std::move(v));
}

std::string GridFunction::to_csv() const {
  std::string out = "# box=";
  char buf[64];
  for (std::size_t k = 0; k < geometry_.dim(); ++k) {
    std::snprintf(buf, sizeof buf, "%s%.17g..%.17g", k ? "," : "", geometry_.box.lo[k], geometry_.box.hi[k]);
    out += buf;
  }
  out += " n=" + std::to_string(geometry_.cells_per_axis) + "\n";
  for (double v : values_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out += buf;
  }
  return out;
}

void GridFunction::save_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path);
  f << to_csv();
}

GridFunction GridFunction::parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::optional<Box> box;
  std::size_t cells = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream words(line.substr(1));
      std::string word;
      while (words >> word) {
        if (word.rfind("box=", 0) == 0) {
          std::vector<double> lo, hi;
          std::istringstream axes(word.substr(4));
          std::string axis;
          while (std::getline(axes, axis, ',')) {
            const auto dots = axis.find("..");
            if (dots == std::string::npos) throw InvalidInput("malformed box in grid header: " + axis);
            lo.push_back(std::stod(axis.substr(0, dots)));
            hi.push_back(std::stod(axis.substr(dots + 2)));
          }
          if (lo.empty() || lo.size() > kMaxDim) throw InvalidInput("grid header has a bad dimension");
          Box b{Vector(lo.size()), Vector(lo.size())};
          for (std::size_t k = 0; k < lo.size(); ++k) {
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
          }
          box = b;
        } else if (word.rfind("n=", 0) == 0) {
          cells = static_cast<std::size_t>(std::stoul(word.substr(2)));
        }
      }
      continue;
    }
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw InvalidInput("bad value line in grid CSV: " + line);
    }
  }
  if (!box || cells == 0) throw InvalidInput("grid CSV lacks a '# box=... n=...' header");
  return GridFunction(GridGeometry(*box, cells), std::move(values));
}

GridFunction GridFunction::load_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidInput("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace czo
