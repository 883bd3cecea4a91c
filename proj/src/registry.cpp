#include "czo/registry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "czo/errors.hpp"
#include "czo/metric.hpp"

namespace czo {
namespace {

CurveBranch linear_branch(std::string label, Region domain, double slope, double offset) {
  CurveBranch b;
  b.label = std::move(label);
  b.domain = std::move(domain);
  b.forward = [slope, offset](const Vector& x) { return x * slope + Vector(x.dim(), offset); };
  b.inverse = [slope, offset](const Vector& y) { return (y - Vector(y.dim(), offset)) * (1.0 / slope); };
  b.jacobian = [slope](const Vector& x) { return std::pow(slope, static_cast<double>(x.dim())); };
  b.lipschitz = std::fabs(slope);
  return b;
}

}  // namespace

std::shared_ptr<const HyperCurve> make_diagonal_curve(std::size_t dim, double half_width) {
  std::vector<CurveBranch> branches{linear_branch("x", Region::whole_space(dim), 1.0, 0.0)};
  return std::make_shared<const HyperCurve>("diagonal", dim, std::move(branches), std::vector<Vector>{},
                                            Box::symmetric(dim, half_width), true);
}

std::shared_ptr<const HyperCurve> make_two_lines_curve(std::size_t dim, double half_width) {
  std::vector<CurveBranch> branches{linear_branch("x", Region::whole_space(dim), 1.0, 0.0),
                                    linear_branch("-x", Region::whole_space(dim), -1.0, 0.0)};
  return std::make_shared<const HyperCurve>("two-lines", dim, std::move(branches), std::vector<Vector>{Vector(dim)},
                                            Box::symmetric(dim, half_width), true);
}

std::shared_ptr<const HyperCurve> make_diamond_curve(double half_width) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<CurveBranch> branches{
      linear_branch("1-x", Region({Box::interval(0.0, 1.0)}), -1.0, 1.0),
      linear_branch("1+x", Region({Box::interval(-1.0, 0.0)}), 1.0, 1.0),
      linear_branch("x-1", Region({Box::interval(0.0, 1.0)}), 1.0, -1.0),
      linear_branch("-1-x", Region({Box::interval(-1.0, 0.0)}), -1.0, -1.0),
  };
  CurveBranch flat;
  flat.label = "0";
  flat.domain = Region({Box::interval(-inf, -1.0), Box::interval(1.0, inf)});
  flat.forward = [](const Vector& x) { return Vector(x.dim(), 0.0); };
  flat.jacobian = [](const Vector&) { return 0.0; };
  flat.lipschitz = 1.0;
  flat.constant_value = Vector{0.0};
  branches.push_back(std::move(flat));
  return std::make_shared<const HyperCurve>("diamond", 1, std::move(branches),
                                            std::vector<Vector>{Vector{-1.0}, Vector{0.0}, Vector{1.0}},
                                            Box::symmetric(1, half_width), true);
}

KernelSpec make_hilbert_kernel() {
  KernelSpec k;
  k.name = "hilbert";
  k.curve = make_diagonal_curve(1);
  k.evaluate = [](const Vector& x, const Vector& y) { return 1.0 / (x[0] - y[0]); };
  k.size_constant = 1.0 / std::numbers::sqrt2 + 1e-3;
  // sup of the Hoelder ratio is 1 / (2 - 1/sqrt 2) = 0.77346...
  k.regularity_constant = 0.775;
  k.delta = 1.0;
  return k;
}

KernelSpec make_two_line_hilbert_kernel() {
  KernelSpec k;
  k.name = "two-line-hilbert";
  k.curve = make_two_lines_curve(1);
  k.evaluate = [](const Vector& x, const Vector& y) { return 1.0 / (x[0] - y[0]) + 1.0 / (x[0] + y[0]); };
  k.size_constant = std::numbers::sqrt2 + 1e-3;
  // sup of the Hoelder ratio is 1 / (1 - 1/(2 sqrt 2)) = 1.5469..., attained in x at y = 0.
  k.regularity_constant = 1.55;
  k.delta = 1.0;
  return k;
}

KernelSpec make_diamond_model_kernel() {
  KernelSpec k;
  k.name = "diamond-model";
  auto curve = make_diamond_curve();
  k.curve = curve;
  k.evaluate = [curve](const Vector& x, const Vector& y) {
    const double s = std::fabs(y[0]) < 1.0 - std::fabs(x[0]) ? -1.0 : 1.0;
    return s / rho(*curve, x, y).value;
  };
  k.size_constant = 1.0 + 1e-3;
  k.regularity_constant = std::numeric_limits<double>::infinity();
  k.delta = 1.0;
  k.regularity_audited = false;
  return k;
}

KernelSpec make_zero_kernel(std::shared_ptr<const HyperCurve> curve) {
  KernelSpec k;
  k.name = "zero";
  k.curve = std::move(curve);
  k.evaluate = [](const Vector&, const Vector&) { return 0.0; };
  k.size_constant = 0.0;
  k.regularity_constant = 0.0;
  return k;
}

std::vector<std::string> curve_names() { return {"diagonal", "two-lines", "diamond"}; }
std::vector<std::string> kernel_names() { return {"hilbert", "two-line-hilbert", "diamond-model"}; }

std::shared_ptr<const HyperCurve> find_curve(const std::string& name, std::size_t dim) {
  if (name == "diagonal") return make_diagonal_curve(dim);
  if (name == "two-lines") return make_two_lines_curve(dim);
  if (name == "diamond") return dim == 1 ? make_diamond_curve() : nullptr;
  return nullptr;
}

std::optional<KernelSpec> find_kernel(const std::string& name) {
  if (name == "hilbert") return make_hilbert_kernel();
  if (name == "two-line-hilbert") return make_two_line_hilbert_kernel();
  if (name == "diamond-model") return make_diamond_model_kernel();
  return std::nullopt;
}

}  // namespace czo
