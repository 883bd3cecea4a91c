#pragma once

// Built-in curves and kernels, looked up by name.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "czo/geometry.hpp"
#include "czo/kernel.hpp"

namespace czo {

/// gamma(x) = x on R^n.
std::shared_ptr<const HyperCurve> make_diagonal_curve(std::size_t dim = 1, double half_width = 32.0);
/// gamma = +-x on R^n; Y = {0}.
std::shared_ptr<const HyperCurve> make_two_lines_curve(std::size_t dim = 1, double half_width = 32.0);
/// gamma = +-(1 - |x|) on [-1, 1] and 0 on |x| >= 1, in one dimension. The
/// slanted graphs are split at x = 0 into four invertible branches
/// (1-x, 1+x, x-1, -1-x); the flat part is a constant branch on two boxes.
/// Y = {-1, 0, 1}.
std::shared_ptr<const HyperCurve> make_diamond_curve(double half_width = 32.0);

/// K = 1/(x-y) on the diagonal curve.
KernelSpec make_hilbert_kernel();
/// K = 1/(x-y) + 1/(x+y) on the two-lines curve.
KernelSpec make_two_line_hilbert_kernel();
/// K = s / rho(x, y) on the diamond, s = -1 strictly inside |y| < 1 - |x| and
/// +1 elsewhere; claims the size condition only.
KernelSpec make_diamond_model_kernel();
KernelSpec make_zero_kernel(std::shared_ptr<const HyperCurve> curve);

std::vector<std::string> curve_names();
std::vector<std::string> kernel_names();
/// nullptr / nullopt for unknown names.
std::shared_ptr<const HyperCurve> find_curve(const std::string& name, std::size_t dim = 1);
std::optional<KernelSpec> find_kernel(const std::string& name);

}  // namespace czo
