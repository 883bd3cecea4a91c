#include "czo/operator.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "czo/errors.hpp"
#include "czo/metric.hpp"
#include "czo/numeric.hpp"
#include "czo/parallel.hpp"

namespace czo {
namespace {

constexpr std::size_t kMaxCachedEntries = std::size_t{1} << 24;

std::vector<Vector> midpoints(const GridGeometry& g) {
  std::vector<Vector> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.midpoint(i);
  return out;
}

}  // namespace

TruncatedOperator::TruncatedOperator(KernelSpec kernel, double epsilon, GridGeometry input, std::vector<Vector> outputs)
    : kernel_(std::move(kernel)), epsilon_(epsilon), input_(std::move(input)), outputs_(std::move(outputs)) {
  if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) throw InvalidInput("epsilon must be positive");
  if (input_.dim() != kernel_.singular_curve().dim()) throw InvalidInput("grid dimension does not match the kernel");
  for (const Vector& x : outputs_)
    if (x.dim() != input_.dim() || !all_finite(x)) throw InvalidInput("bad output point");
  input_points_ = midpoints(input_);

  const std::size_t cols = input_points_.size();
  if (outputs_.size() * cols <= kMaxCachedEntries) {
    matrix_.assign(outputs_.size() * cols, 0.0);
    parallel_for(outputs_.size(), [&](std::size_t r) {
      double* row = matrix_.data() + r * cols;
      for (std::size_t p = 0; p < cols; ++p) row[p] = entry(r, cell_at(p));
    }, 1);
  }
}

TruncatedOperator::TruncatedOperator(KernelSpec kernel, double epsilon, GridGeometry input, const GridGeometry& output)
    : TruncatedOperator(std::move(kernel), epsilon, std::move(input), midpoints(output)) {
  output_geometry_ = output;
}

double TruncatedOperator::entry(std::size_t row, std::size_t cell) const {
  const Vector& x = outputs_[row];
  const Vector& y = input_points_[cell];
  if (!rho_at_least(kernel_.singular_curve(), x, y, epsilon_)) return 0.0;
  return kernel_.evaluate(x, y);
}

std::size_t TruncatedOperator::cell_at(std::size_t position) const noexcept {
  const std::size_t total = input_points_.size();
  if (total % 2 == 1 && position + 1 == total) return total / 2;
  return position % 2 == 0 ? position / 2 : total - 1 - position / 2;
}

std::size_t TruncatedOperator::position_of(std::size_t cell) const noexcept {
  const std::size_t total = input_points_.size();
  if (total % 2 == 1 && cell == total / 2) return total - 1;
  return 2 * cell < total ? 2 * cell : 2 * (total - 1 - cell) + 1;
}

std::vector<double> TruncatedOperator::apply_values(const GridFunction& f) const {
  if (!(f.geometry() == input_)) throw InvalidInput("function grid does not match the operator's input grid");
  const std::size_t cols = input_points_.size();
  const double volume = input_.cell_volume();
  std::vector<double> out(outputs_.size());
  parallel_chunks(outputs_.size(), 8, [&](std::size_t begin, std::size_t end) {
    std::vector<double> terms(cols);
    for (std::size_t r = begin; r < end; ++r) {
      if (cached()) {
        const double* row = matrix_.data() + r * cols;
        for (std::size_t p = 0; p < cols; ++p) terms[p] = row[p] * f[cell_at(p)];
      } else {
        for (std::size_t p = 0; p < cols; ++p) {
          const std::size_t c = cell_at(p);
          terms[p] = f[c] == 0.0 ? 0.0 : entry(r, c) * f[c];
        }
      }
      // Adding +0.0 turns a -0.0 total into +0.0.
      out[r] = pairwise_sum(terms) * volume + 0.0;
    }
  });
  return out;
}

GridFunction TruncatedOperator::apply(const GridFunction& f) const {
  if (!output_geometry_) throw InvalidInput("operator was built for a point list, not an output grid");
  return GridFunction(*output_geometry_, apply_values(f));
}

std::vector<double> TruncatedOperator::apply_on_cells(const std::vector<std::size_t>& cells,
                                                      const std::vector<double>& values) const {
  if (cells.size() != values.size()) throw InvalidInput("cells and values differ in length");
  const std::size_t cols = input_points_.size();
  for (std::size_t c : cells)
    if (c >= cols) throw InvalidInput("cell index out of range");
  const double volume = input_.cell_volume();
  std::vector<double> out(outputs_.size());
  parallel_chunks(outputs_.size(), 8, [&](std::size_t begin, std::size_t end) {
    std::vector<double> terms(cells.size());
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        const double e = cached() ? matrix_[r * cols + position_of(cells[k])] : entry(r, cells[k]);
        terms[k] = e * values[k];
      }
      out[r] = pairwise_sum(terms) * volume + 0.0;
    }
  });
  return out;
}

GridFunction apply_truncated(const KernelSpec& kernel, const GridFunction& f, double epsilon, const GridGeometry& out) {
  return TruncatedOperator(kernel, epsilon, f.geometry(), out).apply(f);
}

std::vector<double> apply_truncated_at(const KernelSpec& kernel, const GridFunction& f, double epsilon,
                                       const std::vector<Vector>& points) {
  return TruncatedOperator(kernel, epsilon, f.geometry(), points).apply_values(f);
}

T0Estimate estimate_T0(const KernelSpec& kernel, const GridFunction& f, const std::vector<double>& epsilons,
                       const GridGeometry& out) {
  if (epsilons.empty()) throw InvalidInput("epsilon list is empty");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0)) throw InvalidInput("epsilons must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) throw InvalidInput("epsilons must be strictly decreasing");
  }
  T0Estimate est;
  est.epsilons = epsilons;
  GridFunction previous;
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    TruncatedOperator op(kernel, epsilons[k], f.geometry(), out);
    est.reliable.push_back(op.reliable());
    GridFunction current = op.apply(f);
    if (k > 0) {
      double d = 0.0;
      for (std::size_t i = 0; i < current.size(); ++i) d = std::max(d, std::fabs(current[i] - previous[i]));
      est.sup_differences.push_back(d);
    }
    previous = std::move(current);
  }
  est.result = std::move(previous);
  for (std::size_t k = 2; k < est.sup_differences.size(); ++k)
    if (est.sup_differences[k] > est.sup_differences[k - 1]) est.monotone_tail = false;
  return est;
}

// --- multipliers ---------------------------------------------------------------

MultiplierField MultiplierField::zero(const HyperCurve& curve, const GridGeometry& geometry) {
  if (geometry.dim() != curve.dim()) throw InvalidInput("grid dimension does not match the curve");
  MultiplierField b;
  b.geometry = geometry;
  b.values.assign(curve.branch_count(), std::vector<double>(geometry.size(), 0.0));
  b.in_domain.assign(curve.branch_count(), std::vector<unsigned char>(geometry.size(), 0));
  for (std::size_t c = 0; c < geometry.size(); ++c) {
    const Vector x = geometry.midpoint(c);
    for (std::size_t i = 0; i < curve.branch_count(); ++i)
      b.in_domain[i][c] = curve.branch(i).domain.contains(x, kDomainTolerance) ? 1 : 0;
  }
  return b;
}

MultiplierField MultiplierField::sample(const HyperCurve& curve, const GridGeometry& geometry,
                                        const std::vector<std::function<double(const Vector&)>>& branches) {
  if (branches.size() != curve.branch_count()) throw InvalidInput("need one multiplier per branch");
  MultiplierField b = zero(curve, geometry);
  for (std::size_t c = 0; c < geometry.size(); ++c) {
    const Vector x = geometry.midpoint(c);
    for (std::size_t i = 0; i < branches.size(); ++i)
      if (b.in_domain[i][c] && branches[i]) b.values[i][c] = branches[i](x);
  }
  return b;
}

GridFunction apply_multiplier(const HyperCurve& curve, const MultiplierField& b, const GridFunction& f,
                              std::size_t* outside_reads) {
  if (b.branch_count() != curve.branch_count()) throw InvalidInput("multiplier field does not match the curve");
  GridFunction out(b.geometry);
  std::size_t outside = 0;
  for (std::size_t c = 0; c < b.geometry.size(); ++c) {
    const Vector x = b.geometry.midpoint(c);
    double sum = 0.0;
    for (std::size_t i = 0; i < curve.branch_count(); ++i) {
      if (!b.in_domain[i][c] || b.values[i][c] == 0.0) continue;
      bool off = false;
      const double v = f.interpolate(curve.branch(i).forward(x), &off);
      if (off) ++outside;
      sum += b.values[i][c] * v;
    }
    out[c] = sum;
  }
  if (outside_reads) *outside_reads = outside;
  return out;
}

// --- handles -------------------------------------------------------------------

struct OperatorHandle::Impl {
  Kind kind = Kind::black_box;
  KernelSpec kernel;
  double epsilon = 0.0;
  std::shared_ptr<const HyperCurve> curve;
  MultiplierField field;
  double alpha = 0.0, beta = 0.0;
  std::shared_ptr<Impl> a, b;
  BlackBox map;

  struct CacheEntry {
    GridGeometry in, out;
    std::shared_ptr<const TruncatedOperator> op;
  };
  std::mutex cache_mutex;
  std::vector<CacheEntry> cache;

  std::shared_ptr<const TruncatedOperator> truncated_for(const GridGeometry& in, const GridGeometry& out) {
    std::lock_guard lock(cache_mutex);
    for (const CacheEntry& e : cache)
      if (e.in == in && e.out == out) return e.op;
    auto op = std::make_shared<const TruncatedOperator>(kernel, epsilon, in, out);
    cache.push_back({in, out, op});
    return op;
  }

  GridFunction apply(const GridFunction& f, const GridGeometry& out) {
    switch (kind) {
      case Kind::truncated:
        return truncated_for(f.geometry(), out)->apply(f);
      case Kind::multiplier:
        if (!(field.geometry == out)) throw InvalidInput("multiplier field lives on a different output grid");
        return apply_multiplier(*curve, field, f);
      case Kind::sum:
        return GridFunction::combine(alpha, a->apply(f, out), beta, b->apply(f, out));
      case Kind::black_box: {
        GridFunction g = map(f, out);
        if (!(g.geometry() == out)) throw InvalidInput("black-box operator returned the wrong grid");
        return g;
      }
    }
    throw ConsistencyError("unknown operator kind");
  }
};

OperatorHandle OperatorHandle::truncated(KernelSpec kernel, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::truncated;
  impl->kernel = std::move(kernel);
  impl->epsilon = epsilon;
  return OperatorHandle(std::move(impl));
}

OperatorHandle OperatorHandle::multiplier(std::shared_ptr<const HyperCurve> curve, MultiplierField b) {
  if (!curve || b.branch_count() != curve->branch_count()) throw InvalidInput("multiplier field does not match the curve");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::multiplier;
  impl->curve = std::move(curve);
  impl->field = std::move(b);
  return OperatorHandle(std::move(impl));
}

OperatorHandle OperatorHandle::sum(double alpha, OperatorHandle a, double beta, OperatorHandle b) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::sum;
  impl->alpha = alpha;
  impl->beta = beta;
  impl->a = std::move(a.impl_);
  impl->b = std::move(b.impl_);
  return OperatorHandle(std::move(impl));
}

OperatorHandle OperatorHandle::black_box(BlackBox map) {
  if (!map) throw InvalidInput("black-box operator needs a callable");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::black_box;
  impl->map = std::move(map);
  return OperatorHandle(std::move(impl));
}

OperatorHandle::Kind OperatorHandle::kind() const noexcept { return impl_->kind; }

GridFunction OperatorHandle::apply(const GridFunction& f, const GridGeometry& out) const { return impl_->apply(f, out); }

// --- recovery ------------------------------------------------------------------

RecoveryResult recover_multipliers(const OperatorHandle& difference, const HyperCurve& curve,
                                   const BranchDisjointPartition& partition, const GridGeometry& input,
                                   const GridGeometry& output) {
  std::vector<GridFunction> h;
  h.reserve(partition.cubes.size());
  for (const DyadicCube& cube : partition.cubes) {
    const Box cb = cube.box();
    const GridFunction chi = GridFunction::sample(input, [&](const Vector& y) { return cb.contains(y) ? 1.0 : 0.0; });
    h.push_back(difference.apply(chi, output));
  }

  RecoveryResult out;
  out.field = MultiplierField::zero(curve, output);
  out.covered.assign(curve.branch_count(), std::vector<unsigned char>(output.size(), 0));
  for (std::size_t c = 0; c < output.size(); ++c) {
    const Vector x = output.midpoint(c);
    const auto matches = induced_map_matches(partition, curve, x);
    for (std::size_t i = 0; i < curve.branch_count(); ++i) {
      if (!out.field.in_domain[i][c]) continue;
      const auto it = std::find_if(matches.begin(), matches.end(), [&](const InducedMatch& m) { return m.branch == i; });
      if (it == matches.end()) {
        ++out.uncovered_points;
        continue;
      }
      if (lookup_in_cube(partition, curve, x, it->cube) != i)
        throw ConsistencyError("induced lookup disagrees with the cube test");
      out.field.values[i][c] = h[it->cube][c];
      out.covered[i][c] = 1;
    }
  }
  return out;
}

MultiplierBound multiplier_bound_check(const HyperCurve& curve, const MultiplierField& b, double cap) {
  if (!(cap > 0.0)) throw InvalidInput("cap must be positive");
  MultiplierBound out;
  out.cap = cap;
  out.branch_sup.assign(curve.branch_count(), 0.0);
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const CurveBranch& br = curve.branch(i);
    for (std::size_t c = 0; c < b.geometry.size(); ++c) {
      if (!b.in_domain[i][c]) continue;
      const double v = b.values[i][c];
      if (v == 0.0) continue;
      const double j = br.jacobian ? std::fabs(br.jacobian(b.geometry.midpoint(c))) : 0.0;
      const double q = j > 0.0 ? v * v / j : std::numeric_limits<double>::infinity();
      out.branch_sup[i] = std::max(out.branch_sup[i], q);
    }
    if (out.branch_sup[i] > cap) out.passed = false;
  }
  return out;
}

}  // namespace czo
