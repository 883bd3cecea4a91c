#include "czo/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "czo/detail/search.hpp"
#include "czo/errors.hpp"
#include "czo/parallel.hpp"

namespace czo {
namespace {

constexpr std::size_t kFaceSamples = 65;
constexpr std::size_t kFineSamples1d = 257;

// Calls visit(p) for a grid of `per_axis` points per axis over the box,
// faces included; degenerate axes get one point.
template <class F>
void for_grid(const Box& box, std::size_t per_axis, F&& visit) {
  const std::size_t n = box.dim();
  std::size_t counts[kMaxDim];
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) {
    counts[k] = box.width(k) > 0.0 ? per_axis : 1;
    total *= counts[k];
  }
  std::size_t idx[kMaxDim] = {};
  Vector p(n);
  for (std::size_t c = 0; c < total; ++c) {
    for (std::size_t k = 0; k < n; ++k) {
      if (counts[k] == 1 || idx[k] == 0) {
        p[k] = box.lo[k];
      } else if (idx[k] + 1 == counts[k]) {
        p[k] = box.hi[k];
      } else {
        p[k] = box.lo[k] + box.width(k) * static_cast<double>(idx[k]) / static_cast<double>(counts[k] - 1);
      }
    }
    visit(p);
    for (std::size_t k = n; k-- > 0;) {
      if (++idx[k] < counts[k]) break;
      idx[k] = 0;
    }
  }
}

// Calls visit(p) on samples of every face of the box.
template <class F>
void for_faces(const Box& box, F&& visit) {
  for (std::size_t k = 0; k < box.dim(); ++k) {
    for (double side : {box.lo[k], box.hi[k]}) {
      Box face = box;
      face.lo[k] = side;
      face.hi[k] = side;
      for_grid(face, kFaceSamples, visit);
    }
  }
}

struct BoundsAccumulator {
  std::optional<Box> box;
  void add(const Vector& p) {
    if (!box) {
      box = Box{p, p};
      return;
    }
    for (std::size_t k = 0; k < p.dim(); ++k) {
      box->lo[k] = std::min(box->lo[k], p[k]);
      box->hi[k] = std::max(box->hi[k], p[k]);
    }
  }
};

bool in_preimage(const CurveBranch& b, const Box& cube_box, const Vector& t) {
  return b.domain.contains(t) && cube_box.contains(b.forward(t));
}

bool meets_region(const Box& cube, const Box& region) {
  const auto inter = cube.intersect(region);
  if (!inter) return false;
  for (std::size_t k = 0; k < cube.dim(); ++k)
    if (region.width(k) > 0.0 && !(inter->width(k) > 0.0)) return false;
  return true;
}

}  // namespace

std::optional<std::size_t> BranchDisjointPartition::index_of(const DyadicCube& cube) const {
  if (!index_.empty() || cubes.empty()) {
    const auto it = index_.find(cube);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const auto it = std::lower_bound(cubes.begin(), cubes.end(), cube);
  if (it == cubes.end() || !(*it == cube)) return std::nullopt;
  return static_cast<std::size_t>(it - cubes.begin());
}

std::optional<Box> preimage_box(const HyperCurve& curve, std::size_t i, const DyadicCube& cube) {
  const CurveBranch& b = curve.branch(i);
  if (cube.dim() != curve.dim()) throw InvalidInput("cube dimension does not match the curve");
  const Box cb = cube.box();
  const std::vector<Box> pieces = b.domain.clipped(curve.sampling_box());
  BoundsAccumulator acc;

  if (b.is_constant()) {
    if (!cb.contains(*b.constant_value)) return std::nullopt;
    for (const Box& p : pieces) {
      acc.add(p.lo);
      acc.add(p.hi);
    }
    return acc.box;
  }

  const Box& sb = curve.sampling_box();
  for_faces(cb, [&](const Vector& y) {
    const Vector t = b.inverse(y);
    if (!all_finite(t) || !sb.contains(t) || !b.domain.contains(t, kDomainTolerance)) return;
    if (distance(b.forward(t), y) > 1e-9 * (1.0 + norm(y))) return;
    acc.add(t);
  });
  for (const Box& p : pieces) {
    for_faces(p, [&](const Vector& t) {
      if (cb.contains(b.forward(t))) acc.add(t);
    });
  }
  return acc.box;
}

bool disjoint_preimage_test(const HyperCurve& curve, const DyadicCube& cube) {
  const std::size_t r = curve.branch_count();
  std::vector<std::optional<Box>> boxes(r);
  for (std::size_t i = 0; i < r; ++i) boxes[i] = preimage_box(curve, i, cube);
  const Box cb = cube.box();
  const std::size_t per_axis = curve.dim() == 1 ? kFineSamples1d : detail::samples_per_axis(curve.dim(), 4096) + 1;
  for (std::size_t i = 0; i < r; ++i) {
    if (!boxes[i]) continue;
    for (std::size_t j = i + 1; j < r; ++j) {
      if (!boxes[j]) continue;
      const auto overlap = boxes[i]->intersect(*boxes[j]);
      if (!overlap) continue;
      bool common = false;
      for_grid(*overlap, per_axis, [&](const Vector& t) {
        if (!common && in_preimage(curve.branch(i), cb, t) && in_preimage(curve.branch(j), cb, t)) common = true;
      });
      if (common) return false;
    }
  }
  return true;
}

BranchDisjointPartition build_partition(const HyperCurve& curve, const Box& region, int max_depth) {
  if (max_depth < 0) throw InvalidInput("max_depth must be nonnegative");
  if (region.dim() != curve.dim() || !region.bounded()) throw InvalidInput("partition region must be bounded");
  const std::size_t n = curve.dim();

  BranchDisjointPartition out;
  out.exceptional_points = curve.exceptional_points();
  out.region = region;
  out.max_depth = max_depth;
  out.sound = curve.certified_preimages();

  std::vector<DyadicCube> frontier;
  {
    std::int64_t lo[kMaxDim], hi[kMaxDim];
    std::size_t total = 1;
    for (std::size_t k = 0; k < n; ++k) {
      lo[k] = static_cast<std::int64_t>(std::floor(region.lo[k]));
      hi[k] = std::max(lo[k] + 1, static_cast<std::int64_t>(std::ceil(region.hi[k])));
      total *= static_cast<std::size_t>(hi[k] - lo[k]);
    }
    std::vector<std::int64_t> corner(n);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rem = c;
      for (std::size_t k = n; k-- > 0;) {
        const auto span = static_cast<std::size_t>(hi[k] - lo[k]);
        corner[k] = lo[k] + static_cast<std::int64_t>(rem % span);
        rem /= span;
      }
      DyadicCube cube(0, corner);
      if (meets_region(cube.box(), region)) frontier.push_back(cube);
    }
  }

  enum class Verdict { drop, accept, split };
  std::vector<DyadicCube> accepted;
  std::vector<std::vector<std::size_t>> accepted_owners;
  for (int level = 0; !frontier.empty(); ++level) {
    std::vector<Verdict> verdicts(frontier.size());
    std::vector<std::vector<std::size_t>> owners(frontier.size());
    parallel_for(frontier.size(), [&](std::size_t c) {
      const DyadicCube& cube = frontier[c];
      for (std::size_t i = 0; i < curve.branch_count(); ++i)
        if (preimage_box(curve, i, cube)) owners[c].push_back(i);
      if (owners[c].empty()) {
        verdicts[c] = Verdict::drop;
        return;
      }
      const bool hits_y = std::any_of(out.exceptional_points.begin(), out.exceptional_points.end(),
                                      [&](const Vector& y) { return cube.contains_point(y); });
      verdicts[c] = !hits_y && disjoint_preimage_test(curve, cube) ? Verdict::accept : Verdict::split;
    }, 1);

    std::vector<DyadicCube> next;
    for (std::size_t c = 0; c < frontier.size(); ++c) {
      if (verdicts[c] == Verdict::accept) {
        accepted.push_back(frontier[c]);
        accepted_owners.push_back(std::move(owners[c]));
      } else if (verdicts[c] == Verdict::split) {
        if (level == max_depth) {
          out.leftover.push_back(frontier[c]);
        } else {
          for (const DyadicCube& child : frontier[c].children())
            if (meets_region(child.box(), region)) next.push_back(child);
        }
      }
    }
    frontier = std::move(next);
  }

  std::vector<std::size_t> order(accepted.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return accepted[a] < accepted[b]; });
  for (std::size_t k : order) {
    out.index_.emplace(accepted[k], out.cubes.size());
    out.cubes.push_back(accepted[k]);
    out.owners.push_back(std::move(accepted_owners[k]));
  }
  std::sort(out.leftover.begin(), out.leftover.end());
  for (const DyadicCube& c : out.leftover)
    if (const auto inter = c.box().intersect(region)) out.leftover_measure += inter->volume();
  return out;
}

std::vector<InducedMatch> induced_map_matches(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                              const Vector& x) {
  std::vector<InducedMatch> out;
  const std::size_t n = curve.dim();
  if (x.dim() != n) throw InvalidInput("point dimension does not match the curve");
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const CurveBranch& b = curve.branch(i);
    if (!b.domain.contains(x, kDomainTolerance)) continue;
    const Vector y = b.forward(x);
    for (int level = 0; level <= partition.max_depth; ++level) {
      // Closed cubes: a coordinate on a dyadic boundary belongs to two cubes.
      std::int64_t base[kMaxDim];
      bool twin[kMaxDim];
      for (std::size_t k = 0; k < n; ++k) {
        const double s = std::ldexp(y[k], level);
        base[k] = static_cast<std::int64_t>(std::floor(s));
        twin[k] = s == std::floor(s);
      }
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        std::vector<std::int64_t> corner(n);
        bool valid = true;
        for (std::size_t k = 0; k < n; ++k) {
          const bool lower = (mask >> k) & 1U;
          if (lower && !twin[k]) valid = false;
          corner[k] = base[k] - (lower ? 1 : 0);
        }
        if (!valid) continue;
        if (const auto j = partition.index_of(DyadicCube(level, corner))) out.push_back({*j, i});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const InducedMatch& a, const InducedMatch& b) {
    return a.cube < b.cube || (a.cube == b.cube && a.branch < b.branch);
  });
  return out;
}

std::optional<InducedMatch> induced_map_lookup(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                               const Vector& x) {
  const auto matches = induced_map_matches(partition, curve, x);
  if (matches.empty()) return std::nullopt;
  return matches.front();
}

std::optional<std::size_t> lookup_in_cube(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                          const Vector& x, std::size_t j) {
  if (j >= partition.cubes.size()) throw InvalidInput("cube index out of range");
  const Box cb = partition.cubes[j].box();
  std::optional<std::size_t> found;
  for (std::size_t i = 0; i < curve.branch_count(); ++i) {
    const CurveBranch& b = curve.branch(i);
    if (!b.domain.contains(x, kDomainTolerance) || !cb.contains(b.forward(x))) continue;
    if (found)
      throw ConsistencyError("branches " + std::to_string(*found) + " and " + std::to_string(i) +
                             " both map x = (" + to_string(x) + ") into cube " + to_string(partition.cubes[j]));
    found = i;
  }
  return found;
}

}  // namespace czo
