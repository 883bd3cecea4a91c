#pragma once

// Dyadic partitions of the curve's range on which distinct branches have
// disjoint preimages, and the induced branch lookup x -> (cube, branch).

#include <map>
#include <optional>
#include <vector>

#include "czo/geometry.hpp"

namespace czo {

struct BranchDisjointPartition {
  /// Accepted cubes sorted by (level, corner).
  std::vector<DyadicCube> cubes;
  /// Branches with a nonempty preimage of each accepted cube.
  std::vector<std::vector<std::size_t>> owners;
  /// Cubes still failing at the maximum depth.
  std::vector<DyadicCube> leftover;
  double leftover_measure = 0.0;
  std::vector<Vector> exceptional_points;
  Box region;
  int max_depth = 0;
  /// True when the preimage test is exact for the curve (monotone inverses);
  /// otherwise disjointness was established by sampling only.
  bool sound = false;

  /// Index of an accepted cube, if present.
  std::optional<std::size_t> index_of(const DyadicCube& cube) const;

 private:
  friend BranchDisjointPartition build_partition(const HyperCurve&, const Box&, int);
  std::map<DyadicCube, std::size_t> index_;
};

/// Splits level-0 cubes meeting the region until each either avoids Y and
/// passes disjoint_preimage_test (accepted) or reaches max_depth (leftover).
BranchDisjointPartition build_partition(const HyperCurve& curve, const Box& region, int max_depth);

/// Bounding box of gamma_i^{-1}(cube) within the sampling box, or nullopt if
/// the preimage is empty.
std::optional<Box> preimage_box(const HyperCurve& curve, std::size_t i, const DyadicCube& cube);

/// True iff gamma_i^{-1}(cube) and gamma_j^{-1}(cube) are disjoint for all
/// branch pairs: bounding boxes first, then a sample check where boxes meet.
bool disjoint_preimage_test(const HyperCurve& curve, const DyadicCube& cube);

struct InducedMatch {
  std::size_t cube = 0;
  std::size_t branch = 0;
};

/// Every (j, i) with x in D_i and gamma_i(x) in the closed cube I_j, sorted by
/// cube index then branch.
std::vector<InducedMatch> induced_map_matches(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                              const Vector& x);

/// The match with the lowest cube index, or nullopt when x is not in
/// gamma^{-1}(union I_j).
std::optional<InducedMatch> induced_map_lookup(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                               const Vector& x);

/// The branch i with x in gamma_i^{-1}(I_j), or nullopt. Throws
/// ConsistencyError if two branches match within the one cube.
std::optional<std::size_t> lookup_in_cube(const BranchDisjointPartition& partition, const HyperCurve& curve,
                                          const Vector& x, std::size_t j);

}  // namespace czo
