#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "czo/errors.hpp"
#include "czo/partition.hpp"
#include "czo/random.hpp"
#include "czo/registry.hpp"

using namespace czo;

TEST_CASE("preimage test on single cubes") {
  const auto two = make_two_lines_curve();
  CHECK(disjoint_preimage_test(*two, DyadicCube(0, {1})));
  CHECK_FALSE(disjoint_preimage_test(*two, DyadicCube(0, {0})));
  CHECK_FALSE(disjoint_preimage_test(*two, DyadicCube(-1, {-1})));

  const auto diamond = make_diamond_curve();
  const DyadicCube q(2, {1});
  CHECK(disjoint_preimage_test(*diamond, q));
  const auto b0 = preimage_box(*diamond, 0, q);
  const auto b1 = preimage_box(*diamond, 1, q);
  REQUIRE(b0.has_value());
  REQUIRE(b1.has_value());
  CHECK(b0->lo[0] == doctest::Approx(0.5));
  CHECK(b0->hi[0] == doctest::Approx(0.75));
  CHECK(b1->lo[0] == doctest::Approx(-0.75));
  CHECK(b1->hi[0] == doctest::Approx(-0.5));
  CHECK_FALSE(preimage_box(*diamond, 2, q).has_value());
}

TEST_CASE("two-lines partition avoids the crossing") {
  const auto two = make_two_lines_curve();
  const BranchDisjointPartition p = build_partition(*two, Box::symmetric(1, 4.0), 6);
  CHECK(p.sound);
  CHECK_FALSE(p.cubes.empty());
  CHECK(std::is_sorted(p.cubes.begin(), p.cubes.end()));
  for (const DyadicCube& q : p.cubes) CHECK_FALSE(q.contains_point(Vector{0.0}));
  CHECK(p.index_of(DyadicCube(0, {1})).has_value());
  CHECK(p.leftover_measure <= 2.0 * std::ldexp(1.0, -6) + 1e-15);
  for (std::size_t a = 0; a < p.cubes.size(); ++a)
    for (std::size_t b = a + 1; b < p.cubes.size(); ++b) CHECK(p.cubes[a].interiors_disjoint(p.cubes[b]));
}

TEST_CASE("diagonal partition is the unit cubes") {
  const auto diag = make_diagonal_curve();
  const BranchDisjointPartition p = build_partition(*diag, Box::symmetric(1, 4.0), 0);
  CHECK(p.cubes.size() == 8);
  CHECK(p.leftover.empty());
  for (const DyadicCube& q : p.cubes) CHECK(q.level() == 0);
}

TEST_CASE("diamond leftover shrinks with depth") {
  const auto diamond = make_diamond_curve();
  double previous = INFINITY;
  for (int depth = 4; depth <= 8; ++depth) {
    const BranchDisjointPartition p = build_partition(*diamond, Box::symmetric(1, 4.0), depth);
    CHECK(p.leftover_measure <= previous);
    CHECK(p.leftover_measure <= 3.0 * 2.0 * std::ldexp(1.0, -depth) + 1e-15);
    previous = p.leftover_measure;
  }
}

TEST_CASE("induced map lookup") {
  const auto two = make_two_lines_curve();
  const BranchDisjointPartition p = build_partition(*two, Box::symmetric(1, 4.0), 6);
  // 1.5 maps to 1.5 on branch 0 and to -1.5 on branch 1; [-2,-1] sorts first.
  const auto matches = induced_map_matches(p, *two, Vector{1.5});
  REQUIRE(matches.size() == 2);
  CHECK(p.cubes[matches[0].cube] == DyadicCube(0, {-2}));
  CHECK(matches[0].branch == 1);
  CHECK(p.cubes[matches[1].cube] == DyadicCube(0, {1}));
  CHECK(matches[1].branch == 0);
  const auto a = induced_map_lookup(p, *two, Vector{1.5});
  REQUIRE(a.has_value());
  CHECK(a->cube == matches[0].cube);
  CHECK(a->branch == 1);

  const std::size_t j = *p.index_of(DyadicCube(0, {1}));
  CHECK(lookup_in_cube(p, *two, Vector{1.5}, j) == std::optional<std::size_t>(0));
  CHECK(lookup_in_cube(p, *two, Vector{-1.5}, j) == std::optional<std::size_t>(1));
  CHECK_FALSE(lookup_in_cube(p, *two, Vector{3.5}, j).has_value());

  const auto diag = make_diagonal_curve();
  const BranchDisjointPartition d = build_partition(*diag, Box::symmetric(1, 4.0), 0);
  CHECK_FALSE(induced_map_lookup(d, *diag, Vector{10.0}).has_value());
}

TEST_CASE("one branch per point and cube") {
  const auto diamond = make_diamond_curve();
  const BranchDisjointPartition p = build_partition(*diamond, Box::symmetric(1, 4.0), 7);
  Rng rng(41);
  for (std::size_t j = 0; j < p.cubes.size(); ++j) {
    for (int k = 0; k < 20; ++k) {
      for (std::size_t i = 0; i < diamond->branch_count(); ++i) {
        const auto pre = preimage_box(*diamond, i, p.cubes[j]);
        if (!pre) continue;
        const Vector x = rng.point_in(*pre);
        CHECK_NOTHROW(lookup_in_cube(p, *diamond, x, j));
      }
    }
  }
}

TEST_CASE("coverage matches the leftover") {
  const auto two = make_two_lines_curve();
  const Box region = Box::symmetric(1, 8.0);
  const BranchDisjointPartition p = build_partition(*two, region, 8);
  Rng rng(43);
  const int n = 20000;
  int covered = 0;
  for (int k = 0; k < n; ++k) {
    const Vector y = rng.point_in(region);
    for (const DyadicCube& q : p.cubes)
      if (q.contains_point(y)) {
        ++covered;
        break;
      }
  }
  const double expected = 1.0 - p.leftover_measure / region.volume();
  CHECK(std::fabs(static_cast<double>(covered) / n - expected) <= 0.005);
}
