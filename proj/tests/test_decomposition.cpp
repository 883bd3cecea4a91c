#include <doctest.h>

#include <cmath>

#include "czo/decomposition.hpp"
#include "czo/errors.hpp"
#include "czo/random.hpp"
#include "czo/registry.hpp"
#include "oracles.hpp"

using namespace czo;

namespace {

GridFunction indicator(const GridGeometry& g, double a, double b) {
  return GridFunction::sample(g, [=](const Vector& x) { return x[0] >= a && x[0] < b ? 1.0 : 0.0; });
}

}  // namespace

TEST_CASE("worked example") {
  const GridGeometry g(Box::interval(-2.0, 2.0), 64);
  const GridFunction f = indicator(g, 0.0, 1.0);
  const DecompositionResult d = cz_decompose(f, 0.3, Cube{Vector{-2.0}, 4.0});
  REQUIRE(d.cubes.size() == 1);
  CHECK(d.cubes[0].lower[0] == 0.0);
  CHECK(d.cubes[0].side == 2.0);
  CHECK(d.abs_sums[0] / 32.0 == 0.5);
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(d.good[c] == (g.midpoint(c)[0] > 0.0 ? 0.5 : 0.0));
  REQUIRE(d.bad.size() == 1);
  const GridFunction b = d.bad_function(0);
  CHECK(b.integral() == 0.0);
  for (std::size_t c = 0; c < g.size(); ++c) CHECK(d.good[c] + b[c] == f[c]);
  CHECK(check_decomposition(f, d).passed());
}

TEST_CASE("nothing to select") {
  const GridGeometry g(Box::symmetric(1, 4.0), 64);
  const Cube root = grid_root(g);
  const DecompositionResult zero = cz_decompose(GridFunction(g), 0.5, root);
  CHECK(zero.cubes.empty());

  const GridFunction f = GridFunction::sample(g, [](const Vector& x) { return 0.25 * std::cos(x[0]); });
  const DecompositionResult d = cz_decompose(f, 0.25, root);
  CHECK(d.cubes.empty());
  CHECK(d.good.values() == f.values());
  CHECK(check_decomposition(f, d).passed());
}

TEST_CASE("preconditions") {
  const GridGeometry g(Box::symmetric(1, 4.0), 64);
  const GridFunction f = GridFunction::sample(g, [](const Vector&) { return 1.0; });
  CHECK_THROWS_AS(cz_decompose(f, 0.5, grid_root(g)), InvalidInput);
  CHECK_THROWS_AS(cz_decompose(f, 2.0, Cube{Vector{-4.0 + 1.0 / 16.0}, 2.0}), InvalidInput);
  CHECK_THROWS_AS(cz_decompose(f, 2.0, Cube{Vector{-4.0}, 3.0}), InvalidInput);
  CHECK_THROWS_AS(cz_decompose(f, 2.0, Cube{Vector{0.0}, 8.0}), InvalidInput);
}

TEST_CASE("random dyadic step functions") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const GridGeometry g(Box::interval(0.0, 8.0), 128);
    GridFunction f(g);
    for (std::size_t c = 0; c < g.size(); ++c)
      if (rng.uniform() < 0.3) f[c] = std::ldexp(static_cast<double>(rng.index(64)) - 32.0, -3);
    const double avg = lp_norm(f, 1.0) / 8.0;
    if (avg == 0.0) continue;
    const double lambda = std::ldexp(std::ceil(std::ldexp(avg, 4)), -4) * (1 + rng.index(4));
    const DecompositionResult d = cz_decompose(f, lambda, grid_root(g));
    const DecompositionCheck check = check_decomposition(f, d);
    CHECK_MESSAGE(check.passed(), check.failure);
    double measure = 0.0;
    for (const Cube& q : d.cubes) measure += q.measure();
    CHECK(measure <= lp_norm(f, 1.0) / lambda);
  }
}

TEST_CASE("two-dimensional decomposition") {
  const GridGeometry g(Box{Vector{0.0, 0.0}, Vector{4.0, 4.0}}, 16);
  const GridFunction f =
      GridFunction::sample(g, [](const Vector& x) { return x[0] < 1.0 && x[1] < 0.5 ? 4.0 : 0.0; });
  const DecompositionResult d = cz_decompose(f, 1.0, grid_root(g));
  CHECK_FALSE(d.cubes.empty());
  CHECK(check_decomposition(f, d).passed());
}

TEST_CASE("weak L1") {
  const GridGeometry g(Box::interval(0.0, 4.0), 16);
  CHECK(weak_l1_quasinorm(GridFunction(g)) == 0.0);
  CHECK(weak_l1_quasinorm(indicator(g, 0.0, 1.0)) == 1.0);

  GridFunction two(g);
  two[0] = 2.0;
  for (std::size_t c = 1; c < 4; ++c) two[c] = 1.0;
  for (std::size_t c = 4; c < 16; ++c) two[c] = 0.0;
  CHECK(weak_l1_quasinorm(two) == 1.0);

  GridFunction step(g);
  step[0] = 2.0;
  for (std::size_t c = 1; c < 5; ++c) step[c] = -1.0;
  CHECK(weak_l1_quasinorm(step) == doctest::Approx(oracle::weak_l1({{2.0, 0.25}, {-1.0, 1.0}})));
  CHECK(weak_l1_quasinorm(step) == 1.25);

  Rng rng(67);
  for (int k = 0; k < 50; ++k) {
    const GridFunction r = GridFunction::sample(g, [&](const Vector&) { return rng.uniform(-3.0, 3.0); });
    CHECK(weak_l1_quasinorm(r) <= lp_norm(r, 1.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("Lp norms") {
  const GridGeometry unit(Box::interval(0.0, 1.0), 1 << 12);
  const GridFunction x = GridFunction::sample(unit, [](const Vector& p) { return p[0]; });
  CHECK(lp_norm(x, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-4));
  CHECK(lp_norm(indicator(GridGeometry(Box::interval(0.0, 4.0), 16), 0.0, 1.0), 2.0) == doctest::Approx(1.0));
  const GridFunction c = GridFunction::sample(GridGeometry(Box::interval(0.0, 4.0), 16), [](const Vector&) { return 3.0; });
  CHECK(lp_norm(c, 3.0) == doctest::Approx(3.0 * std::cbrt(4.0)));
  CHECK_THROWS_AS(lp_norm(x, 0.5), InvalidInput);
  CHECK_THROWS_AS(lp_norm(x, INFINITY), InvalidInput);

  Rng rng(71);
  const GridFunction r = GridFunction::sample(unit, [&](const Vector&) { return rng.uniform(-2.0, 2.0); });
  CHECK(lp_norm(r, 1.0) <= lp_norm(r, 2.0));
  CHECK(lp_norm(r, 2.0) <= lp_norm(r, 4.0));
}

TEST_CASE("lambda ladder") {
  const GridGeometry g(Box::symmetric(1, 8.0), 256);
  const GridFunction f = indicator(g, 0.0, 2.0);
  const auto ladder = lambda_ladder(f, grid_root(g), 5);
  REQUIRE(ladder.size() == 5);
  CHECK(ladder[0] == doctest::Approx(2.0 / 16.0));
  for (std::size_t j = 1; j < ladder.size(); ++j) CHECK(ladder[j] == 2.0 * ladder[j - 1]);
  for (double lambda : ladder) CHECK_NOTHROW(cz_decompose(f, lambda, grid_root(g)));
}

TEST_CASE("selected cubes keep their separation") {
  const auto two = make_two_lines_curve();
  const GridGeometry g(Box::symmetric(1, 8.0), 256);
  const GridFunction f = indicator(g, 1.0, 1.5);
  const DecompositionResult d = cz_decompose(f, 0.5, grid_root(g));
  REQUIRE_FALSE(d.cubes.empty());
  const SeparationCheck s = check_separation(*two, d, qtheta_min_theta(*two) + 1.0, 50, 7);
  CHECK(s.passed);
  CHECK(s.pairs > 0);
  CHECK(s.min_ratio >= 1.0 - 1e-5);
}

TEST_CASE("weak-type experiment") {
  const GridGeometry g(Box::symmetric(1, 8.0), 128);
  const KernelSpec k = make_hilbert_kernel();
  const WeakTypeReport r =
      weak_type_experiment(k, {indicator(g, -1.0, 1.0)}, 0.25, qtheta_min_theta(k.singular_curve()) + 1.0, 3);
  CHECK(r.rows.size() == 3);
  CHECK(r.function_max_ratio.size() == 1);
  for (const WeakTypeRow& row : r.rows) {
    CHECK(std::isfinite(row.ratio));
    CHECK(row.ratio >= 0.0);
    CHECK(row.b_star_measure >= 0.0);
  }
  CHECK(r.max_ratio == r.function_max_ratio[0]);
}
