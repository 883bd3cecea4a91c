#include <doctest.h>

#include <cmath>

#include "czo/errors.hpp"
#include "czo/metric.hpp"
#include "czo/random.hpp"
#include "czo/registry.hpp"
#include "oracles.hpp"

using namespace czo;

namespace {

Vector v(double a) { return Vector{a}; }

}  // namespace

TEST_CASE("rho examples") {
  const auto diag = make_diagonal_curve();
  const auto diamond = make_diamond_curve();
  const auto two = make_two_lines_curve();
  CHECK(rho(*diag, v(1), v(0)).value == doctest::Approx(oracle::kSqrt2 / 2).epsilon(1e-12));
  CHECK(rho(*diag, v(2.5), v(2.5)).value == 0.0);

  const MetricValue d = rho(*diamond, v(0), v(0));
  CHECK(d.value == doctest::Approx(1.0 / oracle::kSqrt2).epsilon(1e-9));
  CHECK(d.branch == 0);

  CHECK(rho_branch(*two, 1, v(1), v(0)).value == doctest::Approx(1.0 / oracle::kSqrt2).epsilon(1e-12));
  const MetricValue t = rho(*two, v(1), v(0));
  CHECK(t.value == doctest::Approx(1.0 / oracle::kSqrt2).epsilon(1e-12));
  CHECK(t.branch == 0);
  CHECK(rho(*two, v(3), v(-3)).branch == 1);
}

TEST_CASE("rho matches closed forms") {
  const auto two = make_two_lines_curve();
  const auto diamond = make_diamond_curve();
  Rng rng(17);
  for (int k = 0; k < 300; ++k) {
    const double x = rng.uniform(-4.0, 4.0), y = rng.uniform(-4.0, 4.0);
    const double a = oracle::rho_two_lines(x, y);
    CHECK(std::fabs(rho(*two, v(x), v(y)).value - a) <= 1e-9 * std::max(a, 1.0));
    const double b = oracle::rho_diamond(x, y);
    CHECK(std::fabs(rho(*diamond, v(x), v(y)).value - b) <= 1e-6 * std::max(b, 1e-3));
  }
}

TEST_CASE("rho~ and rho~* examples") {
  const auto diag = make_diagonal_curve();
  const auto diamond = make_diamond_curve();
  const auto two = make_two_lines_curve();
  CHECK(rho_tilde(*diag, v(1), v(0)).value == doctest::Approx(1.0));
  CHECK(rho_tilde(*diamond, v(3), v(0)).value == doctest::Approx(0.0));
  CHECK(rho_tilde(*two, v(1), v(0)).value == doctest::Approx(1.0));
  CHECK(rho_tilde_star(*diag, v(1), v(0)).value == doctest::Approx(1.0));
  CHECK(rho_tilde_star(*two, v(1), v(0)).value == doctest::Approx(1.0));
  CHECK(rho_tilde_star(*diamond, v(0), v(2)).value == doctest::Approx(1.0));

  Rng rng(19);
  for (int k = 0; k < 500; ++k) {
    const double x = rng.uniform(-8.0, 8.0), y = rng.uniform(-8.0, 8.0);
    CHECK(rho_tilde(*two, v(x), v(y)).value == doctest::Approx(oracle::rho_tilde_two_lines(x, y)));
  }
}

TEST_CASE("metric equivalence") {
  const auto diag = make_diagonal_curve();
  const EquivalenceReport r = check_equivalence(*diag, 1000, 7);
  CHECK(r.passed);
  CHECK(r.max_tilde_ratio == doctest::Approx(oracle::kSqrt2).epsilon(1e-6));
  CHECK(r.max_tilde_ratio <= r.bound);
  CHECK(r.min_tilde_ratio >= 1.0);
  CHECK(r.pair_count == 1000);

  const auto diamond = make_diamond_curve();
  const EquivalenceReport d = check_equivalence(*diamond, 2000, 7, Box::symmetric(1, 4.0));
  CHECK(d.passed);
  CHECK(d.branch_max_tilde_ratio.size() == 5);
  CHECK(d.max_star_ratio <= d.bound);
}

TEST_CASE("rho_at_least agrees with rho") {
  const auto diamond = make_diamond_curve();
  const auto two = make_two_lines_curve();
  Rng rng(23);
  for (int k = 0; k < 2000; ++k) {
    const Vector x{rng.uniform(-3.0, 3.0)}, y{rng.uniform(-3.0, 3.0)};
    const double t = rng.uniform(0.0, 2.0);
    CHECK(rho_at_least(*diamond, x, y, t) == (rho(*diamond, x, y).value >= t));
    CHECK(rho_at_least(*two, x, y, t) == (rho(*two, x, y).value >= t));
  }
}

TEST_CASE("enlarged cube of the diagonal") {
  const auto diag = make_diagonal_curve();
  const Cube q{Vector{0.0}, 1.0};
  const EnlargedCube e = enlarged_cube(*diag, q, 10.0);
  Rng rng(29);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-30.0, 30.0);
    if (std::fabs(x + 10.0) < 1e-6 || std::fabs(x - 11.0) < 1e-6) continue;
    CHECK(e.contains(v(x)) == (x >= -10.0 && x <= 11.0));
  }
  const QThetaReport r = check_qtheta(*diag, q, 10.0, 200, 7, 200000);
  CHECK(r.passed);
  CHECK(r.measured == doctest::Approx(21.0).epsilon(0.02));
}

TEST_CASE("enlarged cube of the two lines") {
  const auto two = make_two_lines_curve();
  const Cube q{Vector{2.0}, 1.0};
  const EnlargedCube e = enlarged_cube(*two, q, 8.0);
  REQUIRE(e.pieces().size() == 2);
  Rng rng(31);
  for (int k = 0; k < 1000; ++k) {
    const double x = rng.uniform(-20.0, 20.0);
    if (std::fabs(std::fabs(x) - 11.0) < 1e-6 || std::fabs(std::fabs(x) - 6.0) < 1e-6) continue;
    CHECK(e.piece_contains(0, v(x)) == (x >= -6.0 && x <= 11.0));
    CHECK(e.piece_contains(1, v(x)) == (x >= -11.0 && x <= 6.0));
  }
  const QThetaReport r = check_qtheta(*two, q, 8.0, 1000, 7, 200000);
  CHECK(r.passed);
  CHECK(r.min_separation_ratio >= 1.0 - 1e-5);
}

TEST_CASE("enlarged cube far from the range is empty") {
  const auto diamond = make_diamond_curve();
  const EnlargedCube e = enlarged_cube(*diamond, Cube{Vector{5.0}, 1.0}, 8.0);
  for (const EnlargedPiece& p : e.pieces()) CHECK(p.empty);
  CHECK(e.measure_upper_bound() == 0.0);
  CHECK_FALSE(e.contains(v(5.5)));
  CHECK_FALSE(e.covering_box().has_value());
}

TEST_CASE("theta bounds") {
  const auto two = make_two_lines_curve();
  CHECK_THROWS_AS(enlarged_cube(*two, Cube{Vector{0.0}, 1.0}, 1.0), InvalidInput);
  CHECK_THROWS_AS(check_qtheta(*two, Cube{Vector{2.0}, 1.0}, 1.5, 10, 7, 1000), InvalidInput);
  CHECK(qtheta_min_theta(*two) == doctest::Approx(7.0));
  CHECK(qtheta_covering_constant(*two, 8.0) == doctest::Approx(2.0 * 2.0 * (1.0 + 6.0 / 8.0)));
}
