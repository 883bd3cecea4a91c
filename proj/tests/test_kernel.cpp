#include <doctest.h>

#include <cmath>

#include "czo/errors.hpp"
#include "czo/kernel.hpp"
#include "czo/random.hpp"
#include "czo/registry.hpp"
#include "oracles.hpp"

using namespace czo;

TEST_CASE("kernel values") {
  const KernelSpec two = make_two_line_hilbert_kernel();
  const KernelSpec hilbert = make_hilbert_kernel();
  CHECK(kernel_eval(two, Vector{2.0}, Vector{1.0}) == doctest::Approx(4.0 / 3.0));
  CHECK(kernel_eval(hilbert, Vector{2.0}, Vector{1.0}) == 1.0);
  CHECK_THROWS_AS(kernel_eval(two, Vector{1.0}, Vector{1.0}), SingularityError);
  CHECK_THROWS_AS(kernel_eval(two, Vector{1.0}, Vector{-1.0}), SingularityError);
  CHECK_THROWS_AS(kernel_eval(hilbert, Vector{0.5}, Vector{0.5}), SingularityError);
}

TEST_CASE("two-line kernel is even in y") {
  const KernelSpec two = make_two_line_hilbert_kernel();
  Rng rng(13);
  for (int k = 0; k < 10000; ++k) {
    const Vector x{rng.uniform(-8.0, 8.0)}, y{rng.uniform(-8.0, 8.0)};
    CHECK(kernel_eval(two, x, y) == kernel_eval(two, x, -y));
  }
}

TEST_CASE("size audits") {
  const SizeAudit zero = audit_size(make_zero_kernel(make_two_lines_curve()), 1000, 7);
  CHECK(zero.empirical == 0.0);
  CHECK(zero.passed);

  const SizeAudit h = audit_size(make_hilbert_kernel(), 2000, 7);
  CHECK(h.passed);
  CHECK(h.empirical == doctest::Approx(oracle::kHilbertSize).epsilon(1e-4));

  const SizeAudit t = audit_size(make_two_line_hilbert_kernel(), 2000, 7);
  CHECK(t.passed);
  CHECK(t.empirical <= oracle::kTwoLineHilbertSize * (1.0 + 1e-6));
  CHECK(t.empirical >= 0.99 * oracle::kTwoLineHilbertSize);

  const SizeAudit d = audit_size(make_diamond_model_kernel(), 2000, 7, Box::symmetric(1, 4.0));
  CHECK(d.passed);
}

TEST_CASE("regularity audits") {
  const RegularityAudit zero = audit_regularity(make_zero_kernel(make_diagonal_curve()), 1000, 7);
  CHECK(zero.a_x == 0.0);
  CHECK(zero.a_y == 0.0);

  const RegularityAudit a = audit_regularity(make_hilbert_kernel(), 3000, 7);
  const RegularityAudit b = audit_regularity(make_hilbert_kernel(), 6000, 8);
  CHECK(a.passed);
  CHECK(b.passed);
  CHECK(b.a_y == doctest::Approx(a.a_y).epsilon(0.05));
  CHECK(b.a_x == doctest::Approx(a.a_x).epsilon(0.05));

  const RegularityAudit t = audit_regularity(make_two_line_hilbert_kernel(), 3000, 7);
  CHECK(t.passed);
  CHECK(std::isfinite(t.a_y));
  CHECK(std::isfinite(t.a_x));

  const RegularityAudit d = audit_regularity(make_diamond_model_kernel(), 100, 7);
  CHECK_FALSE(d.audited);
}

TEST_CASE("hoermander integral of the hilbert kernel") {
  const KernelSpec k = make_hilbert_kernel();
  const HormanderResult h = hormander_constant(k, {{Vector{0.0}, Vector{1.0}}}, Box::symmetric(1, 64.0), 1 << 16);
  CHECK(h.value == doctest::Approx(oracle::hilbert_hormander(64.0)).epsilon(2e-3));
  CHECK(h.tail_bound >= 0.0);
  CHECK(h.value + h.tail_bound >= oracle::hilbert_hormander(INFINITY) * (1.0 - 2e-3));

  const HormanderResult adj =
      hormander_constant(k, {{Vector{0.0}, Vector{1.0}}}, Box::symmetric(1, 64.0), 1 << 16, true);
  CHECK(adj.adjoint);
  CHECK(adj.value == doctest::Approx(h.value).epsilon(1e-9));

  const HormanderResult zero = hormander_constant(make_zero_kernel(make_diagonal_curve()),
                                                  {{Vector{0.0}, Vector{1.0}}}, Box::symmetric(1, 64.0), 1024);
  CHECK(zero.value == 0.0);

  CHECK_THROWS_AS(hormander_constant(k, {{Vector{1.0}, Vector{1.0}}}, Box::symmetric(1, 8.0), 64), InvalidInput);
}

TEST_CASE("hoermander integral is stable under grid refinement") {
  const KernelSpec k = make_two_line_hilbert_kernel();
  Rng rng(47);
  std::vector<std::pair<Vector, Vector>> pairs;
  for (int i = 0; i < 8; ++i) {
    const double y = rng.uniform(-4.0, 4.0);
    const double z = rng.uniform(-4.0, 4.0);
    if (y != z) pairs.emplace_back(Vector{y}, Vector{z});
  }
  const Box box = Box::symmetric(1, 16.0);
  const HormanderResult coarse = hormander_constant(k, pairs, box, 1 << 12);
  const HormanderResult fine = hormander_constant(k, pairs, box, 1 << 13);
  REQUIRE(coarse.per_pair.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i)
    CHECK(fine.per_pair[i] == doctest::Approx(coarse.per_pair[i]).epsilon(0.03));
}
