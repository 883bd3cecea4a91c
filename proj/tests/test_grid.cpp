#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "czo/errors.hpp"
#include "czo/grid.hpp"
#include "czo/random.hpp"

using namespace czo;

TEST_CASE("grid geometry") {
  const GridGeometry g(Box::symmetric(1, 8.0), 16);
  CHECK(g.size() == 16);
  CHECK(g.h(0) == 1.0);
  CHECK(g.cell_volume() == 1.0);
  CHECK(g.coordinate(0, 0) == -7.5);
  CHECK(g.coordinate(0, 15) == 7.5);
  for (std::size_t i = 0; i < 16; ++i) CHECK(g.coordinate(0, i) == -g.coordinate(0, 15 - i));

  const GridGeometry odd(Box::symmetric(1, 1.1), 77);
  for (std::size_t i = 0; i < 77; ++i) CHECK(odd.coordinate(0, i) == -odd.coordinate(0, 76 - i));
  CHECK(odd.coordinate(0, 38) == 0.0);

  const GridGeometry g2(Box{Vector{0.0, 0.0}, Vector{4.0, 2.0}}, 4);
  CHECK(g2.size() == 16);
  CHECK(g2.max_h() == 1.0);
  const std::size_t multi[2] = {2, 1};
  const std::size_t flat = g2.flat_index(multi);
  CHECK(flat == 9);
  CHECK(g2.midpoint(flat)[0] == 2.5);
  CHECK(g2.midpoint(flat)[1] == 0.75);
}

TEST_CASE("integral and norms") {
  const GridGeometry g(Box::interval(0.0, 2.0), 8);
  const GridFunction f = GridFunction::sample(g, [](const Vector& x) { return x[0]; });
  CHECK(f.integral() == doctest::Approx(2.0));
  CHECK(f.sup_norm() == 1.875);
  const GridFunction z(g);
  CHECK(z.integral() == 0.0);
  const GridFunction c = GridFunction::combine(2.0, f, -1.0, f);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(c[i] == f[i]);
  const GridFunction other(GridGeometry(Box::interval(0.0, 2.0), 4));
  CHECK_FALSE(f.compatible(other));
  CHECK_THROWS(GridFunction::combine(1.0, f, 1.0, other));
}

TEST_CASE("interpolation") {
  const GridGeometry g(Box::interval(0.0, 4.0), 4);
  const GridFunction f = GridFunction::sample(g, [](const Vector& x) { return 3.0 * x[0] - 1.0; });
  CHECK(f.interpolate(Vector{1.5}) == doctest::Approx(3.5));
  CHECK(f.interpolate(Vector{2.0}) == doctest::Approx(5.0));
  CHECK(f.interpolate(Vector{2.9}) == doctest::Approx(7.7));
  CHECK(f.interpolate(Vector{0.1}) == doctest::Approx(0.5));
  bool outside = false;
  CHECK(f.interpolate(Vector{4.5}, &outside) == 0.0);
  CHECK(outside);
  outside = false;
  f.interpolate(Vector{3.9}, &outside);
  CHECK_FALSE(outside);

  const GridGeometry g2(Box{Vector{0.0, 0.0}, Vector{1.0, 1.0}}, 8);
  const GridFunction p = GridFunction::sample(g2, [](const Vector& x) { return x[0] + 2.0 * x[1]; });
  Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const Vector q{rng.uniform(0.0625, 0.9375), rng.uniform(0.0625, 0.9375)};
    CHECK(p.interpolate(q) == doctest::Approx(q[0] + 2.0 * q[1]).epsilon(1e-12));
  }
}

TEST_CASE("csv round trip is exact") {
  const GridGeometry g(Box::interval(-3.0, 5.0), 33);
  Rng rng(9);
  const GridFunction f = GridFunction::sample(g, [&](const Vector&) { return rng.uniform(-1.0, 1.0) / 3.0; });
  const GridFunction back = GridFunction::parse_csv(f.to_csv());
  CHECK(back.geometry() == g);
  CHECK(back.values() == f.values());

  const auto path = std::filesystem::temp_directory_path() / "czo_grid_roundtrip.csv";
  const GridGeometry g2(Box{Vector{0.0, -1.0}, Vector{2.0, 1.0}}, 5);
  const GridFunction f2 = GridFunction::sample(g2, [](const Vector& x) { return std::sin(x[0]) * x[1]; });
  f2.save_csv(path.string());
  const GridFunction back2 = GridFunction::load_csv(path.string());
  CHECK(back2.geometry() == g2);
  CHECK(back2.values() == f2.values());
  std::filesystem::remove(path);

  CHECK_THROWS(GridFunction::parse_csv("not a grid\n1\n"));
  CHECK_THROWS(GridFunction::parse_csv("# box=0..1 n=3\n1\n2\n"));
}
