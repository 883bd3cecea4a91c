#pragma once

#include <cstdint>
#include <random>

#include "czo/vector.hpp"

namespace czo {

/// Seeded generator with platform-independent uniform draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t index(std::size_t count) { return static_cast<std::size_t>(uniform() * count); }
  Vector point_in(const Box& box);

 private:
  std::mt19937_64 engine_;
};

}  // namespace czo
