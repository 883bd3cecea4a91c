#include "czo/random.hpp"

namespace czo {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : engine_(splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL))) {}

Vector Rng::point_in(const Box& box) {
  Vector p(box.dim());
  for (std::size_t k = 0; k < box.dim(); ++k) p[k] = uniform(box.lo[k], box.hi[k]);
  return p;
}

}  // namespace czo
