#include "czo/numeric.hpp"

namespace czo {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  // Even split points keep adjacent (2k, 2k+1) entries in one leaf.
  const std::size_t half = (values.size() / 2) & ~std::size_t{1};
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace czo
