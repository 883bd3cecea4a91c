#pragma once

#include <span>

namespace czo {

/// Pairwise (tree) summation with a fixed shape for a given length, so the
/// rounding of a sum depends only on its inputs. Entries 2k and 2k+1 are
/// always added to each other first, so a sequence of exactly cancelling
/// adjacent pairs sums to exactly zero.
double pairwise_sum(std::span<const double> values);

}  // namespace czo
