#pragma once

#include <cstdint>

#include "mlbpgd/linops.hpp"

namespace mlbpgd {

// One Poisson draw with the given mean, fully determined by (seed, index).
// Each index gets its own splitmix64 stream, so entries of a vector can be
// sampled in any order (or in parallel) with identical results.
std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index);

struct DegradedData {
    GridVector b;
    int floored = 0;  // zero outcomes replaced by the positivity floor
};

// b_i = Poisson(lambda * (A x)_i) / lambda. lambda = infinity returns the
// exact forward data. Zero outcomes are lifted to 1e-8 * mean(b) so the
// Kullback-Leibler objectives stay finite.
DegradedData poisson_degrade(const GridVector& clean, const LinearOperatorHandle& a,
                             double lambda, std::uint64_t seed);

} // namespace mlbpgd
