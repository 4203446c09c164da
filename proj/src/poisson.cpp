#include "mlbpgd/poisson.hpp"

#include <cmath>
#include <limits>

#include "mlbpgd/errors.hpp"

namespace mlbpgd {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based stream: the state is a hash of (seed, index), successive
// outputs advance it by the splitmix64 increment.
struct SplitMix {
    std::uint64_t state;

    SplitMix(std::uint64_t seed, std::uint64_t index)
        : state(mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                mix64(index * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL)) {}

    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        return mix64(state);
    }

    // Strictly inside (0,1); 53-bit resolution.
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
};

// CDF inversion; safe while exp(-mean) stays normal, i.e. small means.
std::uint64_t poisson_inversion(double mean, SplitMix& rng) {
    double u = rng.uniform();
    double p = std::exp(-mean);
    double cum = p;
    std::uint64_t k = 0;
    while (u > cum) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
        if (p == 0.0) break;  // u in the far tail beyond double resolution
    }
    return k;
}

// Hoermann's PTRS transformed rejection, valid for mean >= 10; we switch at
// 30 where inversion starts needing hundreds of CDF terms.
std::uint64_t poisson_ptrs(double mean, SplitMix& rng) {
    const double slam = std::sqrt(mean);
    const double llam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        double u = rng.uniform() - 0.5;
        double v = rng.uniform();
        double us = 0.5 - std::fabs(u);
        double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r)
            return static_cast<std::uint64_t>(kf);
        if (kf < 0.0 || (us < 0.013 && v > us))
            continue;
        double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        double rhs = kf * llam - mean - std::lgamma(kf + 1.0);
        if (lhs <= rhs)
            return static_cast<std::uint64_t>(kf);
    }
}

} // namespace

std::uint64_t poisson_sample(double mean, std::uint64_t seed, std::uint64_t index) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw ArgError("poisson_sample: mean must be finite and nonnegative");
    if (mean == 0.0) return 0;
    SplitMix rng(seed, index);
    return mean < 30.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

DegradedData poisson_degrade(const GridVector& clean, const LinearOperatorHandle& a,
                             double lambda, std::uint64_t seed) {
    if (!(lambda > 0.0))
        throw ArgError("poisson_degrade: lambda must be positive");

    GridVector t = a.apply(clean);
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] < 0.0)
            throw ArgError("poisson_degrade: forward data must be nonnegative");

    DegradedData out;
    if (std::isinf(lambda)) {
        out.b = std::move(t);
    } else {
        out.b = GridVector(t.size());
        out.b.side = t.side;
        for (std::size_t i = 0; i < t.size(); ++i)
            out.b[i] = static_cast<double>(poisson_sample(lambda * t[i], seed, i)) / lambda;
    }

    double mean_b = sum(out.b) / static_cast<double>(out.b.size());
    if (mean_b == 0.0)
        throw ArgError("poisson_degrade: sampled data has no mass");
    double floor = 1e-8 * mean_b;
    for (std::size_t i = 0; i < out.b.size(); ++i) {
        if (out.b[i] <= 0.0) {
            out.b[i] = floor;
            ++out.floored;
        }
    }
    return out;
}

} // namespace mlbpgd
