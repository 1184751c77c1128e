#pragma once

#include <cstdint>

namespace bsde::rng {

// Counter-based substreams: every variate is a pure function of
// (seed, path, step, lane), so simulations are bitwise reproducible for any
// traversal order or degree of parallelism. The hash chains the splitmix64
// finalizer over the four words.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t lane);

// Uniform draw in the open interval (0, 1).
double uniform01(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t lane);

// Standard normal draw via the inverse CDF (no rejection, one counter per draw).
double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step, std::uint64_t lane);

// Inverse standard normal CDF, p in (0, 1). Rational approximation polished
// with one Halley step on erfc; absolute error near machine precision.
double inverse_normal_cdf(double p);

}  // namespace bsde::rng
