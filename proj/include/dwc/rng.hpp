#pragma once

#include <cstdint>
#include <random>

namespace dwc::rng {

// Portable helpers on top of std::mt19937_64 (whose output sequence is fixed by
// the standard). The std distributions are implementation-defined, so they are
// avoided wherever bit-exact reproducibility matters.

std::uint64_t splitmix64(std::uint64_t x);

/// Combines a seed with stream identifiers into a well-mixed 64-bit key.
std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit word.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform01(std::mt19937_64& eng) { return to_unit(eng()); }

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(eng);
}

/// Unbiased integer in [0, n) by rejection.
std::uint64_t below(std::mt19937_64& eng, std::uint64_t n);

/// Standard normal variate from a stateless key (Box-Muller on two derived uniforms).
double normal_from_key(std::uint64_t key);

}  // namespace dwc::rng
