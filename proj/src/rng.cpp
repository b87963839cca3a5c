#include "dwc/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace dwc::rng {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0x2545f4914f6cdd1dULL));
}

std::uint64_t below(std::mt19937_64& eng, std::uint64_t n) {
  if (n <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = eng();
  } while (v >= limit);
  return v % n;
}

double normal_from_key(std::uint64_t key) {
  const std::uint64_t k1 = splitmix64(key);
  const std::uint64_t k2 = splitmix64(k1);
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - to_unit(k1);
  const double u2 = to_unit(k2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace dwc::rng
