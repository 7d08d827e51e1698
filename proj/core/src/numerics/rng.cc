#include "steel/numerics/rng.h"

#include <cmath>
#include <numbers>

namespace steel {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}  // namespace

std::uint64_t CounterRng::Mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::NextU64() {
  ++counter_;
  return Mix(seed_ + counter_ * kGolden);
}

double CounterRng::NextUniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::NextBounded(std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Values below `threshold` would bias the modulo; 2^64 mod bound of them.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = NextU64();
    if (r >= threshold) return r % bound;
  }
}

double CounterRng::NextNormal() {
  const double u1 = 1.0 - NextUniform();  // (0, 1]
  const double u2 = NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  return CounterRng::Mix(base ^ CounterRng::Mix(stream + kGolden));
}

}  // namespace steel
