#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace steel {

/// Counter-based generator: the i-th output is the SplitMix64 finalizer
/// applied to `seed + i * 0x9E3779B97F4A7C15`, i = 1, 2, ... The whole state
/// is the pair (seed, counter), which makes snapshots trivial and lets any
/// other implementation reproduce the stream bit for bit.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t counter = 0)
      : seed_(seed), counter_(counter) {}

  std::uint64_t NextU64();

  /// Uniform in [0, 1) with 53 random bits.
  double NextUniform();

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t NextBounded(std::uint64_t bound);

  /// Standard normal via Box-Muller (one output per two uniforms; the second
  /// variate is discarded so the stream position stays easy to reason about).
  double NextNormal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  static std::uint64_t Mix(std::uint64_t x);

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Fisher-Yates from the back: for i = n-1 .. 1 swap(i, NextBounded(i+1)).
template <typename T>
void ShuffleInPlace(std::span<T> items, CounterRng& rng) {
  if (items.size() < 2) return;
  for (std::size_t i = items.size() - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.NextBounded(i + 1));
    std::swap(items[i], items[j]);
  }
}

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream);

}  // namespace steel
