#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace steel::curation {

struct SimhashOptions {
  std::size_t window_size = 6;
  std::size_t num_blocks = 6;
  std::size_t hamming_distance = 4;
  bool lowercase = true;

  /// Throws ConfigError unless 1 <= window_size, num_blocks <= 64 and
  /// num_blocks >= hamming_distance + 2 (the banded index is exact then).
  void Validate() const;
};

/// 64-bit FNV-1a followed by the SplitMix64 finalizer.
std::uint64_t ShingleHash(std::string_view shingle);

/// Space-tokenized shingles of `window_size` tokens, hashed and combined by
/// per-bit majority vote. Fewer tokens than the window yields a single
/// shingle of the whole (joined) text.
std::uint64_t SimhashFingerprint(std::string_view text, std::size_t window_size = 6,
                                 bool lowercase = true);

int HammingDistance(std::uint64_t a, std::uint64_t b);

/// Bit range [begin, end) of each of the `num_blocks` contiguous blocks.
std::vector<std::pair<int, int>> BlockBounds(std::size_t num_blocks);

/// All index pairs (i < j) within `max_distance`, found through the
/// block-pair index. Sorted.
std::vector<std::pair<std::size_t, std::size_t>> FindNearDuplicatePairs(
    std::span<const std::uint64_t> fingerprints, std::size_t max_distance, std::size_t num_blocks);

struct DedupResult {
  std::vector<std::size_t> kept;                   // input order
  std::vector<std::vector<std::size_t>> clusters;  // size >= 2, first element kept
  /// For each input index, the kept representative (itself when kept).
  std::vector<std::size_t> representative;
};

DedupResult SimhashDedup(std::span<const std::uint64_t> fingerprints, const SimhashOptions& opts);

}  // namespace steel::curation
