#include "steel/curation/simhash.h"

#include <algorithm>
#include <bit>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

#include "steel/curation/unicode.h"
#include "steel/numerics/errors.h"
#include "steel/numerics/rng.h"

namespace steel::curation {

void SimhashOptions::Validate() const {
  if (window_size == 0) throw ConfigError("simhash window_size must be >= 1");
  if (num_blocks < 2 || num_blocks > 64) throw ConfigError("simhash num_blocks must be in [2, 64]");
  if (num_blocks < hamming_distance + 2) {
    throw ConfigError("simhash num_blocks must be at least hamming_distance + 2");
  }
}

std::uint64_t ShingleHash(std::string_view shingle) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : shingle) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return CounterRng::Mix(h);
}

std::uint64_t SimhashFingerprint(std::string_view text, std::size_t window_size, bool lowercase) {
  std::u32string s = DecodeUtf8(text);
  if (lowercase) {
    for (char32_t& c : s) c = ToLower(c);
  }
  const auto tokens = SplitWhitespace(s);
  const std::size_t window = std::max<std::size_t>(window_size, 1);
  std::vector<std::uint64_t> hashes;
  const auto join = [&](std::size_t begin, std::size_t end) {
    std::u32string shingle;
    for (std::size_t k = begin; k < end; ++k) {
      if (k > begin) shingle.push_back(U' ');
      shingle += tokens[k];
    }
    return EncodeUtf8(shingle);
  };
  if (tokens.size() < window) {
    hashes.push_back(ShingleHash(join(0, tokens.size())));
  } else {
    for (std::size_t i = 0; i + window <= tokens.size(); ++i) hashes.push_back(ShingleHash(join(i, i + window)));
  }
  std::int64_t votes[64] = {};
  for (std::uint64_t h : hashes) {
    for (int bit = 0; bit < 64; ++bit) votes[bit] += ((h >> bit) & 1) ? 1 : -1;
  }
  std::uint64_t fp = 0;
  for (int bit = 0; bit < 64; ++bit) {
    if (votes[bit] > 0) fp |= std::uint64_t{1} << bit;
  }
  return fp;
}

int HammingDistance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

std::vector<std::pair<int, int>> BlockBounds(std::size_t num_blocks) {
  std::vector<std::pair<int, int>> bounds;
  const int base = 64 / static_cast<int>(num_blocks);
  const int extra = 64 % static_cast<int>(num_blocks);
  int begin = 0;
  for (int b = 0; b < static_cast<int>(num_blocks); ++b) {
    const int width = base + (b < extra ? 1 : 0);
    bounds.emplace_back(begin, begin + width);
    begin += width;
  }
  return bounds;
}

std::vector<std::pair<std::size_t, std::size_t>> FindNearDuplicatePairs(
    std::span<const std::uint64_t> fingerprints, std::size_t max_distance, std::size_t num_blocks) {
  SimhashOptions{1, num_blocks, max_distance, true}.Validate();
  const auto bounds = BlockBounds(num_blocks);
  const auto block = [&](std::uint64_t fp, std::size_t b) {
    const int width = bounds[b].second - bounds[b].first;
    return (fp >> bounds[b].first) & ((std::uint64_t{1} << width) - 1);
  };
  std::set<std::pair<std::size_t, std::size_t>> found;
  // Any two fingerprints within max_distance agree on at least two whole
  // blocks, so they share a bucket under at least one block pair.
  for (std::size_t a = 0; a < num_blocks; ++a) {
    for (std::size_t b = a + 1; b < num_blocks; ++b) {
      std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
      for (std::size_t i = 0; i < fingerprints.size(); ++i) {
        buckets[(block(fingerprints[i], a) << 32) | block(fingerprints[i], b)].push_back(i);
      }
      for (const auto& [key, members] : buckets) {
        for (std::size_t x = 0; x < members.size(); ++x) {
          for (std::size_t y = x + 1; y < members.size(); ++y) {
            const auto i = members[x];
            const auto j = members[y];
            if (HammingDistance(fingerprints[i], fingerprints[j]) <= static_cast<int>(max_distance)) {
              found.emplace(i, j);
            }
          }
        }
      }
    }
  }
  return {found.begin(), found.end()};
}

DedupResult SimhashDedup(std::span<const std::uint64_t> fingerprints, const SimhashOptions& opts) {
  opts.Validate();
  const std::size_t n = fingerprints.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [i, j] : FindNearDuplicatePairs(fingerprints, opts.hamming_distance, opts.num_blocks)) {
    const auto a = find(i);
    const auto b = find(j);
    // The smaller index (first seen) stays the root.
    if (a < b) {
      parent[b] = a;
    } else if (b < a) {
      parent[a] = b;
    }
  }
  DedupResult result;
  result.representative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto root = find(i);
    result.representative[i] = root;
    if (root == i) result.kept.push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups(n);
  for (std::size_t i = 0; i < n; ++i) groups[result.representative[i]].push_back(i);
  for (auto& g : groups) {
    if (g.size() >= 2) result.clusters.push_back(std::move(g));
  }
  return result;
}

}  // namespace steel::curation
