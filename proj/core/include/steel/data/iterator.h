#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steel/data/md5.h"
#include "steel/data/shard.h"
#include "steel/numerics/rng.h"

namespace steel::data {

struct RegisteredShard {
  std::string path;
  Md5Digest digest{};
  std::uint64_t block_count = 0;
  std::uint32_t block_size = 0;

  bool operator==(const RegisteredShard&) const = default;
};

/// Content-addressed set of shard files. One path per MD5 digest.
class FileRegistry {
 public:
  /// Throws DuplicateDataError naming the already-registered path.
  void Register(const RegisteredShard& shard);
  /// Path already registered under `digest`, if any.
  std::optional<std::string> Find(const Md5Digest& digest) const;
  std::size_t size() const { return by_digest_.size(); }

 private:
  std::map<Md5Digest, std::string> by_digest_;
};

struct BlockRef {
  std::uint32_t shard = 0;
  std::uint64_t block = 0;

  bool operator==(const BlockRef&) const = default;
  auto operator<=>(const BlockRef&) const = default;
};

/// The complete serializable traversal state.
struct IteratorState {
  std::uint32_t version = 1;
  std::vector<RegisteredShard> shards;
  std::vector<BlockRef> order;
  std::uint64_t cursor = 0;
  std::uint64_t epoch = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_counter = 0;
  bool wrap = true;

  bool operator==(const IteratorState&) const = default;
};

// Snapshot layout, little-endian:
//   char[4] "SLIT", u32 version (1), then seven fields, each written as a
//   u64 byte length followed by the field body:
//     1 shards:  u32 count, per shard {u32 path_len, path bytes, u8[16] md5,
//                u64 block_count, u32 block_size}
//     2 order:   u64 count, per entry {u32 shard, u64 block}
//     3 cursor:  u64
//     4 epoch:   u64
//     5 rng:     u64 seed, u64 counter
//     6 flags:   u8 wrap
//     7 check:   u8[16] md5 of every byte before this field's length prefix
inline constexpr char kSnapshotMagic[4] = {'S', 'L', 'I', 'T'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

std::vector<std::uint8_t> SerializeState(const IteratorState& state);
/// Throws RestoreError (with byte offset) on bad magic, unknown version,
/// truncation, checksum mismatch or an order that is not a permutation.
IteratorState DeserializeState(std::span<const std::uint8_t> bytes);

/// Checks the structural invariants; throws DataError.
void ValidateState(const IteratorState& state);

/// One block handed out by the iterator.
struct Block {
  BlockRef ref;
  std::vector<std::uint32_t> tokens;
};

/// Shuffled, resumable iterator over packed shards. Every epoch visits each
/// registered block exactly once in a seeded order; Snapshot()/Restore()
/// capture and reproduce the traversal exactly.
class PackedDatasetIterator {
 public:
  /// Reads and fingerprints the shards, draws the first permutation.
  /// Throws DuplicateDataError when two shards share content.
  static PackedDatasetIterator Open(const std::vector<std::filesystem::path>& shards,
                                    std::uint64_t seed, bool wrap = true);
  static PackedDatasetIterator FromState(IteratorState state);
  static PackedDatasetIterator Restore(std::span<const std::uint8_t> snapshot);

  /// Next block in order. At the end of an epoch either reshuffles (wrap) or
  /// returns nullopt.
  std::optional<Block> Next();

  /// Appends new shards: already-consumed positions keep their blocks, the
  /// unconsumed remainder plus all new blocks are reshuffled. On a duplicate
  /// digest nothing changes and DuplicateDataError is thrown.
  void Append(const std::vector<std::filesystem::path>& shards);

  std::vector<std::uint8_t> Snapshot() const { return SerializeState(state_); }
  const IteratorState& state() const { return state_; }
  std::uint64_t total_blocks() const { return state_.order.size(); }
  std::uint32_t block_size() const;

 private:
  explicit PackedDatasetIterator(IteratorState state);
  const Shard& LoadShard(std::uint32_t index);
  void Reshuffle(std::size_t from);

  IteratorState state_;
  std::map<std::uint32_t, Shard> cache_;
};

/// Builds the registry entry for a shard file (reads header and MD5).
RegisteredShard DescribeShard(const std::filesystem::path& path);

}  // namespace steel::data
