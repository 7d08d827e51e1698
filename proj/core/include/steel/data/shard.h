#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace steel::data {

// Shard file layout, all integers little-endian:
//   offset  0  char[4]  magic "SLPK"
//   offset  4  u32      format version (1)
//   offset  8  u32      dtype code (1 = u32 token ids)
//   offset 12  u32      block_size (tokens per block)
//   offset 16  u64      block_count
//   offset 24  u32      pad flag (1 when the last block ends in padding)
//   offset 28  u32[block_size * block_count] token ids
inline constexpr char kShardMagic[4] = {'S', 'L', 'P', 'K'};
inline constexpr std::uint32_t kShardVersion = 1;
inline constexpr std::uint32_t kDtypeU32 = 1;
inline constexpr std::size_t kShardHeaderBytes = 28;

struct ShardHeader {
  std::uint32_t version = kShardVersion;
  std::uint32_t dtype = kDtypeU32;
  std::uint32_t block_size = 0;
  std::uint64_t block_count = 0;
  bool padded = false;
};

struct PackOptions {
  std::uint32_t block_size = 2049;  // max_seq_len + 1
  /// Appended after every sequence; nullopt disables separators.
  std::optional<std::uint32_t> separator_id = 1;
  std::uint32_t pad_id = 0;
  std::uint64_t blocks_per_shard = 1024;
  std::string file_prefix = "shard";
};

/// Concatenates sequences (each followed by the separator, if any) and cuts
/// the stream into block_size blocks; the tail block is padded. Writes
/// `<prefix>_00000.bin`, ... into out_dir and returns their paths. Empty
/// input writes nothing. Ids outside [0, 2^32) raise DataError.
std::vector<std::filesystem::path> PackTokens(
    const std::vector<std::vector<std::int64_t>>& sequences, const PackOptions& options,
    const std::filesystem::path& out_dir);

/// Streaming form of PackTokens for large inputs.
class ShardWriter {
 public:
  ShardWriter(PackOptions options, std::filesystem::path out_dir);
  void AddSequence(std::span<const std::int64_t> tokens);
  /// Flushes the padded tail and returns every shard written.
  std::vector<std::filesystem::path> Finish();

 private:
  void FlushShard(bool final);

  PackOptions options_;
  std::filesystem::path out_dir_;
  std::vector<std::uint32_t> pending_;
  std::vector<std::filesystem::path> written_;
  std::uint64_t sequences_ = 0;
  bool finished_ = false;
};

/// Read-only view of a shard loaded into memory.
class Shard {
 public:
  static Shard Load(const std::filesystem::path& path);
  /// Decodes an in-memory image; errors carry the failing byte offset.
  static Shard Parse(std::span<const std::uint8_t> bytes, std::string path_for_errors);

  const ShardHeader& header() const { return header_; }
  std::uint64_t block_count() const { return header_.block_count; }
  std::uint32_t block_size() const { return header_.block_size; }
  std::span<const std::uint32_t> block(std::uint64_t index) const;
  std::span<const std::uint32_t> tokens() const { return tokens_; }

 private:
  ShardHeader header_;
  std::vector<std::uint32_t> tokens_;
};

void WriteShard(const std::filesystem::path& path, const ShardHeader& header,
                std::span<const std::uint32_t> tokens);

}  // namespace steel::data
