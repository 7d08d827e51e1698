#include "steel/data/shard.h"

#include <cstdio>
#include <limits>

#include "steel/data/binary_io.h"
#include "steel/numerics/errors.h"

namespace steel::data {

void WriteShard(const std::filesystem::path& path, const ShardHeader& header,
                std::span<const std::uint32_t> tokens) {
  if (tokens.size() != static_cast<std::size_t>(header.block_size) * header.block_count) {
    throw DataError("shard payload does not match block_size x block_count");
  }
  ByteWriter w;
  w.Raw(std::span(reinterpret_cast<const std::uint8_t*>(kShardMagic), 4));
  w.U32(header.version);
  w.U32(header.dtype);
  w.U32(header.block_size);
  w.U64(header.block_count);
  w.U32(header.padded ? 1 : 0);
  for (std::uint32_t t : tokens) w.U32(t);
  WriteFileAtomic(path, w.bytes());
}

Shard Shard::Parse(std::span<const std::uint8_t> bytes, std::string path_for_errors) {
  ByteReader r(bytes);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), kShardMagic)) {
    r.FailAt(path_for_errors + ": bad shard magic", 0);
  }
  Shard s;
  s.header_.version = r.U32();
  if (s.header_.version != kShardVersion) {
    r.FailAt(path_for_errors + ": unknown shard version " + std::to_string(s.header_.version), 4);
  }
  s.header_.dtype = r.U32();
  if (s.header_.dtype != kDtypeU32) {
    r.FailAt(path_for_errors + ": unsupported dtype code " + std::to_string(s.header_.dtype), 8);
  }
  s.header_.block_size = r.U32();
  if (s.header_.block_size == 0) r.FailAt(path_for_errors + ": block_size is zero", 12);
  s.header_.block_count = r.U64();
  const std::uint32_t pad_flag = r.U32();
  if (pad_flag > 1) r.FailAt(path_for_errors + ": pad flag must be 0 or 1", 24);
  s.header_.padded = pad_flag == 1;
  const std::uint64_t expected =
      static_cast<std::uint64_t>(s.header_.block_size) * s.header_.block_count * 4;
  if (r.remaining() != expected) {
    r.Fail(path_for_errors + ": payload has " + std::to_string(r.remaining()) +
           " bytes, header promises " + std::to_string(expected));
  }
  s.tokens_.resize(expected / 4);
  for (auto& t : s.tokens_) t = r.U32();
  return s;
}

Shard Shard::Load(const std::filesystem::path& path) {
  return Parse(ReadFileBytes(path), path.string());
}

std::span<const std::uint32_t> Shard::block(std::uint64_t index) const {
  if (index >= header_.block_count) {
    throw DataError("block " + std::to_string(index) + " out of range (" +
                    std::to_string(header_.block_count) + " blocks)");
  }
  return std::span(tokens_).subspan(index * header_.block_size, header_.block_size);
}

ShardWriter::ShardWriter(PackOptions options, std::filesystem::path out_dir)
    : options_(std::move(options)), out_dir_(std::move(out_dir)) {
  if (options_.block_size == 0) throw ConfigError("pack: block_size must be positive");
  if (options_.blocks_per_shard == 0) throw ConfigError("pack: blocks_per_shard must be positive");
}

void ShardWriter::AddSequence(std::span<const std::int64_t> tokens) {
  if (finished_) throw ContractError("ShardWriter::AddSequence after Finish");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::int64_t t = tokens[i];
    if (t < 0 || t > std::numeric_limits<std::uint32_t>::max()) {
      throw DataError("pack: token id " + std::to_string(t) + " at position " + std::to_string(i) +
                      " of sequence " + std::to_string(sequences_) +
                      " does not fit the u32 shard dtype");
    }
    pending_.push_back(static_cast<std::uint32_t>(t));
  }
  if (options_.separator_id) pending_.push_back(*options_.separator_id);
  ++sequences_;
  const std::size_t shard_tokens = options_.block_size * options_.blocks_per_shard;
  while (pending_.size() >= shard_tokens) FlushShard(false);
}

void ShardWriter::FlushShard(bool final) {
  const std::size_t bs = options_.block_size;
  const std::size_t shard_tokens = bs * options_.blocks_per_shard;
  std::size_t take = std::min(pending_.size(), shard_tokens);
  bool padded = false;
  if (!final) {
    take = shard_tokens;
  } else if (take % bs != 0) {
    const std::size_t pad = bs - take % bs;
    pending_.insert(pending_.begin() + static_cast<std::ptrdiff_t>(take), pad, options_.pad_id);
    take += pad;
    padded = true;
  }
  if (take == 0) return;
  ShardHeader header;
  header.block_size = options_.block_size;
  header.block_count = take / bs;
  header.padded = padded;
  char name[64];
  std::snprintf(name, sizeof name, "_%05zu.bin", written_.size());
  const auto path = out_dir_ / (options_.file_prefix + name);
  WriteShard(path, header, std::span(pending_).first(take));
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(take));
  written_.push_back(path);
}

std::vector<std::filesystem::path> ShardWriter::Finish() {
  if (!finished_) {
    while (!pending_.empty()) FlushShard(true);
    finished_ = true;
  }
  return written_;
}

std::vector<std::filesystem::path> PackTokens(
    const std::vector<std::vector<std::int64_t>>& sequences, const PackOptions& options,
    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ShardWriter writer(options, out_dir);
  for (const auto& seq : sequences) writer.AddSequence(seq);
  return writer.Finish();
}

}  // namespace steel::data
