#include "steel/data/iterator.h"

#include <algorithm>

#include "steel/data/binary_io.h"
#include "steel/numerics/errors.h"

namespace steel::data {

void FileRegistry::Register(const RegisteredShard& shard) {
  if (auto existing = Find(shard.digest)) {
    throw DuplicateDataError("duplicate content: " + shard.path + " has the same MD5 (" +
                                 ToHex(shard.digest) + ") as registered file " + *existing,
                             *existing);
  }
  by_digest_.emplace(shard.digest, shard.path);
}

std::optional<std::string> FileRegistry::Find(const Md5Digest& digest) const {
  auto it = by_digest_.find(digest);
  if (it == by_digest_.end()) return std::nullopt;
  return it->second;
}

RegisteredShard DescribeShard(const std::filesystem::path& path) {
  const auto bytes = ReadFileBytes(path);
  const Shard shard = Shard::Parse(bytes, path.string());
  RegisteredShard out;
  out.path = path.string();
  out.digest = Md5(bytes);
  out.block_count = shard.block_count();
  out.block_size = shard.block_size();
  return out;
}

namespace {

FileRegistry BuildRegistry(const std::vector<RegisteredShard>& shards) {
  FileRegistry registry;
  for (const auto& s : shards) registry.Register(s);
  return registry;
}

void CheckBlockSize(const std::vector<RegisteredShard>& shards) {
  for (const auto& s : shards) {
    if (s.block_size != shards.front().block_size) {
      throw ConfigError("shard " + s.path + " has block_size " + std::to_string(s.block_size) +
                        ", expected " + std::to_string(shards.front().block_size));
    }
  }
}

// The exact bytes covered by the checksum field.
constexpr std::size_t kFieldCount = 7;

}  // namespace

void ValidateState(const IteratorState& state) {
  BuildRegistry(state.shards);
  std::vector<std::vector<bool>> seen(state.shards.size());
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < state.shards.size(); ++i) {
    seen[i].assign(state.shards[i].block_count, false);
    total += state.shards[i].block_count;
  }
  if (state.order.size() != total) {
    throw DataError("iterator state: order has " + std::to_string(state.order.size()) +
                    " entries for " + std::to_string(total) + " registered blocks");
  }
  for (const BlockRef& ref : state.order) {
    if (ref.shard >= state.shards.size() || ref.block >= state.shards[ref.shard].block_count) {
      throw DataError("iterator state: order references a block that is not registered");
    }
    if (seen[ref.shard][ref.block]) throw DataError("iterator state: order repeats a block");
    seen[ref.shard][ref.block] = true;
  }
  if (state.cursor > state.order.size()) throw DataError("iterator state: cursor past the end");
}

std::vector<std::uint8_t> SerializeState(const IteratorState& state) {
  ByteWriter out;
  out.Raw(std::span(reinterpret_cast<const std::uint8_t*>(kSnapshotMagic), 4));
  out.U32(state.version);

  auto field = [&out](ByteWriter body) {
    out.U64(body.size());
    out.Raw(body.bytes());
  };

  ByteWriter shards;
  shards.U32(static_cast<std::uint32_t>(state.shards.size()));
  for (const auto& s : state.shards) {
    shards.Str(s.path);
    shards.Raw(s.digest);
    shards.U64(s.block_count);
    shards.U32(s.block_size);
  }
  field(std::move(shards));

  ByteWriter order;
  order.U64(state.order.size());
  for (const auto& ref : state.order) {
    order.U32(ref.shard);
    order.U64(ref.block);
  }
  field(std::move(order));

  ByteWriter cursor;
  cursor.U64(state.cursor);
  field(std::move(cursor));

  ByteWriter epoch;
  epoch.U64(state.epoch);
  field(std::move(epoch));

  ByteWriter rng;
  rng.U64(state.rng_seed);
  rng.U64(state.rng_counter);
  field(std::move(rng));

  ByteWriter flags;
  flags.U8(state.wrap ? 1 : 0);
  field(std::move(flags));

  ByteWriter check;
  check.Raw(Md5(out.bytes()));
  field(std::move(check));
  return out.Take();
}

IteratorState DeserializeState(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.Raw(4);
  if (!std::equal(magic.begin(), magic.end(), kSnapshotMagic)) {
    r.FailAt("snapshot: bad magic", 0);
  }
  IteratorState state;
  state.version = r.U32();
  if (state.version != kSnapshotVersion) {
    r.FailAt("snapshot: unknown version " + std::to_string(state.version), 4);
  }

  std::vector<std::span<const std::uint8_t>> bodies;
  std::vector<std::uint64_t> body_offsets;
  std::uint64_t checked_prefix = 0;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    if (i + 1 == kFieldCount) checked_prefix = r.offset();
    const std::uint64_t len = r.U64();
    if (len > r.remaining()) r.Fail("snapshot: field " + std::to_string(i + 1) + " truncated");
    body_offsets.push_back(r.offset());
    bodies.push_back(r.Raw(static_cast<std::size_t>(len)));
  }
  if (!r.done()) r.Fail("snapshot: trailing bytes");

  {
    ByteReader check(bodies[6], body_offsets[6]);
    auto stored = check.Raw(16);
    if (!check.done()) check.Fail("snapshot: checksum field has wrong length");
    const Md5Digest actual = Md5(bytes.first(static_cast<std::size_t>(checked_prefix)));
    if (!std::equal(stored.begin(), stored.end(), actual.begin())) {
      check.FailAt("snapshot: checksum mismatch", body_offsets[6]);
    }
  }

  {
    ByteReader f(bodies[0], body_offsets[0]);
    const std::uint32_t count = f.U32();
    for (std::uint32_t i = 0; i < count; ++i) {
      RegisteredShard s;
      s.path = f.Str();
      auto digest = f.Raw(16);
      std::copy(digest.begin(), digest.end(), s.digest.begin());
      s.block_count = f.U64();
      s.block_size = f.U32();
      state.shards.push_back(std::move(s));
    }
    if (!f.done()) f.Fail("snapshot: shard field has trailing bytes");
  }
  {
    ByteReader f(bodies[1], body_offsets[1]);
    const std::uint64_t count = f.U64();
    if (count > f.remaining() / 12) f.Fail("snapshot: order count exceeds field size");
    state.order.resize(count);
    for (auto& ref : state.order) {
      ref.shard = f.U32();
      ref.block = f.U64();
    }
    if (!f.done()) f.Fail("snapshot: order field has trailing bytes");
  }
  auto single_u64 = [&](std::size_t i, const char* name) {
    ByteReader f(bodies[i], body_offsets[i]);
    const std::uint64_t v = f.U64();
    if (!f.done()) f.Fail(std::string("snapshot: ") + name + " field has trailing bytes");
    return v;
  };
  state.cursor = single_u64(2, "cursor");
  state.epoch = single_u64(3, "epoch");
  {
    ByteReader f(bodies[4], body_offsets[4]);
    state.rng_seed = f.U64();
    state.rng_counter = f.U64();
    if (!f.done()) f.Fail("snapshot: rng field has trailing bytes");
  }
  {
    ByteReader f(bodies[5], body_offsets[5]);
    const std::uint8_t flags = f.U8();
    if (flags > 1 || !f.done()) f.FailAt("snapshot: bad flags", body_offsets[5]);
    state.wrap = flags == 1;
  }

  try {
    ValidateState(state);
  } catch (const Error& e) {
    throw RestoreError(std::string("snapshot: ") + e.what(), body_offsets[0]);
  }
  return state;
}

PackedDatasetIterator::PackedDatasetIterator(IteratorState state) : state_(std::move(state)) {}

PackedDatasetIterator PackedDatasetIterator::Open(const std::vector<std::filesystem::path>& shards,
                                                  std::uint64_t seed, bool wrap) {
  IteratorState state;
  FileRegistry registry;
  for (const auto& path : shards) {
    RegisteredShard s = DescribeShard(path);
    registry.Register(s);
    state.shards.push_back(std::move(s));
  }
  CheckBlockSize(state.shards);
  for (std::uint32_t i = 0; i < state.shards.size(); ++i)
    for (std::uint64_t b = 0; b < state.shards[i].block_count; ++b) state.order.push_back({i, b});
  state.rng_seed = seed;
  state.wrap = wrap;
  PackedDatasetIterator it(std::move(state));
  it.Reshuffle(0);
  return it;
}

PackedDatasetIterator PackedDatasetIterator::FromState(IteratorState state) {
  ValidateState(state);
  return PackedDatasetIterator(std::move(state));
}

PackedDatasetIterator PackedDatasetIterator::Restore(std::span<const std::uint8_t> snapshot) {
  return PackedDatasetIterator(DeserializeState(snapshot));
}

std::uint32_t PackedDatasetIterator::block_size() const {
  return state_.shards.empty() ? 0 : state_.shards.front().block_size;
}

void PackedDatasetIterator::Reshuffle(std::size_t from) {
  CounterRng rng(state_.rng_seed, state_.rng_counter);
  ShuffleInPlace(std::span(state_.order).subspan(from), rng);
  state_.rng_counter = rng.counter();
}

const Shard& PackedDatasetIterator::LoadShard(std::uint32_t index) {
  auto it = cache_.find(index);
  if (it != cache_.end()) return it->second;
  const RegisteredShard& reg = state_.shards.at(index);
  const auto bytes = ReadFileBytes(reg.path);
  if (Md5(bytes) != reg.digest) {
    throw DataError("shard " + reg.path + " changed on disk since it was registered");
  }
  return cache_.emplace(index, Shard::Parse(bytes, reg.path)).first->second;
}

std::optional<Block> PackedDatasetIterator::Next() {
  if (state_.order.empty()) return std::nullopt;
  if (state_.cursor == state_.order.size()) {
    if (!state_.wrap) return std::nullopt;
    ++state_.epoch;
    state_.cursor = 0;
    Reshuffle(0);
  }
  const BlockRef ref = state_.order[state_.cursor];
  const auto tokens = LoadShard(ref.shard).block(ref.block);
  ++state_.cursor;
  return Block{ref, std::vector<std::uint32_t>(tokens.begin(), tokens.end())};
}

void PackedDatasetIterator::Append(const std::vector<std::filesystem::path>& shards) {
  FileRegistry registry = BuildRegistry(state_.shards);
  std::vector<RegisteredShard> added;
  for (const auto& path : shards) {
    RegisteredShard s = DescribeShard(path);
    registry.Register(s);
    added.push_back(std::move(s));
  }
  std::vector<RegisteredShard> all = state_.shards;
  all.insert(all.end(), added.begin(), added.end());
  CheckBlockSize(all);

  // All checks passed; mutate.
  const auto first_new = static_cast<std::uint32_t>(state_.shards.size());
  state_.shards = std::move(all);
  for (std::uint32_t i = 0; i < added.size(); ++i)
    for (std::uint64_t b = 0; b < added[i].block_count; ++b)
      state_.order.push_back({first_new + i, b});
  Reshuffle(state_.cursor);
}

}  // namespace steel::data
