#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <vector>

#include "steel/data/binary_io.h"
#include "steel/data/iterator.h"
#include "steel/data/md5.h"
#include "steel/data/shard.h"
#include "steel/data/tokenizer.h"
#include "steel/numerics/errors.h"
#include "temp_dir.h"

namespace steel::data {
namespace {

using testing_support::TempDir;
namespace fs = std::filesystem;

PackOptions Raw(std::uint32_t block_size, std::uint64_t blocks_per_shard = 1024) {
  PackOptions o;
  o.block_size = block_size;
  o.separator_id = std::nullopt;
  o.blocks_per_shard = blocks_per_shard;
  return o;
}

// Shards whose blocks hold distinct tokens, so content identifies a block.
std::vector<fs::path> DistinctShards(const fs::path& dir, std::int64_t first_token, std::size_t blocks,
                                     std::uint32_t block_size, std::uint64_t per_shard,
                                     const std::string& prefix) {
  std::vector<std::int64_t> seq;
  for (std::size_t i = 0; i < blocks * block_size; ++i) seq.push_back(first_token + static_cast<std::int64_t>(i));
  PackOptions o = Raw(block_size, per_shard);
  o.file_prefix = prefix;
  return PackTokens({seq}, o, dir);
}

std::vector<std::uint32_t> Concat(const std::vector<fs::path>& shards) {
  std::vector<std::uint32_t> out;
  for (const auto& p : shards) {
    const Shard s = Shard::Load(p);
    out.insert(out.end(), s.tokens().begin(), s.tokens().end());
  }
  return out;
}

TEST(Pack, ExactBlocksRoundTrip) {
  TempDir dir;
  std::vector<std::int64_t> seq;
  for (int i = 0; i < 10; ++i) seq.push_back(100 + i);
  const auto shards = PackTokens({seq}, Raw(5), dir.path());
  ASSERT_EQ(shards.size(), 1u);
  const Shard s = Shard::Load(shards[0]);
  EXPECT_EQ(s.block_count(), 2u);
  EXPECT_FALSE(s.header().padded);
  EXPECT_EQ(Concat(shards), std::vector<std::uint32_t>(seq.begin(), seq.end()));
}

TEST(Pack, TailIsPadded) {
  TempDir dir;
  PackOptions o = Raw(5);
  o.pad_id = 0;
  const auto shards = PackTokens({{7, 7, 7, 7, 7, 7, 7}}, o, dir.path());
  const Shard s = Shard::Load(shards[0]);
  EXPECT_EQ(s.block_count(), 2u);
  EXPECT_TRUE(s.header().padded);
  const auto tail = s.block(1);
  EXPECT_EQ(std::vector<std::uint32_t>(tail.begin(), tail.end()), (std::vector<std::uint32_t>{7, 7, 0, 0, 0}));
}

TEST(Pack, SeparatorsBetweenSequences) {
  TempDir dir;
  PackOptions o = Raw(4);
  o.separator_id = 1;
  const auto shards = PackTokens({{5, 6}, {7}, {8, 9, 10}}, o, dir.path());
  EXPECT_EQ(Concat(shards), (std::vector<std::uint32_t>{5, 6, 1, 7, 1, 8, 9, 10, 1, 0, 0, 0}));
}

TEST(Pack, EmptyInputWritesNothing) {
  TempDir dir;
  EXPECT_TRUE(PackTokens({}, Raw(5), dir.path()).empty());
  EXPECT_TRUE(fs::is_empty(dir.path()));
}

TEST(Pack, SplitsAcrossShards) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 7, 3, 3, "s");
  ASSERT_EQ(shards.size(), 3u);
  EXPECT_EQ(Shard::Load(shards[2]).block_count(), 1u);
  const auto all = Concat(shards);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

TEST(Pack, OutOfRangeIdRejected) {
  TempDir dir;
  EXPECT_THROW(PackTokens({{1, -1}}, Raw(4), dir.path()), DataError);
  EXPECT_THROW(PackTokens({{std::int64_t{1} << 32}}, Raw(4), dir.path()), DataError);
}

TEST(Pack, HeaderLayout) {
  TempDir dir;
  const auto shards = PackTokens({{3, 4, 5}}, Raw(2), dir.path());
  const auto bytes = ReadFileBytes(shards[0]);
  ASSERT_EQ(bytes.size(), kShardHeaderBytes + 4 * 4);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SLPK");
  EXPECT_EQ(bytes[4], 1);   // version
  EXPECT_EQ(bytes[8], 1);   // dtype u32
  EXPECT_EQ(bytes[12], 2);  // block_size
  EXPECT_EQ(bytes[16], 2);  // block_count
  EXPECT_EQ(bytes[24], 1);  // padded
  EXPECT_EQ(bytes[28], 3);
}

TEST(Shard, CorruptHeaderIsError) {
  TempDir dir;
  const auto shards = PackTokens({{3, 4, 5, 6}}, Raw(2), dir.path());
  auto bytes = ReadFileBytes(shards[0]);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(Shard::Parse(bad_magic, "x"), Error);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(Shard::Parse(truncated, "x"), Error);
}

TEST(Md5, KnownDigest) {
  const std::string abc = "abc";
  EXPECT_EQ(ToHex(Md5({reinterpret_cast<const std::uint8_t*>(abc.data()), abc.size()})),
            "900150983cd24fb0d6963f7d28e17f72");
  EXPECT_EQ(ToHex(Md5({})), "d41d8cd98f00b204e9800998ecf8427e");
}

TEST(Registry, RejectsDuplicateDigest) {
  FileRegistry r;
  RegisteredShard a{"a.bin", Md5({}), 1, 2};
  r.Register(a);
  RegisteredShard b = a;
  b.path = "b.bin";
  try {
    r.Register(b);
    FAIL();
  } catch (const DuplicateDataError& e) {
    EXPECT_EQ(e.registered_path(), "a.bin");
  }
  EXPECT_EQ(r.size(), 1u);
  EXPECT_EQ(*r.Find(a.digest), "a.bin");
}

TEST(Iterator, SingleBlock) {
  TempDir dir;
  const auto shards = PackTokens({{1, 2, 3}}, Raw(3), dir.path());
  auto it = PackedDatasetIterator::Open(shards, 5);
  EXPECT_EQ(it.state().order, (std::vector<BlockRef>{{0, 0}}));
}

TEST(Iterator, SeedDeterminesOrder) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 100, 2, 30, "s");
  const auto a = PackedDatasetIterator::Open(shards, 1).state().order;
  const auto b = PackedDatasetIterator::Open(shards, 1).state().order;
  const auto c = PackedDatasetIterator::Open(shards, 2).state().order;
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Iterator, EpochCoverageAndReshuffle) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 50, 2, 20, "s");
  auto it = PackedDatasetIterator::Open(shards, 9);
  std::vector<BlockRef> first, second;
  std::multiset<std::uint32_t> heads;
  for (int i = 0; i < 50; ++i) {
    const auto b = it.Next();
    first.push_back(b->ref);
    heads.insert(b->tokens[0]);
  }
  std::multiset<std::uint32_t> expect;
  for (std::uint32_t i = 0; i < 50; ++i) expect.insert(2 * i);
  EXPECT_EQ(heads, expect);
  EXPECT_EQ(std::set<BlockRef>(first.begin(), first.end()).size(), 50u);
  for (int i = 0; i < 50; ++i) second.push_back(it.Next()->ref);
  EXPECT_EQ(it.state().epoch, 1u);
  EXPECT_NE(first, second);
  EXPECT_EQ(std::set<BlockRef>(second.begin(), second.end()), std::set<BlockRef>(first.begin(), first.end()));
}

TEST(Iterator, NoWrapSignalsEnd) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 3, 2, 10, "s");
  auto it = PackedDatasetIterator::Open(shards, 0, false);
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(it.Next().has_value());
  EXPECT_FALSE(it.Next().has_value());
}

TEST(Iterator, DuplicateContentOnOpen) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 3, 2, 10, "s");
  fs::copy_file(shards[0], dir / "copy.bin");
  try {
    PackedDatasetIterator::Open({shards[0], dir / "copy.bin"}, 0);
    FAIL();
  } catch (const DuplicateDataError& e) {
    EXPECT_NE(std::string(e.what()).find("copy.bin"), std::string::npos);
    EXPECT_EQ(e.registered_path(), shards[0].string());
  }
}

TEST(Snapshot, ResumeEquivalenceForEveryPrefix) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 12, 2, 5, "s");
  auto reference = PackedDatasetIterator::Open(shards, 4);
  std::vector<BlockRef> full;
  for (int i = 0; i < 30; ++i) full.push_back(reference.Next()->ref);
  for (int k = 0; k <= 30; ++k) {
    auto it = PackedDatasetIterator::Open(shards, 4);
    std::vector<BlockRef> got;
    for (int i = 0; i < k; ++i) got.push_back(it.Next()->ref);
    auto restored = PackedDatasetIterator::Restore(it.Snapshot());
    EXPECT_EQ(restored.state(), it.state());
    for (int i = k; i < 30; ++i) got.push_back(restored.Next()->ref);
    ASSERT_EQ(got, full) << "prefix " << k;
  }
}

TEST(Snapshot, TakeThreeAfterRestore) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 10, 2, 10, "s");
  auto it = PackedDatasetIterator::Open(shards, 4);
  for (int i = 0; i < 4; ++i) it.Next();
  auto restored = PackedDatasetIterator::Restore(it.Snapshot());
  for (int i = 0; i < 3; ++i) EXPECT_EQ(restored.Next()->ref, it.state().order[4 + i]);
}

TEST(Snapshot, EveryByteFlipIsDetected) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 6, 2, 3, "s");
  auto it = PackedDatasetIterator::Open(shards, 4);
  it.Next();
  const auto bytes = it.Snapshot();
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SLIT");
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x01;
    EXPECT_THROW(PackedDatasetIterator::Restore(bad), RestoreError) << "byte " << i;
  }
}

TEST(Snapshot, TruncationAndVersion) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 6, 2, 3, "s");
  const auto bytes = PackedDatasetIterator::Open(shards, 4).Snapshot();
  for (std::size_t len : {std::size_t{0}, std::size_t{3}, std::size_t{8}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(PackedDatasetIterator::Restore(std::span(bytes).first(len)), RestoreError);
  }
  auto future = bytes;
  future[4] = 9;
  try {
    PackedDatasetIterator::Restore(future);
    FAIL();
  } catch (const RestoreError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
  }
}

TEST(Append, DrainedIteratorGetsOnlyNewBlocks) {
  TempDir dir;
  const auto old_shards = DistinctShards(dir.path(), 0, 4, 2, 10, "old");
  const auto new_shards = DistinctShards(dir.path(), 1000, 3, 2, 10, "new");
  auto it = PackedDatasetIterator::Open(old_shards, 8, false);
  while (it.Next()) {
  }
  it.Append(new_shards);
  std::set<std::uint32_t> heads;
  while (auto b = it.Next()) heads.insert(b->tokens[0]);
  EXPECT_EQ(heads, (std::set<std::uint32_t>{1000, 1002, 1004}));
}

TEST(Append, DuplicateRejectedStateUnchanged) {
  TempDir dir;
  const auto shards = DistinctShards(dir.path(), 0, 4, 2, 10, "old");
  fs::copy_file(shards[0], dir / "renamed.bin");
  auto it = PackedDatasetIterator::Open(shards, 8);
  it.Next();
  const IteratorState before = it.state();
  EXPECT_THROW(it.Append({dir / "renamed.bin"}), DuplicateDataError);
  EXPECT_EQ(it.state(), before);
}

// 20 old blocks, every cursor position, 5 new blocks, several seeds.
TEST(Append, ExhaustiveSmallInstance) {
  TempDir dir;
  const auto old_shards = DistinctShards(dir.path(), 0, 20, 2, 6, "old");
  const auto new_shards = DistinctShards(dir.path(), 5000, 5, 2, 3, "new");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    for (std::size_t cursor = 0; cursor <= 20; ++cursor) {
      auto it = PackedDatasetIterator::Open(old_shards, seed);
      const std::vector<BlockRef> before = it.state().order;
      std::vector<std::uint32_t> trained;
      for (std::size_t i = 0; i < cursor; ++i) trained.push_back(it.Next()->tokens[0]);
      it.Append(new_shards);
      const auto& order = it.state().order;
      ASSERT_EQ(order.size(), 25u);
      for (std::size_t i = 0; i < cursor; ++i) ASSERT_EQ(order[i], before[i]);
      std::multiset<BlockRef> suffix(order.begin() + cursor, order.end());
      std::multiset<BlockRef> expect(before.begin() + cursor, before.end());
      for (std::uint32_t s = 0; s < new_shards.size(); ++s) {
        for (std::uint64_t b = 0; b < Shard::Load(new_shards[s]).block_count(); ++b) {
          expect.insert({static_cast<std::uint32_t>(old_shards.size() + s), b});
        }
      }
      ASSERT_EQ(suffix, expect);
      for (std::size_t i = cursor; i < 25; ++i) trained.push_back(it.Next()->tokens[0]);
      std::set<std::uint32_t> unique(trained.begin(), trained.end());
      ASSERT_EQ(unique.size(), 25u) << "seed " << seed << " cursor " << cursor;
      EXPECT_EQ(it.state().epoch, 0u);
    }
  }
}

TEST(Append, SnapshotAfterAppendResumes) {
  TempDir dir;
  const auto old_shards = DistinctShards(dir.path(), 0, 6, 2, 3, "old");
  const auto new_shards = DistinctShards(dir.path(), 900, 2, 2, 3, "new");
  auto it = PackedDatasetIterator::Open(old_shards, 3);
  it.Next();
  it.Append(new_shards);
  auto restored = PackedDatasetIterator::Restore(it.Snapshot());
  for (int i = 0; i < 12; ++i) EXPECT_EQ(restored.Next()->ref, it.Next()->ref);
}

TEST(Tokenizer, ByteRoundTrip) {
  const ByteTokenizer tok;
  const std::string text = "héllo\n世界";
  const auto ids = tok.Encode(text);
  EXPECT_EQ(ids.size(), text.size());
  EXPECT_EQ(ids[0], 'h' + 2u);
  EXPECT_EQ(tok.Decode(ids), text);
  EXPECT_EQ(*tok.SpecialId("<|user|>"), 258u);
  EXPECT_FALSE(tok.SpecialId("<|nope|>").has_value());
  EXPECT_EQ(tok.vocab_size(), 261u);
}

}  // namespace
}  // namespace steel::data
