#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "steel/model/config.h"
#include "steel/model/params.h"
#include "steel/train/config.h"
#include "steel/train/optimizer.h"

namespace steel::train {

// A checkpoint bundle is a directory:
//   params.bin     "SLPM" u32 version, u32 count, per tensor {str name,
//                  u32 rank, u64 dims[rank], f64 data[]}
//   optimizer.bin  "SLOP" u32 version, u64 step, u32 count, per tensor
//                  {str name, u64 n, f64 first[n], f64 second[n]}
//   iterator.slit  packed-dataset iterator snapshot ("SLIT")
//   config.json    {"model": ..., "train": ..., "step": n}
//   manifest.json  {"format_version": 1, "step": n, "files": {name: md5}}
// Strings are u32 length + bytes; integers and doubles little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointBundle {
  model::ModelConfig model_config;
  TrainConfig train_config;
  std::uint64_t step = 0;
  model::LMParams params;
  OptimizerState optimizer;
  std::vector<std::uint8_t> iterator_snapshot;
};

std::vector<std::uint8_t> EncodeParams(const model::LMParams& params);
/// Decodes into freshly allocated leaves shaped by `config`.
model::LMParams DecodeParams(std::span<const std::uint8_t> bytes,
                             const model::ModelConfig& config);

std::vector<std::uint8_t> EncodeOptimizer(const OptimizerState& state,
                                          const std::vector<model::NamedParam>& params);
OptimizerState DecodeOptimizer(std::span<const std::uint8_t> bytes,
                               const std::vector<model::NamedParam>& params);

/// Writes the bundle into `dir` via a temporary sibling directory and a
/// rename, so a reader never sees a half-written bundle.
void WriteCheckpoint(const std::filesystem::path& dir, const CheckpointBundle& bundle);

/// Verifies every file against the manifest digests, then decodes.
/// Any failure throws CorruptCheckpointError.
CheckpointBundle ReadCheckpoint(const std::filesystem::path& dir);

/// Resolves either a bundle directory or a checkpoint root holding a
/// `latest` pointer file.
std::filesystem::path ResolveCheckpoint(const std::filesystem::path& path);

}  // namespace steel::train
