#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace steel::train {

/// Optimizer, schedule and batching hyperparameters. Defaults are the
/// pretraining values: AdamW(0.9, 0.95), weight decay 0.05, peak lr 3e-4,
/// 2000 warmup steps, clip 1.0, micro-batch 8 x 8 accumulation, 2048 context.
struct TrainConfig {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double adam_eps = 1e-8;
  double weight_decay = 0.05;
  double lr_max = 3e-4;
  std::uint64_t warmup_steps = 2000;
  std::uint64_t total_steps = 1'070'000;
  double clip_norm = 1.0;
  std::uint32_t grad_accum_steps = 8;
  std::uint32_t micro_batch = 8;
  std::uint32_t seq_len = 2048;
  std::uint64_t seed = 0;
  double pref_beta = 0.1;
  std::uint64_t checkpoint_every = 0;  // 0 disables periodic checkpoints

  /// Throws ConfigError on the first violated invariant.
  void Validate() const;

  bool operator==(const TrainConfig&) const = default;
};

TrainConfig PretrainConfig();
/// Supervised fine-tuning: peak lr 2e-5, global batch 256.
TrainConfig SftConfig();
/// Preference optimization: peak lr 5e-6, pref_beta 0.1, global batch 128.
TrainConfig DpoConfig();

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

}  // namespace steel::train
