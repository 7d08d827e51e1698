#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steel/data/iterator.h"
#include "steel/data/tokenizer.h"
#include "steel/model/params.h"
#include "steel/train/config.h"
#include "steel/train/optimizer.h"

namespace steel::train {

struct StepMetrics {
  std::uint64_t step = 0;  // 1-based index of the completed optimizer step
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;  // before clipping
  std::uint64_t tokens = 0;
};

using MetricsSink = std::function<void(const StepMetrics&)>;

enum class StopReason { kStepLimit, kScheduleEnd, kDataExhausted };

/// Accumulated grads -> clip -> AdamW at CosineLr(step + 1). Returns the
/// metrics with step, lr and grad_norm filled in.
StepMetrics ApplyOptimizerStep(std::vector<model::NamedParam>& params, AdamW& optimizer,
                               const TrainConfig& cfg);

/// Pretraining loop over a packed dataset.
class Trainer {
 public:
  Trainer(model::LMParams params, TrainConfig cfg, data::PackedDatasetIterator data);

  /// Restores model, optimizer, iterator and step from a bundle.
  static Trainer Resume(const std::filesystem::path& bundle_or_root);

  /// Runs until `max_steps` further steps, the end of the schedule or the
  /// end of the data (no wrap). With a checkpoint root, writes
  /// `root/step_XXXXXXXX` every cfg.checkpoint_every steps and after the
  /// final step, and points `root/latest` at it.
  StopReason Run(std::uint64_t max_steps, const MetricsSink& on_step,
                 const std::optional<std::filesystem::path>& checkpoint_root = std::nullopt);

  /// Mean next-token loss over the given blocks, no gradient.
  double EvaluateLoss(const std::vector<std::vector<std::uint32_t>>& blocks) const;

  std::filesystem::path SaveCheckpoint(const std::filesystem::path& root) const;

  std::uint64_t step() const { return step_; }
  const model::LMParams& params() const { return params_; }
  const TrainConfig& config() const { return cfg_; }
  const data::PackedDatasetIterator& data() const { return data_; }
  data::PackedDatasetIterator& mutable_data() { return data_; }
  const AdamW& optimizer() const { return optimizer_; }

 private:
  Trainer(model::LMParams params, TrainConfig cfg, data::PackedDatasetIterator data,
          AdamW optimizer, std::uint64_t step);

  model::LMParams params_;
  std::vector<model::NamedParam> named_;
  TrainConfig cfg_;
  data::PackedDatasetIterator data_;
  AdamW optimizer_;
  std::uint64_t step_ = 0;
};

/// Prompt/response pair rendered with the chat template
/// <|user|> prompt <|assistant|> response <|end|>; the mask covers the
/// response tokens and the closing marker.
struct SftExample {
  std::vector<std::uint32_t> tokens;
  std::vector<std::uint8_t> mask;
};

SftExample RenderChat(const data::Tokenizer& tokenizer, const std::string& prompt,
                      const std::string& response);

struct PreferencePair {
  SftExample chosen;
  SftExample rejected;
};

/// Fine-tuning loop: each optimizer step draws grad_accum_steps x
/// micro_batch examples from a seeded per-epoch shuffle.
void RunSft(model::LMParams& params, const std::vector<SftExample>& examples,
            const TrainConfig& cfg, std::uint64_t steps, const MetricsSink& on_step);

/// Preference optimization against a frozen reference model.
void RunDpo(model::LMParams& policy, const model::LMParams& reference,
            const std::vector<PreferencePair>& pairs, const TrainConfig& cfg,
            std::uint64_t steps, const MetricsSink& on_step);

}  // namespace steel::train
