#include "steel/train/trainer.h"

#include <cstdio>

#include "steel/data/binary_io.h"
#include "steel/model/layers.h"
#include "steel/numerics/errors.h"
#include "steel/numerics/ops.h"
#include "steel/numerics/rng.h"
#include "steel/train/checkpoint.h"
#include "steel/train/losses.h"
#include "steel/train/schedule.h"

namespace steel::train {

namespace fs = std::filesystem;

StepMetrics ApplyOptimizerStep(std::vector<model::NamedParam>& params, AdamW& optimizer,
                               const TrainConfig& cfg) {
  StepMetrics m;
  m.grad_norm = ClipGlobalNorm(params, cfg.clip_norm);
  m.step = optimizer.state().step + 1;
  m.lr = CosineLr(m.step, cfg);
  optimizer.Step(params, m.lr, cfg);
  return m;
}

Trainer::Trainer(model::LMParams params, TrainConfig cfg, data::PackedDatasetIterator data)
    : Trainer(std::move(params), std::move(cfg), std::move(data), AdamW(), 0) {}

Trainer::Trainer(model::LMParams params, TrainConfig cfg, data::PackedDatasetIterator data,
                 AdamW optimizer, std::uint64_t step)
    : params_(std::move(params)),
      named_(model::NamedParameters(params_)),
      cfg_(std::move(cfg)),
      data_(std::move(data)),
      optimizer_(std::move(optimizer)),
      step_(step) {
  cfg_.Validate();
  const std::uint32_t block = data_.block_size();
  if (cfg_.seq_len != 0 && block != 0 && block != cfg_.seq_len + 1) {
    throw ConfigError("trainer: shards hold blocks of " + std::to_string(block) +
                      " tokens but seq_len + 1 = " + std::to_string(cfg_.seq_len + 1));
  }
  if (block > params_.config.max_seq_len) {
    throw ConfigError("trainer: block of " + std::to_string(block) +
                      " tokens exceeds max_seq_len " +
                      std::to_string(params_.config.max_seq_len));
  }
}

Trainer Trainer::Resume(const fs::path& bundle_or_root) {
  CheckpointBundle b = ReadCheckpoint(ResolveCheckpoint(bundle_or_root));
  if (b.optimizer.step != b.step) {
    throw CorruptCheckpointError("checkpoint: optimizer step " + std::to_string(b.optimizer.step) +
                                 " differs from bundle step " + std::to_string(b.step));
  }
  auto data = data::PackedDatasetIterator::Restore(b.iterator_snapshot);
  return Trainer(std::move(b.params), b.train_config, std::move(data), AdamW(b.optimizer),
                 b.step);
}

StopReason Trainer::Run(std::uint64_t max_steps, const MetricsSink& on_step,
                        const std::optional<fs::path>& checkpoint_root) {
  const std::size_t per_step = static_cast<std::size_t>(cfg_.micro_batch) * cfg_.grad_accum_steps;
  StopReason reason = StopReason::kStepLimit;
  std::uint64_t last_saved = checkpoint_root ? step_ : ~std::uint64_t{0};
  for (std::uint64_t n = 0; n < max_steps; ++n) {
    if (step_ >= cfg_.total_steps) {
      reason = StopReason::kScheduleEnd;
      break;
    }
    const data::IteratorState before = data_.state();
    ZeroGrads(named_);
    double loss_sum = 0.0;
    std::uint64_t tokens = 0;
    bool exhausted = false;
    for (std::size_t i = 0; i < per_step; ++i) {
      auto block = data_.Next();
      if (!block) {
        exhausted = true;
        break;
      }
      const Value logits = model::LmForward(block->tokens, params_);
      const Value loss = CrossEntropyShifted(logits, block->tokens);
      Backward(Scale(loss, 1.0 / static_cast<double>(per_step)));
      loss_sum += loss.item();
      tokens += block->tokens.size() - 1;
    }
    if (exhausted) {
      // Leave the iterator where the last complete step left it.
      data_ = data::PackedDatasetIterator::FromState(before);
      ZeroGrads(named_);
      reason = StopReason::kDataExhausted;
      break;
    }
    StepMetrics metrics = ApplyOptimizerStep(named_, optimizer_, cfg_);
    step_ = optimizer_.state().step;
    metrics.loss = loss_sum / static_cast<double>(per_step);
    metrics.tokens = tokens;
    if (on_step) on_step(metrics);
    if (checkpoint_root && cfg_.checkpoint_every != 0 && step_ % cfg_.checkpoint_every == 0) {
      SaveCheckpoint(*checkpoint_root);
      last_saved = step_;
    }
  }
  if (checkpoint_root && last_saved != step_) SaveCheckpoint(*checkpoint_root);
  return reason;
}

double Trainer::EvaluateLoss(const std::vector<std::vector<std::uint32_t>>& blocks) const {
  if (blocks.empty()) return 0.0;
  double total = 0.0;
  for (const auto& b : blocks) {
    total += CrossEntropyShifted(model::LmForward(b, params_), b).item();
  }
  return total / static_cast<double>(blocks.size());
}

fs::path Trainer::SaveCheckpoint(const fs::path& root) const {
  fs::create_directories(root);
  char name[32];
  std::snprintf(name, sizeof name, "step_%08llu", static_cast<unsigned long long>(step_));
  CheckpointBundle bundle;
  bundle.model_config = params_.config;
  bundle.train_config = cfg_;
  bundle.step = step_;
  bundle.params = params_;
  bundle.optimizer = optimizer_.state();
  bundle.iterator_snapshot = data_.Snapshot();
  WriteCheckpoint(root / name, bundle);
  const std::string pointer = std::string(name) + "\n";
  data::WriteFileAtomic(root / "latest",
                        std::span(reinterpret_cast<const std::uint8_t*>(pointer.data()),
                                  pointer.size()));
  return root / name;
}

SftExample RenderChat(const data::Tokenizer& tokenizer, const std::string& prompt,
                      const std::string& response) {
  const auto user = tokenizer.SpecialId("<|user|>");
  const auto assistant = tokenizer.SpecialId("<|assistant|>");
  const auto end = tokenizer.SpecialId("<|end|>");
  if (!user || !assistant || !end) {
    throw ConfigError("tokenizer lacks the <|user|>/<|assistant|>/<|end|> markers");
  }
  SftExample ex;
  auto push = [&ex](std::uint32_t id, bool in_response) {
    ex.tokens.push_back(id);
    ex.mask.push_back(in_response ? 1 : 0);
  };
  push(*user, false);
  for (auto id : tokenizer.Encode(prompt)) push(id, false);
  push(*assistant, false);
  for (auto id : tokenizer.Encode(response)) push(id, true);
  push(*end, true);
  return ex;
}

namespace {

// Deterministic epoch-wise sampler over [0, n).
class EpochSampler {
 public:
  EpochSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { Refill(); }

  std::size_t Next() {
    if (pos_ == order_.size()) {
      ++epoch_;
      Refill();
    }
    return order_[pos_++];
  }

 private:
  void Refill() {
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    CounterRng rng(DeriveSeed(seed_, epoch_));
    ShuffleInPlace(std::span(order_), rng);
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

}  // namespace

void RunSft(model::LMParams& params, const std::vector<SftExample>& examples,
            const TrainConfig& cfg, std::uint64_t steps, const MetricsSink& on_step) {
  cfg.Validate();
  if (examples.empty()) throw DataError("sft: no examples");
  auto named = model::NamedParameters(params);
  AdamW optimizer;
  EpochSampler sampler(examples.size(), cfg.seed);
  const std::size_t per_step = static_cast<std::size_t>(cfg.micro_batch) * cfg.grad_accum_steps;
  for (std::uint64_t s = 0; s < steps && s < cfg.total_steps; ++s) {
    ZeroGrads(named);
    double loss_sum = 0.0;
    std::uint64_t tokens = 0;
    for (std::size_t i = 0; i < per_step; ++i) {
      const SftExample& ex = examples[sampler.Next()];
      const Value loss = SftMaskedLoss(model::LmForward(ex.tokens, params), ex.tokens, ex.mask);
      Backward(Scale(loss, 1.0 / static_cast<double>(per_step)));
      loss_sum += loss.item();
      tokens += ex.tokens.size();
    }
    StepMetrics m = ApplyOptimizerStep(named, optimizer, cfg);
    m.loss = loss_sum / static_cast<double>(per_step);
    m.tokens = tokens;
    if (on_step) on_step(m);
  }
}

void RunDpo(model::LMParams& policy, const model::LMParams& reference,
            const std::vector<PreferencePair>& pairs, const TrainConfig& cfg,
            std::uint64_t steps, const MetricsSink& on_step) {
  cfg.Validate();
  if (pairs.empty()) throw DataError("dpo: no preference pairs");
  auto named = model::NamedParameters(policy);
  AdamW optimizer;
  EpochSampler sampler(pairs.size(), cfg.seed);
  const std::size_t per_step = static_cast<std::size_t>(cfg.micro_batch) * cfg.grad_accum_steps;
  auto logp = [](const model::LMParams& p, const SftExample& ex) {
    return SequenceLogProb(model::LmForward(ex.tokens, p), ex.tokens, ex.mask);
  };
  for (std::uint64_t s = 0; s < steps && s < cfg.total_steps; ++s) {
    ZeroGrads(named);
    double loss_sum = 0.0;
    std::uint64_t tokens = 0;
    for (std::size_t i = 0; i < per_step; ++i) {
      const PreferencePair& pair = pairs[sampler.Next()];
      const double ref_chosen = logp(reference, pair.chosen).item();
      const double ref_rejected = logp(reference, pair.rejected).item();
      const Value loss = DpoLoss(logp(policy, pair.chosen), logp(policy, pair.rejected),
                                 ref_chosen, ref_rejected, cfg.pref_beta);
      Backward(Scale(loss, 1.0 / static_cast<double>(per_step)));
      loss_sum += loss.item();
      tokens += pair.chosen.tokens.size() + pair.rejected.tokens.size();
    }
    StepMetrics m = ApplyOptimizerStep(named, optimizer, cfg);
    m.loss = loss_sum / static_cast<double>(per_step);
    m.tokens = tokens;
    if (on_step) on_step(m);
  }
}

}  // namespace steel::train
