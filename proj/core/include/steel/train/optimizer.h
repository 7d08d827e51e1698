#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "steel/model/params.h"
#include "steel/train/config.h"

namespace steel::train {

struct MomentBuffers {
  std::vector<double> first;
  std::vector<double> second;

  bool operator==(const MomentBuffers&) const = default;
};

struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<MomentBuffers> moments;  // parallel to the parameter list

  bool operator==(const OptimizerState&) const = default;
};

/// AdamW with bias correction and decoupled weight decay (decay applied to
/// the weights before the adaptive update, as in the reference PyTorch
/// implementation).
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(OptimizerState state) : state_(std::move(state)) {}

  /// Updates every parameter from its grad buffer. Parameters without a
  /// grad are treated as having zero gradient. A non-finite gradient throws
  /// NumericError naming the parameter, before anything is modified.
  void Step(std::span<model::NamedParam> params, double lr, const TrainConfig& cfg);

  const OptimizerState& state() const { return state_; }

 private:
  OptimizerState state_;
};

/// Scales every grad by max_norm / g when the global L2 norm g exceeds
/// max_norm. Returns g (the pre-clip norm).
double ClipGlobalNorm(std::span<model::NamedParam> params, double max_norm);

void ZeroGrads(std::span<model::NamedParam> params);

}  // namespace steel::train
