#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steel/model/config.h"

namespace steel::model {

struct GradCheckResult {
  std::string component;
  double rel_error = 0.0;  // worst relative error over the component's inputs
  bool pass = false;
};

/// Finite-difference check of every differentiable operation, each layer,
/// the transformer block and the full language model built from `config`.
/// Layer-level checks use a shrunken copy of `config` (same expert layout);
/// the full-model check samples coordinates of every parameter tensor.
std::vector<GradCheckResult> RunGradientSuite(const ModelConfig& config, double tolerance,
                                              std::uint64_t seed = 0);

}  // namespace steel::model
