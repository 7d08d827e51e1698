#pragma once

#include <cstdint>

#include "steel/train/config.h"

namespace steel::train {

/// Linear warmup to lr_max, then cosine annealing to exactly 0 at
/// total_steps. Steps past total_steps clamp to 0.
double CosineLr(std::uint64_t step, const TrainConfig& cfg);
double CosineLr(std::uint64_t step, double lr_max, std::uint64_t warmup, std::uint64_t total);

}  // namespace steel::train
