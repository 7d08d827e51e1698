#include "steel/train/schedule.h"

#include <cmath>
#include <numbers>

namespace steel::train {

double CosineLr(std::uint64_t step, double lr_max, std::uint64_t warmup, std::uint64_t total) {
  if (step >= total) return 0.0;
  if (step < warmup) return lr_max * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return lr_max * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double CosineLr(std::uint64_t step, const TrainConfig& cfg) {
  return CosineLr(step, cfg.lr_max, cfg.warmup_steps, cfg.total_steps);
}

}  // namespace steel::train
