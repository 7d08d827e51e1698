#pragma once

#include <cstdint>
#include <span>

#include "steel/numerics/value.h"

namespace steel::train {

/// Sum over rows t of weight[t] * -log softmax(logits[t])[targets[t]].
/// Rows with zero weight are skipped entirely. Fused and differentiable.
Value WeightedNll(const Value& logits, std::span<const std::uint32_t> targets,
                  std::span<const double> weights);

/// Mean next-token loss: position t predicts tokens[t+1]; the last position
/// has no target. Needs at least two tokens.
Value CrossEntropyShifted(const Value& logits, std::span<const std::uint32_t> tokens);

/// Next-token loss averaged over positions whose target token is marked in
/// `response_mask` (mask[t+1] != 0). An all-zero mask yields 0 and bumps
/// EmptyMaskWarnings().
Value SftMaskedLoss(const Value& logits, std::span<const std::uint32_t> tokens,
                    std::span<const std::uint8_t> response_mask);
std::uint64_t EmptyMaskWarnings();

/// Summed log-probability of the masked target tokens (DPO sequence score).
Value SequenceLogProb(const Value& logits, std::span<const std::uint32_t> tokens,
                      std::span<const std::uint8_t> response_mask);

/// -log sigmoid(beta * ((chosen - rejected) - (ref_chosen - ref_rejected))).
double DpoLoss(double policy_chosen, double policy_rejected, double ref_chosen,
               double ref_rejected, double beta);
/// Differentiable in the two policy terms; reference terms are constants.
Value DpoLoss(const Value& policy_chosen, const Value& policy_rejected, double ref_chosen,
              double ref_rejected, double beta);

}  // namespace steel::train
