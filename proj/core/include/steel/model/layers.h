#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "steel/model/params.h"
#include "steel/numerics/value.h"

namespace steel::model {

/// x / sqrt(mean(x^2) + eps) * gain, per row of a [rows x d] matrix.
Value RmsNorm(const Value& x, const Value& gain, double eps);

/// Rotary embedding on a [seq x heads x head_dim] value: dimension pair
/// (2i, 2i+1) of position `positions[t]` turns by pos * base^(-2i/head_dim).
Value RopeApply(const Value& x, std::span<const std::uint32_t> positions, double theta_base);

/// Dispatch half of the soft MoE layer.
struct Dispatch {
  Value logits;    // m x (n*p), X . Phi
  Value weights;   // D, column-stochastic
  Value slots_in;  // D^T X, (n*p) x d
};
Dispatch SoftMoeDispatch(const Value& x, const Value& slot_matrix);

struct Combine {
  Value weights;  // C, row-stochastic
  Value output;   // C . slots_out, m x d
};
Combine SoftMoeCombine(const Value& logits, const Value& slots_out);

/// Two-stage SwiGLU: h = SiLU(x Wg1) * (x Wu1); out = SiLU(h Wg2) * (h Wd2).
Value EnhancedFfn(const Value& x, const ExpertParams& expert);

/// Maps the p slot rows assigned to `expert_index` to their outputs.
using ExpertFn = std::function<Value(std::size_t expert_index, const Value& slot_rows)>;

/// Soft MoE with caller-supplied experts. Slot i goes to expert i / p.
Value SoftMoeLayer(const Value& x, const Value& slot_matrix, std::uint32_t num_experts,
                   std::uint32_t slots_per_expert, const ExpertFn& expert);
Value SoftMoeLayer(const Value& x, const BlockParams& block, const ModelConfig& config);

/// Multi-head causal self-attention with RoPE on queries and keys.
Value CausalAttention(const Value& x, const BlockParams& block, const ModelConfig& config,
                      std::span<const std::uint32_t> positions);

/// Pre-norm block: h = x + attn(norm(x)); out = h + moe(norm(h)).
Value TransformerBlock(const Value& x, const BlockParams& block, const ModelConfig& config,
                       std::span<const std::uint32_t> positions);

/// Logits [m x vocab] for a token sequence.
Value LmForward(std::span<const std::uint32_t> tokens, const LMParams& params);

}  // namespace steel::model
