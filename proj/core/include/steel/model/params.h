#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "steel/model/config.h"
#include "steel/numerics/value.h"

namespace steel::model {

/// Weights of one expert: a two-stage SwiGLU network.
struct ExpertParams {
  Value gate1;  // d x I
  Value up1;    // d x I
  Value gate2;  // I x d
  Value down2;  // I x d
};

struct BlockParams {
  Value attn_norm;   // d
  Value qkv_weight;  // d x 3d
  Value qkv_bias;    // 3d, the only bias in the network
  Value out_proj;    // d x d
  Value ffn_norm;    // d
  Value slot_matrix; // d x (n * p)
  std::vector<ExpertParams> experts;
};

struct LMParams {
  ModelConfig config;
  Value embedding;  // vocab x d
  std::vector<BlockParams> blocks;
  Value final_norm;  // d
  Value head;        // d x vocab; empty when embeddings are tied
};

/// A parameter together with a stable, human-readable name such as
/// "blocks.0.experts.1.gate2".
struct NamedParam {
  std::string name;
  Value value;
};

/// Every weight drawn from normal(0, 0.02), the QKV bias zero, norm gains
/// one. Each tensor gets its own stream derived from `seed`.
LMParams InitParams(const ModelConfig& config, std::uint64_t seed);

/// Enumerates parameters in a fixed order (the checkpoint order).
std::vector<NamedParam> NamedParameters(const LMParams& params);
std::vector<NamedParam> NamedParameters(const BlockParams& block, const std::string& prefix);

/// Closed-form parameter count.
std::uint64_t CountParameters(const ModelConfig& config);

/// Fresh leaves with copied data; shares nothing with `params`.
LMParams CloneParams(const LMParams& params, bool requires_grad);

}  // namespace steel::model
