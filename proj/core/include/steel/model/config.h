#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

namespace steel::model {

/// Architecture hyperparameters. Defaults are the published 1B-class
/// configuration; tests construct shrunken copies.
struct ModelConfig {
  std::uint32_t layers = 18;
  std::uint32_t heads = 32;
  std::uint32_t kv_heads = 32;
  std::uint32_t num_experts = 6;
  std::uint32_t slots_per_expert = 1;
  std::uint32_t hidden_size = 1792;
  std::uint32_t intermediate_size = 1792;
  std::uint32_t vocab_size = 151936;
  std::uint32_t max_seq_len = 2048;
  double rope_theta_base = 10000.0;
  double norm_eps = 1e-6;
  bool tie_embeddings = false;

  std::uint32_t head_dim() const { return hidden_size / heads; }
  std::uint32_t num_slots() const { return num_experts * slots_per_expert; }

  /// Throws ConfigError naming the first violated constraint.
  void Validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Layers 18, heads 32, KV heads 32, 6 experts x 1 slot, hidden 1792,
/// intermediate 1792, vocab 151936, context 2048.
ModelConfig PublishedConfig();

/// Small configuration used by tests and the CLI defaults: 2 layers, d 64,
/// 4 heads, 2 experts x 1 slot, intermediate 64, vocab 256, context 128.
ModelConfig TinyConfig();

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace steel::model
