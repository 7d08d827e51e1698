#include "steel/model/config.h"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <string>

#include "steel/numerics/errors.h"

namespace steel::model {

void ModelConfig::Validate() const {
  auto positive = [](std::uint32_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string("model config: ") + name + " must be >= 1");
  };
  positive(layers, "layers");
  positive(heads, "heads");
  positive(kv_heads, "kv_heads");
  positive(num_experts, "num_experts");
  positive(slots_per_expert, "slots_per_expert");
  positive(hidden_size, "hidden_size");
  positive(intermediate_size, "intermediate_size");
  positive(vocab_size, "vocab_size");
  positive(max_seq_len, "max_seq_len");
  if (hidden_size % heads != 0) {
    throw ConfigError("model config: hidden_size " + std::to_string(hidden_size) +
                      " is not divisible by heads " + std::to_string(heads));
  }
  if (heads % kv_heads != 0) {
    throw ConfigError("model config: heads must be divisible by kv_heads");
  }
  if (kv_heads != heads) {
    throw ConfigError("model config: grouped-query attention is not supported (kv_heads != heads)");
  }
  if (head_dim() % 2 != 0) {
    throw ConfigError("model config: head_dim " + std::to_string(head_dim()) +
                      " must be even for rotary embeddings");
  }
  if (!(rope_theta_base > 0)) throw ConfigError("model config: rope_theta_base must be > 0");
  if (!(norm_eps >= 0)) throw ConfigError("model config: norm_eps must be >= 0");
}

ModelConfig PublishedConfig() { return ModelConfig{}; }

ModelConfig TinyConfig() {
  ModelConfig c;
  c.layers = 2;
  c.heads = 4;
  c.kv_heads = 4;
  c.num_experts = 2;
  c.slots_per_expert = 1;
  c.hidden_size = 64;
  c.intermediate_size = 64;
  c.vocab_size = 256;
  c.max_seq_len = 128;
  return c;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"layers", c.layers},
                     {"heads", c.heads},
                     {"kv_heads", c.kv_heads},
                     {"num_experts", c.num_experts},
                     {"slots_per_expert", c.slots_per_expert},
                     {"hidden_size", c.hidden_size},
                     {"intermediate_size", c.intermediate_size},
                     {"vocab_size", c.vocab_size},
                     {"max_seq_len", c.max_seq_len},
                     {"rope_theta_base", c.rope_theta_base},
                     {"norm_eps", c.norm_eps},
                     {"tie_embeddings", c.tie_embeddings}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  static const char* kKnown[] = {"layers",           "heads",          "kv_heads",
                                 "num_experts",      "slots_per_expert", "hidden_size",
                                 "intermediate_size", "vocab_size",     "max_seq_len",
                                 "rope_theta_base",  "norm_eps",       "tie_embeddings"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw ConfigError("model config: unknown field '" + key + "'");
    }
  }
  ModelConfig out;
  try {
    out.layers = j.value("layers", out.layers);
    out.heads = j.value("heads", out.heads);
    out.kv_heads = j.value("kv_heads", out.heads);
    out.num_experts = j.value("num_experts", out.num_experts);
    out.slots_per_expert = j.value("slots_per_expert", out.slots_per_expert);
    out.hidden_size = j.value("hidden_size", out.hidden_size);
    out.intermediate_size = j.value("intermediate_size", out.intermediate_size);
    out.vocab_size = j.value("vocab_size", out.vocab_size);
    out.max_seq_len = j.value("max_seq_len", out.max_seq_len);
    out.rope_theta_base = j.value("rope_theta_base", out.rope_theta_base);
    out.norm_eps = j.value("norm_eps", out.norm_eps);
    out.tie_embeddings = j.value("tie_embeddings", out.tie_embeddings);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  out.Validate();
  c = out;
}

}  // namespace steel::model
