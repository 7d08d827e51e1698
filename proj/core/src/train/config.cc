#include "steel/train/config.h"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <string>

#include "steel/numerics/errors.h"

namespace steel::train {

void TrainConfig::Validate() const {
  if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("train config: beta1 must be in (0, 1)");
  if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("train config: beta2 must be in (0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("train config: adam_eps must be > 0");
  if (!(weight_decay >= 0)) throw ConfigError("train config: weight_decay must be >= 0");
  if (!(lr_max >= 0)) throw ConfigError("train config: lr_max must be >= 0");
  if (total_steps == 0) throw ConfigError("train config: total_steps must be >= 1");
  if (warmup_steps >= total_steps) {
    throw ConfigError("train config: warmup_steps " + std::to_string(warmup_steps) +
                      " must be < total_steps " + std::to_string(total_steps));
  }
  if (!(clip_norm > 0)) throw ConfigError("train config: clip_norm must be > 0");
  if (grad_accum_steps == 0) throw ConfigError("train config: grad_accum_steps must be >= 1");
  if (micro_batch == 0) throw ConfigError("train config: micro_batch must be >= 1");
  if (!(pref_beta > 0)) throw ConfigError("train config: pref_beta must be > 0");
}

TrainConfig PretrainConfig() { return TrainConfig{}; }

TrainConfig SftConfig() {
  TrainConfig c;
  c.lr_max = 2e-5;
  c.micro_batch = 8;
  c.grad_accum_steps = 32;  // 256 sequences per optimizer step
  c.warmup_steps = 0;
  c.total_steps = 1000;
  return c;
}

TrainConfig DpoConfig() {
  TrainConfig c;
  c.lr_max = 5e-6;
  c.pref_beta = 0.1;
  c.micro_batch = 8;
  c.grad_accum_steps = 16;  // 128 pairs per optimizer step
  c.warmup_steps = 0;
  c.total_steps = 1000;
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_eps", c.adam_eps},
                     {"weight_decay", c.weight_decay},
                     {"lr_max", c.lr_max},
                     {"warmup_steps", c.warmup_steps},
                     {"total_steps", c.total_steps},
                     {"clip_norm", c.clip_norm},
                     {"grad_accum_steps", c.grad_accum_steps},
                     {"micro_batch", c.micro_batch},
                     {"seq_len", c.seq_len},
                     {"seed", c.seed},
                     {"pref_beta", c.pref_beta},
                     {"checkpoint_every", c.checkpoint_every}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig out;
  nlohmann::json defaults = out;
  for (const auto& [key, _] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("train config: unknown field '" + key + "'");
  }
  try {
    out.beta1 = j.value("beta1", out.beta1);
    out.beta2 = j.value("beta2", out.beta2);
    out.adam_eps = j.value("adam_eps", out.adam_eps);
    out.weight_decay = j.value("weight_decay", out.weight_decay);
    out.lr_max = j.value("lr_max", out.lr_max);
    out.warmup_steps = j.value("warmup_steps", out.warmup_steps);
    out.total_steps = j.value("total_steps", out.total_steps);
    out.clip_norm = j.value("clip_norm", out.clip_norm);
    out.grad_accum_steps = j.value("grad_accum_steps", out.grad_accum_steps);
    out.micro_batch = j.value("micro_batch", out.micro_batch);
    out.seq_len = j.value("seq_len", out.seq_len);
    out.seed = j.value("seed", out.seed);
    out.pref_beta = j.value("pref_beta", out.pref_beta);
    out.checkpoint_every = j.value("checkpoint_every", out.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  out.Validate();
  c = out;
}

}  // namespace steel::train
