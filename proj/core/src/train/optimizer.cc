#include "steel/train/optimizer.h"

#include <cmath>

#include "steel/numerics/errors.h"

namespace steel::train {

void AdamW::Step(std::span<model::NamedParam> params, double lr, const TrainConfig& cfg) {
  if (state_.moments.empty()) {
    state_.moments.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state_.moments[i].first.assign(params[i].value.size(), 0.0);
      state_.moments[i].second.assign(params[i].value.size(), 0.0);
    }
  }
  if (state_.moments.size() != params.size()) {
    throw ContractError("AdamW: optimizer state holds " + std::to_string(state_.moments.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Value& p = params[i].value;
    if (state_.moments[i].first.size() != p.size()) {
      throw ContractError("AdamW: moment shape mismatch for " + params[i].name);
    }
    for (double g : p.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + params[i].name);
    }
  }

  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].value.mutable_data();
    const auto grad = params[i].value.grad();
    auto& m = state_.moments[i].first;
    auto& v = state_.moments[i].second;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const double g = grad.empty() ? 0.0 : grad[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      data[k] *= decay;
      data[k] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

double ClipGlobalNorm(std::span<model::NamedParam> params, double max_norm) {
  if (!(max_norm > 0)) throw ConfigError("clip_global_norm: max_norm must be > 0");
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.value.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& p : params) {
      if (!p.value.has_grad()) continue;
      for (double& g : p.value.mutable_grad()) g *= scale;
    }
  }
  return norm;
}

void ZeroGrads(std::span<model::NamedParam> params) {
  for (auto& p : params) p.value.ZeroGrad();
}

}  // namespace steel::train
