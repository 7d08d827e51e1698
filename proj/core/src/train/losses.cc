#include "steel/train/losses.h"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "steel/numerics/errors.h"
#include "steel/numerics/ops.h"

namespace steel::train {

namespace {

std::atomic<std::uint64_t> g_empty_mask_warnings{0};

void CheckSequence(const Value& logits, std::span<const std::uint32_t> tokens, const char* op) {
  if (logits.rank() != 2 || logits.dim(0) != tokens.size()) {
    throw DimensionError(std::string(op) + ": logits " + ShapeToString(logits.shape()) + " for " +
                         std::to_string(tokens.size()) + " tokens");
  }
  if (tokens.size() < 2) throw DataError(std::string(op) + ": need at least two tokens");
}

// Next-token targets and weights from a response mask.
void ShiftedTargets(std::span<const std::uint32_t> tokens, std::span<const std::uint8_t> mask,
                    std::vector<std::uint32_t>& targets, std::vector<double>& weights) {
  const std::size_t m = tokens.size();
  targets.assign(m, 0);
  weights.assign(m, 0.0);
  for (std::size_t t = 0; t + 1 < m; ++t) {
    targets[t] = tokens[t + 1];
    weights[t] = mask.empty() || mask[t + 1] ? 1.0 : 0.0;
  }
}

}  // namespace

Value WeightedNll(const Value& logits, std::span<const std::uint32_t> targets,
                  std::span<const double> weights) {
  if (logits.rank() != 2) throw DimensionError("nll: logits must be a matrix");
  const std::size_t m = logits.dim(0), vocab = logits.dim(1);
  if (targets.size() != m || weights.size() != m) {
    throw DimensionError("nll: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
  }
  const auto in = logits.data();
  std::vector<double> log_z(m, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    if (weights[t] == 0.0) continue;
    if (targets[t] >= vocab) {
      throw DataError("nll: target id " + std::to_string(targets[t]) + " at position " +
                      std::to_string(t) + " >= vocabulary " + std::to_string(vocab));
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < vocab; ++c) mx = std::max(mx, in[t * vocab + c]);
    double z = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) z += std::exp(in[t * vocab + c] - mx);
    log_z[t] = mx + std::log(z);
    total += weights[t] * (log_z[t] - in[t * vocab + targets[t]]);
  }
  std::vector<std::uint32_t> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return MakeResult("weighted_nll", {1}, {total}, {logits},
                    [m, vocab, tg = std::move(tg), w = std::move(w),
                     log_z = std::move(log_z)](internal::Node& o) {
                      internal::Node& x = *o.inputs[0];
                      auto g = x.GradBuffer();
                      const double up = o.grad[0];
                      for (std::size_t t = 0; t < m; ++t) {
                        if (w[t] == 0.0) continue;
                        const double scale = up * w[t];
                        for (std::size_t c = 0; c < vocab; ++c) {
                          g[t * vocab + c] += scale * std::exp(x.data[t * vocab + c] - log_z[t]);
                        }
                        g[t * vocab + tg[t]] -= scale;
                      }
                    });
}

Value CrossEntropyShifted(const Value& logits, std::span<const std::uint32_t> tokens) {
  CheckSequence(logits, tokens, "cross_entropy");
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  ShiftedTargets(tokens, {}, targets, weights);
  return Scale(WeightedNll(logits, targets, weights), 1.0 / static_cast<double>(tokens.size() - 1));
}

Value SftMaskedLoss(const Value& logits, std::span<const std::uint32_t> tokens,
                    std::span<const std::uint8_t> response_mask) {
  CheckSequence(logits, tokens, "sft_loss");
  if (response_mask.size() != tokens.size()) {
    throw DimensionError("sft_loss: mask length differs from token count");
  }
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  ShiftedTargets(tokens, response_mask, targets, weights);
  double count = 0.0;
  for (double w : weights) count += w;
  if (count == 0.0) {
    g_empty_mask_warnings.fetch_add(1, std::memory_order_relaxed);
    // A zero that still hangs off the graph, so callers may Backward it.
    return Scale(WeightedNll(logits, targets, weights), 0.0);
  }
  return Scale(WeightedNll(logits, targets, weights), 1.0 / count);
}

std::uint64_t EmptyMaskWarnings() { return g_empty_mask_warnings.load(); }

Value SequenceLogProb(const Value& logits, std::span<const std::uint32_t> tokens,
                      std::span<const std::uint8_t> response_mask) {
  CheckSequence(logits, tokens, "sequence_logprob");
  if (response_mask.size() != tokens.size()) {
    throw DimensionError("sequence_logprob: mask length differs from token count");
  }
  std::vector<std::uint32_t> targets;
  std::vector<double> weights;
  ShiftedTargets(tokens, response_mask, targets, weights);
  return Scale(WeightedNll(logits, targets, weights), -1.0);
}

double DpoLoss(double policy_chosen, double policy_rejected, double ref_chosen,
               double ref_rejected, double beta) {
  const double z = beta * ((policy_chosen - policy_rejected) - (ref_chosen - ref_rejected));
  // -log sigmoid(z) = softplus(-z)
  return z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

Value DpoLoss(const Value& policy_chosen, const Value& policy_rejected, double ref_chosen,
              double ref_rejected, double beta) {
  const Value margin = Sub(policy_chosen, policy_rejected);
  const Value shifted = Sub(margin, Value::Scalar(ref_chosen - ref_rejected));
  return Scale(LogSigmoid(Scale(shifted, beta)), -1.0);
}

}  // namespace steel::train
