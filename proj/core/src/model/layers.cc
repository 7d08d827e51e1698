#include "steel/model/layers.h"

#include <cmath>
#include <string>
#include <vector>

#include "steel/numerics/errors.h"
#include "steel/numerics/ops.h"

namespace steel::model {

Value RmsNorm(const Value& x, const Value& gain, double eps) {
  const std::size_t d = x.cols();
  const std::size_t rows = x.size() / d;
  if (gain.size() != d) {
    throw DimensionError("rms_norm: gain " + ShapeToString(gain.shape()) + " vs input " +
                         ShapeToString(x.shape()));
  }
  const auto in = x.data();
  const auto g = gain.data();
  std::vector<double> out(x.size());
  std::vector<double> inv_rms(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double ms = 0.0;
    for (std::size_t c = 0; c < d; ++c) ms += in[r * d + c] * in[r * d + c];
    ms /= static_cast<double>(d);
    inv_rms[r] = 1.0 / std::sqrt(ms + eps);
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = in[r * d + c] * inv_rms[r] * g[c];
  }
  return MakeResult(
      "rms_norm", x.shape(), std::move(out), {x, gain},
      [rows, d, inv_rms = std::move(inv_rms)](internal::Node& o) {
        internal::Node& xn = *o.inputs[0];
        internal::Node& gn = *o.inputs[1];
        const double inv_d = 1.0 / static_cast<double>(d);
        if (xn.requires_grad) {
          auto gx = xn.GradBuffer();
          for (std::size_t r = 0; r < rows; ++r) {
            const double s = inv_rms[r];
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c)
              dot += o.grad[r * d + c] * gn.data[c] * xn.data[r * d + c];
            const double coeff = s * s * s * inv_d * dot;
            for (std::size_t c = 0; c < d; ++c) {
              const std::size_t k = r * d + c;
              gx[k] += s * gn.data[c] * o.grad[k] - coeff * xn.data[k];
            }
          }
        }
        if (gn.requires_grad) {
          auto gg = gn.GradBuffer();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c)
              gg[c] += o.grad[r * d + c] * xn.data[r * d + c] * inv_rms[r];
        }
      });
}

Value RopeApply(const Value& x, std::span<const std::uint32_t> positions, double theta_base) {
  if (x.rank() != 3) {
    throw DimensionError("rope: expected [seq x heads x head_dim], got " +
                         ShapeToString(x.shape()));
  }
  const std::size_t seq = x.dim(0), heads = x.dim(1), hd = x.dim(2);
  if (hd % 2 != 0) throw ConfigError("rope: head_dim " + std::to_string(hd) + " is odd");
  if (positions.size() != seq) {
    throw DimensionError("rope: " + std::to_string(positions.size()) + " positions for " +
                         std::to_string(seq) + " rows");
  }
  const std::size_t half = hd / 2;
  std::vector<double> cos_t(seq * half), sin_t(seq * half);
  for (std::size_t t = 0; t < seq; ++t) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq =
          std::pow(theta_base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
      const double angle = static_cast<double>(positions[t]) * freq;
      cos_t[t * half + i] = std::cos(angle);
      sin_t[t * half + i] = std::sin(angle);
    }
  }
  const auto in = x.data();
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < seq; ++t)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < half; ++i) {
        const std::size_t k = (t * heads + h) * hd + 2 * i;
        const double c = cos_t[t * half + i], s = sin_t[t * half + i];
        out[k] = in[k] * c - in[k + 1] * s;
        out[k + 1] = in[k] * s + in[k + 1] * c;
      }
  return MakeResult("rope", x.shape(), std::move(out), {x},
                    [seq, heads, hd, half, cos_t = std::move(cos_t),
                     sin_t = std::move(sin_t)](internal::Node& o) {
                      auto g = o.inputs[0]->GradBuffer();
                      // The transpose of a rotation is the inverse rotation.
                      for (std::size_t t = 0; t < seq; ++t)
                        for (std::size_t h = 0; h < heads; ++h)
                          for (std::size_t i = 0; i < half; ++i) {
                            const std::size_t k = (t * heads + h) * hd + 2 * i;
                            const double c = cos_t[t * half + i], s = sin_t[t * half + i];
                            g[k] += o.grad[k] * c + o.grad[k + 1] * s;
                            g[k + 1] += -o.grad[k] * s + o.grad[k + 1] * c;
                          }
                    });
}

Dispatch SoftMoeDispatch(const Value& x, const Value& slot_matrix) {
  Dispatch out;
  out.logits = MatMul(x, slot_matrix);
  out.weights = Softmax(out.logits, 0);
  out.slots_in = MatMul(Transpose(out.weights), x);
  return out;
}

Combine SoftMoeCombine(const Value& logits, const Value& slots_out) {
  Combine out;
  out.weights = Softmax(logits, 1);
  out.output = MatMul(out.weights, slots_out);
  return out;
}

Value EnhancedFfn(const Value& x, const ExpertParams& expert) {
  const Value h = Mul(SiLU(MatMul(x, expert.gate1)), MatMul(x, expert.up1));
  return Mul(SiLU(MatMul(h, expert.gate2)), MatMul(h, expert.down2));
}

Value SoftMoeLayer(const Value& x, const Value& slot_matrix, std::uint32_t num_experts,
                   std::uint32_t slots_per_expert, const ExpertFn& expert) {
  if (slot_matrix.cols() != static_cast<std::size_t>(num_experts) * slots_per_expert) {
    throw DimensionError("soft_moe: slot matrix has " + std::to_string(slot_matrix.cols()) +
                         " columns, expected n*p = " +
                         std::to_string(num_experts * slots_per_expert));
  }
  const Dispatch dispatch = SoftMoeDispatch(x, slot_matrix);
  std::vector<Value> outputs;
  outputs.reserve(num_experts);
  for (std::uint32_t e = 0; e < num_experts; ++e) {
    const Value rows = SliceRows(dispatch.slots_in, e * slots_per_expert, slots_per_expert);
    outputs.push_back(expert(e, rows));
  }
  const Value slots_out = num_experts == 1 ? outputs.front() : ConcatRows(outputs);
  return SoftMoeCombine(dispatch.logits, slots_out).output;
}

Value SoftMoeLayer(const Value& x, const BlockParams& block, const ModelConfig& config) {
  return SoftMoeLayer(x, block.slot_matrix, config.num_experts, config.slots_per_expert,
                      [&block](std::size_t e, const Value& rows) {
                        return EnhancedFfn(rows, block.experts.at(e));
                      });
}

Value CausalAttention(const Value& x, const BlockParams& block, const ModelConfig& config,
                      std::span<const std::uint32_t> positions) {
  const std::size_t m = x.rows();
  const std::size_t d = config.hidden_size;
  const std::size_t heads = config.heads;
  const std::size_t hd = config.head_dim();
  if (m > config.max_seq_len) {
    throw ConfigError("attention: sequence of " + std::to_string(m) +
                      " tokens exceeds max_seq_len " + std::to_string(config.max_seq_len));
  }
  const Value qkv = AddRow(MatMul(x, block.qkv_weight), block.qkv_bias);
  auto rotate = [&](const Value& t) {
    return Reshape(RopeApply(Reshape(t, {m, heads, hd}), positions, config.rope_theta_base),
                   {m, d});
  };
  const Value q = rotate(SliceCols(qkv, 0, d));
  const Value k = rotate(SliceCols(qkv, d, d));
  const Value v = SliceCols(qkv, 2 * d, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  std::vector<Value> head_out;
  head_out.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Value qh = heads == 1 ? q : SliceCols(q, h * hd, hd);
    const Value kh = heads == 1 ? k : SliceCols(k, h * hd, hd);
    const Value vh = heads == 1 ? v : SliceCols(v, h * hd, hd);
    const Value probs = CausalSoftmax(Scale(MatMul(qh, Transpose(kh)), scale));
    head_out.push_back(MatMul(probs, vh));
  }
  const Value merged = heads == 1 ? head_out.front() : ConcatCols(head_out);
  return MatMul(merged, block.out_proj);
}

Value TransformerBlock(const Value& x, const BlockParams& block, const ModelConfig& config,
                       std::span<const std::uint32_t> positions) {
  const Value h =
      Add(x, CausalAttention(RmsNorm(x, block.attn_norm, config.norm_eps), block, config,
                             positions));
  return Add(h, SoftMoeLayer(RmsNorm(h, block.ffn_norm, config.norm_eps), block, config));
}

Value LmForward(std::span<const std::uint32_t> tokens, const LMParams& params) {
  const ModelConfig& config = params.config;
  if (tokens.empty()) throw DataError("lm_forward: empty token sequence");
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] >= config.vocab_size) {
      throw DataError("lm_forward: token id " + std::to_string(tokens[t]) + " at position " +
                      std::to_string(t) + " is outside the vocabulary of " +
                      std::to_string(config.vocab_size));
    }
  }
  std::vector<std::uint32_t> positions(tokens.size());
  for (std::size_t t = 0; t < positions.size(); ++t) positions[t] = static_cast<std::uint32_t>(t);

  Value h = GatherRows(params.embedding, tokens);
  for (const BlockParams& block : params.blocks) h = TransformerBlock(h, block, config, positions);
  h = RmsNorm(h, params.final_norm, config.norm_eps);
  return config.tie_embeddings ? MatMul(h, Transpose(params.embedding)) : MatMul(h, params.head);
}

}  // namespace steel::model
