#include "steel/model/grad_suite.h"

#include <algorithm>
#include <functional>

#include "steel/model/layers.h"
#include "steel/model/params.h"
#include "steel/numerics/gradcheck.h"
#include "steel/numerics/ops.h"
#include "steel/numerics/rng.h"
#include "steel/train/losses.h"

namespace steel::model {
namespace {

constexpr double kEps = 1e-6;

using Fn = std::function<Value(const std::vector<Value>&)>;

Value Random(const Shape& shape, std::uint64_t seed, double scale, bool requires_grad = true) {
  CounterRng rng(seed);
  std::vector<double> data(ShapeSize(shape));
  for (double& v : data) v = scale * rng.NextNormal();
  return Value(shape, std::move(data), requires_grad);
}

// Scalar objective: a fixed random projection of f's output, so every
// output coordinate carries a distinct weight.
class Objective {
 public:
  Objective(Fn f, std::uint64_t seed) : f_(std::move(f)), seed_(seed) {}

  Value operator()(const std::vector<Value>& inputs) {
    Value y = f_(inputs);
    if (y.size() == 1) return y;
    if (!probe_) probe_ = Random(y.shape(), seed_, 1.0, false);
    return Sum(Mul(y, probe_));
  }

 private:
  Fn f_;
  std::uint64_t seed_;
  Value probe_;
};

void AppendGrad(const Value& x, std::vector<double>& out) {
  if (x.has_grad()) {
    out.insert(out.end(), x.grad().begin(), x.grad().end());
  } else {
    out.insert(out.end(), x.size(), 0.0);
  }
}

double CheckAll(std::vector<Value> inputs, Fn f, std::uint64_t seed) {
  Objective objective(std::move(f), seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& x : inputs) x.ClearGrad();
  Backward(objective(inputs));
  std::vector<double> analytic;
  std::vector<double> numeric;
  for (auto& x : inputs) {
    AppendGrad(x, analytic);
    const auto fd = FiniteDifferenceGradientInPlace([&] { return objective(inputs).item(); }, x, kEps);
    numeric.insert(numeric.end(), fd.begin(), fd.end());
  }
  return RelativeError(analytic, numeric);
}

// Perturbs up to `per_tensor` coordinates of each parameter, chosen where the
// objective actually depends on them (embedding rows of present tokens).
double CheckSampled(std::vector<NamedParam> params, const std::function<Value()>& loss,
                    std::uint64_t seed, std::size_t per_tensor,
                    const std::function<bool(const std::string&, std::size_t)>& eligible) {
  for (auto& p : params) p.value.ClearGrad();
  Backward(loss());
  CounterRng rng(seed);
  std::vector<double> analytic;
  std::vector<double> numeric;
  for (auto& p : params) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      if (eligible(p.name, i)) candidates.push_back(i);
    }
    ShuffleInPlace(std::span<std::size_t>(candidates), rng);
    candidates.resize(std::min(per_tensor, candidates.size()));
    for (std::size_t i : candidates) {
      analytic.push_back(p.value.has_grad() ? p.value.grad()[i] : 0.0);
      auto data = p.value.mutable_data();
      const double saved = data[i];
      data[i] = saved + kEps;
      const double up = loss().item();
      data[i] = saved - kEps;
      const double down = loss().item();
      data[i] = saved;
      numeric.push_back((up - down) / (2 * kEps));
    }
  }
  return RelativeError(analytic, numeric);
}

ExpertParams RandomExpert(std::size_t d, std::size_t inter, std::uint64_t seed) {
  return {Random({d, inter}, seed + 1, 0.5), Random({d, inter}, seed + 2, 0.5),
          Random({inter, d}, seed + 3, 0.5), Random({inter, d}, seed + 4, 0.5)};
}

// Block weights large enough to drive every nonlinearity away from zero.
BlockParams RandomBlock(const ModelConfig& c, std::uint64_t seed) {
  const std::size_t d = c.hidden_size;
  BlockParams b;
  b.attn_norm = Random({d}, seed + 10, 0.2);
  b.qkv_weight = Random({d, 3 * d}, seed + 11, 0.4);
  b.qkv_bias = Random({3 * d}, seed + 12, 0.2);
  b.out_proj = Random({d, d}, seed + 13, 0.4);
  b.ffn_norm = Random({d}, seed + 14, 0.2);
  b.slot_matrix = Random({d, c.num_slots()}, seed + 15, 0.5);
  for (auto v : {&b.attn_norm, &b.ffn_norm}) {
    for (double& g : v->mutable_data()) g += 1.0;
  }
  for (std::uint32_t e = 0; e < c.num_experts; ++e) {
    b.experts.push_back(RandomExpert(d, c.intermediate_size, seed + 100 * (e + 1)));
  }
  return b;
}

std::vector<Value> BlockInputs(const BlockParams& b, bool attention, bool moe) {
  std::vector<Value> v;
  if (attention) v.insert(v.end(), {b.attn_norm, b.qkv_weight, b.qkv_bias, b.out_proj});
  if (moe) {
    v.insert(v.end(), {b.ffn_norm, b.slot_matrix});
    for (const auto& e : b.experts) v.insert(v.end(), {e.gate1, e.up1, e.gate2, e.down2});
  }
  return v;
}

}  // namespace

std::vector<GradCheckResult> RunGradientSuite(const ModelConfig& config, double tolerance,
                                              std::uint64_t seed) {
  config.Validate();
  std::vector<GradCheckResult> results;
  std::uint64_t s = seed * 7919 + 1;
  const auto record = [&](const std::string& name, double err) {
    results.push_back({name, err, err < tolerance});
  };
  const auto check = [&](const std::string& name, std::vector<Value> inputs, Fn f) {
    record(name, CheckAll(std::move(inputs), std::move(f), s += 1000));
  };
  const auto R = [&](Shape shape, double scale = 1.0) { return Random(std::move(shape), s += 17, scale); };

  check("matmul", {R({3, 4}), R({4, 2})}, [](auto& v) { return MatMul(v[0], v[1]); });
  check("transpose", {R({3, 4})}, [](auto& v) { return Transpose(v[0]); });
  check("add", {R({3, 4}), R({3, 4})}, [](auto& v) { return Add(v[0], v[1]); });
  check("sub", {R({3, 4}), R({3, 4})}, [](auto& v) { return Sub(v[0], v[1]); });
  check("mul", {R({3, 4}), R({3, 4})}, [](auto& v) { return Mul(v[0], v[1]); });
  check("scale", {R({3, 4})}, [](auto& v) { return Scale(v[0], -1.7); });
  check("add_row", {R({3, 4}), R({4})}, [](auto& v) { return AddRow(v[0], v[1]); });
  check("mul_row", {R({3, 4}), R({4})}, [](auto& v) { return MulRow(v[0], v[1]); });
  check("softmax_axis0", {R({4, 3}, 2.0)}, [](auto& v) { return Softmax(v[0], 0); });
  check("softmax_axis1", {R({4, 3}, 2.0)}, [](auto& v) { return Softmax(v[0], 1); });
  check("causal_softmax", {R({4, 4}, 2.0)}, [](auto& v) { return CausalSoftmax(v[0]); });
  check("sigmoid", {R({3, 4}, 2.0)}, [](auto& v) { return Sigmoid(v[0]); });
  check("silu", {R({3, 4}, 2.0)}, [](auto& v) { return SiLU(v[0]); });
  check("log_sigmoid", {R({3, 4}, 2.0)}, [](auto& v) { return LogSigmoid(v[0]); });
  check("sum", {R({3, 4})}, [](auto& v) { return Sum(v[0]); });
  check("mean", {R({3, 4})}, [](auto& v) { return Mean(v[0]); });
  check("slice_rows", {R({5, 3})}, [](auto& v) { return SliceRows(v[0], 1, 3); });
  check("slice_cols", {R({3, 5})}, [](auto& v) { return SliceCols(v[0], 2, 2); });
  check("concat_rows", {R({2, 3}), R({1, 3})}, [](auto& v) { return ConcatRows({v[0], v[1]}); });
  check("concat_cols", {R({3, 2}), R({3, 1})}, [](auto& v) { return ConcatCols({v[0], v[1]}); });
  check("reshape", {R({3, 4})}, [](auto& v) { return Reshape(v[0], {2, 6}); });
  check("gather_rows", {R({5, 3})}, [](auto& v) {
    static const std::uint32_t ids[] = {0, 2, 2, 4};
    return GatherRows(v[0], ids);
  });
  check("rms_norm", {R({3, 6}), R({6})}, [](auto& v) { return RmsNorm(v[0], v[1], 1e-6); });
  check("rope", {R({3, 2, 4})}, [](auto& v) {
    static const std::uint32_t pos[] = {0, 3, 7};
    return RopeApply(v[0], pos, 10000.0);
  });
  check("weighted_nll", {R({3, 5}, 2.0)}, [](auto& v) {
    static const std::uint32_t targets[] = {1, 4, 0};
    static const double weights[] = {0.5, 0.0, 2.0};
    return train::WeightedNll(v[0], targets, weights);
  });
  check("cross_entropy", {R({4, 5}, 2.0)}, [](auto& v) {
    static const std::uint32_t tokens[] = {3, 1, 4, 1};
    return train::CrossEntropyShifted(v[0], tokens);
  });
  check("sft_masked_loss", {R({5, 5}, 2.0)}, [](auto& v) {
    static const std::uint32_t tokens[] = {0, 3, 1, 4, 2};
    static const std::uint8_t mask[] = {0, 0, 1, 1, 1};
    return train::SftMaskedLoss(v[0], tokens, mask);
  });
  check("sequence_logprob", {R({5, 5}, 2.0)}, [](auto& v) {
    static const std::uint32_t tokens[] = {0, 3, 1, 4, 2};
    static const std::uint8_t mask[] = {0, 1, 0, 1, 1};
    return train::SequenceLogProb(v[0], tokens, mask);
  });
  check("dpo_loss", {R({1}), R({1})},
        [](auto& v) { return train::DpoLoss(v[0], v[1], -1.3, -0.4, 0.7); });

  // Layer-level checks on a shrunken copy with the same expert layout.
  ModelConfig small = config;
  small.layers = 1;
  small.heads = 2;
  small.kv_heads = 2;
  small.hidden_size = 8;
  small.intermediate_size = 8;
  small.vocab_size = 11;
  small.max_seq_len = std::max<std::uint32_t>(small.max_seq_len, 8);
  const std::size_t m = 3;
  const std::size_t d = small.hidden_size;
  const std::size_t slots = small.num_slots();
  static const std::uint32_t kPositions[] = {0, 1, 2};

  check("soft_moe_dispatch", {R({m, d}), R({d, slots})},
        [](auto& v) { return SoftMoeDispatch(v[0], v[1]).slots_in; });
  check("soft_moe_combine", {R({m, slots}, 2.0), R({slots, d})},
        [](auto& v) { return SoftMoeCombine(v[0], v[1]).output; });
  {
    ExpertParams e = RandomExpert(d, small.intermediate_size, s += 31);
    check("enhanced_ffn", {R({m, d}), e.gate1, e.up1, e.gate2, e.down2}, [](auto& v) {
      return EnhancedFfn(v[0], ExpertParams{v[1], v[2], v[3], v[4]});
    });
  }
  {
    BlockParams b = RandomBlock(small, s += 37);
    std::vector<Value> in = {R({m, d})};
    for (const auto& p : BlockInputs(b, false, true)) in.push_back(p);
    in.erase(in.begin() + 1);  // ffn_norm is not used by the bare layer
    check("soft_moe_layer", in, [&b, &small](auto& v) { return SoftMoeLayer(v[0], b, small); });
  }
  {
    BlockParams b = RandomBlock(small, s += 41);
    std::vector<Value> in = {R({m, d})};
    for (const auto& p : BlockInputs(b, true, false)) in.push_back(p);
    in.erase(in.begin() + 1);  // attn_norm belongs to the block wrapper
    check("causal_attention", in,
          [&b, &small](auto& v) { return CausalAttention(v[0], b, small, kPositions); });
  }
  {
    BlockParams b = RandomBlock(small, s += 43);
    std::vector<Value> in = {R({m, d})};
    for (const auto& p : BlockInputs(b, true, true)) in.push_back(p);
    check("transformer_block", in,
          [&b, &small](auto& v) { return TransformerBlock(v[0], b, small, kPositions); });
  }

  // Full model at the requested size, sampled coordinates per tensor.
  {
    LMParams params = InitParams(config, s += 47);
    CounterRng rng(s += 53);
    for (auto& p : NamedParameters(params)) {
      const bool gain = p.name.find("norm") != std::string::npos;
      for (double& x : p.value.mutable_data()) x = gain ? 1.0 + 0.2 * rng.NextNormal() : x * 10.0;
    }
    const std::size_t len = std::min<std::size_t>(6, config.max_seq_len);
    std::vector<std::uint32_t> tokens(len);
    for (auto& t : tokens) t = static_cast<std::uint32_t>(rng.NextBounded(config.vocab_size));
    std::vector<bool> present(config.vocab_size, false);
    for (auto t : tokens) present[t] = true;
    const std::size_t width = config.hidden_size;
    auto loss = [&] { return train::CrossEntropyShifted(LmForward(tokens, params), tokens); };
    const double err = CheckSampled(
        NamedParameters(params), loss, s += 59, 4, [&](const std::string& name, std::size_t i) {
          return name != "embedding" || present[i / width];
        });
    record("lm_forward", err);
  }
  return results;
}

}  // namespace steel::model
