#include "steel/model/params.h"

#include "steel/numerics/init.h"
#include "steel/numerics/rng.h"

namespace steel::model {

namespace {

// Hands out one derived seed per tensor, in construction order.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t base) : base_(base) {}
  std::uint64_t Next() { return DeriveSeed(base_, index_++); }

 private:
  std::uint64_t base_;
  std::uint64_t index_ = 0;
};

Value Normal(const Shape& shape, SeedStream& seeds) {
  return SeededInit(shape, InitScheme::kNormal, seeds.Next());
}

}  // namespace

LMParams InitParams(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  const std::size_t d = config.hidden_size;
  const std::size_t inter = config.intermediate_size;
  const std::size_t vocab = config.vocab_size;
  SeedStream seeds(seed);

  LMParams p;
  p.config = config;
  p.embedding = Normal({vocab, d}, seeds);
  p.blocks.reserve(config.layers);
  for (std::uint32_t l = 0; l < config.layers; ++l) {
    BlockParams b;
    b.attn_norm = SeededInit({d}, InitScheme::kOnes, 0);
    b.qkv_weight = Normal({d, 3 * d}, seeds);
    b.qkv_bias = SeededInit({3 * d}, InitScheme::kZeros, 0);
    b.out_proj = Normal({d, d}, seeds);
    b.ffn_norm = SeededInit({d}, InitScheme::kOnes, 0);
    b.slot_matrix = Normal({d, config.num_slots()}, seeds);
    for (std::uint32_t e = 0; e < config.num_experts; ++e) {
      ExpertParams ex;
      ex.gate1 = Normal({d, inter}, seeds);
      ex.up1 = Normal({d, inter}, seeds);
      ex.gate2 = Normal({inter, d}, seeds);
      ex.down2 = Normal({inter, d}, seeds);
      b.experts.push_back(std::move(ex));
    }
    p.blocks.push_back(std::move(b));
  }
  p.final_norm = SeededInit({d}, InitScheme::kOnes, 0);
  if (!config.tie_embeddings) p.head = Normal({d, vocab}, seeds);
  return p;
}

std::vector<NamedParam> NamedParameters(const BlockParams& block, const std::string& prefix) {
  std::vector<NamedParam> out = {
      {prefix + "attn_norm", block.attn_norm}, {prefix + "qkv_weight", block.qkv_weight},
      {prefix + "qkv_bias", block.qkv_bias},   {prefix + "out_proj", block.out_proj},
      {prefix + "ffn_norm", block.ffn_norm},   {prefix + "slot_matrix", block.slot_matrix},
  };
  for (std::size_t e = 0; e < block.experts.size(); ++e) {
    const std::string ep = prefix + "experts." + std::to_string(e) + ".";
    const ExpertParams& ex = block.experts[e];
    out.push_back({ep + "gate1", ex.gate1});
    out.push_back({ep + "up1", ex.up1});
    out.push_back({ep + "gate2", ex.gate2});
    out.push_back({ep + "down2", ex.down2});
  }
  return out;
}

std::vector<NamedParam> NamedParameters(const LMParams& params) {
  std::vector<NamedParam> out = {{"embedding", params.embedding}};
  for (std::size_t l = 0; l < params.blocks.size(); ++l) {
    auto block = NamedParameters(params.blocks[l], "blocks." + std::to_string(l) + ".");
    out.insert(out.end(), std::make_move_iterator(block.begin()),
               std::make_move_iterator(block.end()));
  }
  out.push_back({"final_norm", params.final_norm});
  if (params.head) out.push_back({"head", params.head});
  return out;
}

std::uint64_t CountParameters(const ModelConfig& config) {
  config.Validate();
  const std::uint64_t d = config.hidden_size;
  const std::uint64_t inter = config.intermediate_size;
  const std::uint64_t vocab = config.vocab_size;
  const std::uint64_t slots = config.num_slots();
  const std::uint64_t per_expert = 2 * d * inter + 2 * inter * d;
  const std::uint64_t per_block = (d * 3 * d + 3 * d)  // qkv + bias
                                  + d * d               // out_proj
                                  + d * slots           // slot matrix
                                  + config.num_experts * per_expert + 2 * d;  // two norm gains
  const std::uint64_t head = config.tie_embeddings ? 0 : d * vocab;
  return vocab * d + config.layers * per_block + d + head;
}

LMParams CloneParams(const LMParams& params, bool requires_grad) {
  auto copy = [requires_grad](const Value& v) {
    return v ? v.Detach(requires_grad) : Value();
  };
  LMParams out;
  out.config = params.config;
  out.embedding = copy(params.embedding);
  for (const BlockParams& b : params.blocks) {
    BlockParams c;
    c.attn_norm = copy(b.attn_norm);
    c.qkv_weight = copy(b.qkv_weight);
    c.qkv_bias = copy(b.qkv_bias);
    c.out_proj = copy(b.out_proj);
    c.ffn_norm = copy(b.ffn_norm);
    c.slot_matrix = copy(b.slot_matrix);
    for (const ExpertParams& e : b.experts) {
      c.experts.push_back({copy(e.gate1), copy(e.up1), copy(e.gate2), copy(e.down2)});
    }
    out.blocks.push_back(std::move(c));
  }
  out.final_norm = copy(params.final_norm);
  out.head = copy(params.head);
  return out;
}

}  // namespace steel::model
