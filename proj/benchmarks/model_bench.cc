#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "model_fixtures.h"
#include "steel/model/layers.h"
#include "steel/model/params.h"
#include "steel/numerics/ops.h"
#include "steel/train/losses.h"

namespace {

using steel::Value;
namespace ts = steel::testing_support;

// Arguments: tokens, experts, slots per expert.
void BM_SoftMoeLayer(benchmark::State& state) {
  const std::size_t m = state.range(0);
  const auto cfg = ts::SmallConfig(64, 4, state.range(1), state.range(2), 64);
  std::mt19937_64 gen(4);
  const auto block = ts::RandomBlock(cfg, gen);
  const Value x = ts::Random({m, 64}, gen);
  for (auto _ : state) benchmark::DoNotOptimize(steel::model::SoftMoeLayer(x, block, cfg));
  state.SetItemsProcessed(state.iterations() * m);
}
BENCHMARK(BM_SoftMoeLayer)->Args({64, 2, 1})->Args({256, 2, 1})->Args({256, 4, 2})->Args({1024, 2, 1});

void BM_TrainStepTiny(benchmark::State& state) {
  const std::size_t seq = state.range(0);
  const auto cfg = steel::model::TinyConfig();
  auto params = steel::model::InitParams(cfg, 1);
  auto named = steel::model::NamedParameters(params);
  std::mt19937_64 gen(5);
  std::vector<std::uint32_t> tokens(seq + 1);
  for (auto& t : tokens) t = static_cast<std::uint32_t>(gen() % cfg.vocab_size);
  for (auto _ : state) {
    for (auto& p : named) p.value.ZeroGrad();
    const Value loss = steel::train::CrossEntropyShifted(steel::model::LmForward(tokens, params), tokens);
    steel::Backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetItemsProcessed(state.iterations() * seq);
}
BENCHMARK(BM_TrainStepTiny)->Arg(32)->Arg(64)->Arg(127)->Unit(benchmark::kMillisecond);

}  // namespace
