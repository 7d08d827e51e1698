#include <benchmark/benchmark.h>

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.h"
#include "simhash_corpus.h"
#include "steel/curation/operators.h"
#include "steel/curation/pipeline.h"
#include "steel/curation/simhash.h"

namespace {

namespace sc = steel::curation;

std::vector<std::uint64_t> Fingerprints(std::size_t n) {
  std::vector<std::uint64_t> fps;
  for (const auto& t : steel::testing_support::SimhashCorpus(n)) fps.push_back(sc::SimhashFingerprint(t));
  return fps;
}

void BM_SimhashFingerprint(benchmark::State& state) {
  const auto corpus = steel::testing_support::SimhashCorpus(200);
  std::size_t bytes = 0;
  for (const auto& t : corpus) bytes += t.size();
  for (auto _ : state) {
    for (const auto& t : corpus) benchmark::DoNotOptimize(sc::SimhashFingerprint(t));
  }
  state.SetBytesProcessed(state.iterations() * bytes);
}
BENCHMARK(BM_SimhashFingerprint);

void BM_BandedIndex(benchmark::State& state) {
  const auto fps = Fingerprints(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sc::FindNearDuplicatePairs(fps, 4, 6));
  state.SetItemsProcessed(state.iterations() * fps.size());
}
BENCHMARK(BM_BandedIndex)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_BruteForcePairs(benchmark::State& state) {
  const auto fps = Fingerprints(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(steel::oracle::BruteForcePairs(fps, 4));
  state.SetItemsProcessed(state.iterations() * fps.size());
}
BENCHMARK(BM_BruteForcePairs)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

// Arguments: worker threads.
void BM_TextPipelineFixture(benchmark::State& state) {
  std::ifstream in(STEEL_FIXTURE_DIR "/curation_50.jsonl");
  std::vector<sc::Document> docs;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) docs.push_back(nlohmann::json::parse(line).get<sc::Document>());
  }
  const auto specs = sc::DefaultTextPipeline();
  for (auto _ : state) benchmark::DoNotOptimize(sc::RunPipeline(docs, specs, state.range(0)));
  state.SetItemsProcessed(state.iterations() * docs.size());
}
BENCHMARK(BM_TextPipelineFixture)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
