// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "model_fixtures.h"
#include "oracles.h"
#include "published_catalog.h"
#include "simhash_corpus.h"
#include "steel/curation/document.h"
#include "steel/curation/operators.h"
#include "steel/curation/pipeline.h"
#include "steel/curation/simhash.h"
#include "steel/data/iterator.h"
#include "steel/data/shard.h"
#include "steel/data/tokenizer.h"
#include "steel/model/grad_suite.h"
#include "steel/model/layers.h"
#include "steel/model/params.h"
#include "steel/train/losses.h"
#include "steel/train/schedule.h"
#include "steel/train/trainer.h"
#include "temp_dir.h"

namespace {

namespace fs = std::filesystem;
using namespace steel;
using nlohmann::json;
using testing_support::TempDir;

struct Result {
  bool pass = false;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string Fmt(const char* format, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c);
  return buf;
}

Result GradientSuite() {
  Timer t;
  const auto results = model::RunGradientSuite(model::TinyConfig(), 1e-4, 0);
  const double secs = t.seconds();
  double worst = 0.0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.rel_error);
    if (!r.pass) failed += " " + r.component;
  }
  const bool pass = failed.empty() && secs < 120.0 && !results.empty();
  std::string detail = std::to_string(results.size()) + " components, worst rel err " +
                       Fmt("%.2e, %.1f s", worst, secs);
  if (!failed.empty()) detail += "; failed:" + failed;
  return {pass, detail};
}

Result SoftMoeOracle() {
  std::mt19937_64 gen(101);
  double worst = 0.0, worst_sum = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t n = 1 + trial % 3, p = 1 + (trial / 3) % 3, m = 2 + trial % 5;
    const auto cfg = testing_support::SmallConfig(4, 1, n, p, 4 + 2 * (trial % 2));
    const auto block = testing_support::RandomBlock(cfg, gen);
    const Value x = testing_support::Random({m, 4}, gen, 1.5);
    const auto expect = oracle::SoftMoe(oracle::ToMatrix(x), block, cfg.slots_per_expert);
    worst = std::max(worst, testing_support::MaxAbsDiff(expect.output, model::SoftMoeLayer(x, block, cfg)));

    const auto d = model::SoftMoeDispatch(x, block.slot_matrix);
    const std::size_t slots = cfg.num_slots();
    const auto c = model::SoftMoeCombine(d.logits, testing_support::Random({slots, 4}, gen));
    for (std::size_t s = 0; s < slots; ++s) {
      double sum = 0.0;
      for (std::size_t i = 0; i < m; ++i) sum += d.weights.at(i, s);
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t s = 0; s < slots; ++s) sum += c.weights.at(i, s);
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
  }
  return {worst < 1e-12 && worst_sum < 1e-10,
          Fmt("100 instances, max |layer - oracle| %.2e, max |sum - 1| %.2e", worst, worst_sum)};
}

Result Equivariance() {
  std::mt19937_64 gen(202);
  double worst = 0.0;
  int bit_exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t n = 1 + trial % 3, p = 1 + trial % 2, m = 2 + trial % 6;
    const auto cfg = testing_support::SmallConfig(4, 1, n, p, 4);
    const auto block = testing_support::RandomBlock(cfg, gen);
    const Value x = testing_support::Random({m, 4}, gen);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const Value y = model::SoftMoeLayer(x, block, cfg);
    const Value permuted = model::SoftMoeLayer(testing_support::PermuteRows(x, perm), block, cfg);
    const Value expect = testing_support::PermuteRows(y, perm);
    double diff = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) diff = std::max(diff, std::abs(permuted.data()[i] - expect.data()[i]));
    worst = std::max(worst, diff);
    bit_exact += diff == 0.0;
  }
  return {worst <= 1e-12, Fmt("100 instances, max diff %.2e (%g bit-exact)", worst, bit_exact)};
}

Result Overfit() {
  TempDir dir;
  model::ModelConfig mc;
  mc.layers = 2;
  mc.heads = 4;
  mc.kv_heads = 4;
  mc.num_experts = 2;
  mc.slots_per_expert = 1;
  mc.hidden_size = 64;
  mc.intermediate_size = 64;
  mc.vocab_size = 64;
  mc.max_seq_len = 64;

  // 32 blocks of 64 tokens: 63 positions predicted per block.
  std::mt19937_64 gen(404);
  std::uniform_int_distribution<std::int64_t> tok(0, mc.vocab_size - 1);
  std::vector<std::vector<std::int64_t>> seqs(32);
  std::vector<std::vector<std::uint32_t>> blocks;
  for (auto& s : seqs) {
    for (int i = 0; i < 64; ++i) s.push_back(tok(gen));
    blocks.emplace_back(s.begin(), s.end());
  }
  data::PackOptions po;
  po.block_size = 64;
  po.separator_id = std::nullopt;
  po.blocks_per_shard = 32;
  const auto shards = data::PackTokens(seqs, po, dir / "shards");

  train::TrainConfig tc;
  tc.lr_max = 3e-3;
  tc.warmup_steps = 50;
  tc.total_steps = 2000;
  tc.weight_decay = 0.0;
  tc.micro_batch = 8;
  tc.grad_accum_steps = 1;
  tc.seq_len = 63;
  tc.seed = 1;

  Timer t;
  train::Trainer trainer(model::InitParams(mc, 1), tc, data::PackedDatasetIterator::Open(shards, 1));
  const double initial = trainer.EvaluateLoss(blocks);
  const double ln_v = std::log(static_cast<double>(mc.vocab_size));
  double loss = initial;
  std::uint64_t steps = 0;
  while (steps < tc.total_steps && loss >= 0.1) {
    trainer.Run(20, nullptr);
    steps = trainer.step();
    loss = trainer.EvaluateLoss(blocks);
  }
  const double secs = t.seconds();
  const bool initial_ok = std::abs(initial - ln_v) <= 0.05 * ln_v;
  return {initial_ok && loss < 0.1 && steps <= 2000 && secs < 600.0,
          Fmt("initial %.4f (ln V %.4f), ", initial, ln_v) +
              Fmt("CE %.4f after %g steps, %.0f s", loss, static_cast<double>(steps), secs)};
}

Result ResumeExact() {
  TempDir dir;
  model::ModelConfig mc;
  mc.layers = 1;
  mc.heads = 2;
  mc.kv_heads = 2;
  mc.num_experts = 2;
  mc.hidden_size = 8;
  mc.intermediate_size = 8;
  mc.vocab_size = 32;
  mc.max_seq_len = 16;
  std::mt19937_64 gen(505);
  std::uniform_int_distribution<std::int64_t> tok(0, 31);
  std::vector<std::vector<std::int64_t>> seqs(24, std::vector<std::int64_t>(9));
  for (auto& s : seqs) {
    for (auto& v : s) v = tok(gen);
  }
  data::PackOptions po;
  po.block_size = 9;
  po.separator_id = std::nullopt;
  po.blocks_per_shard = 7;
  const auto shards = data::PackTokens(seqs, po, dir / "shards");
  train::TrainConfig tc;
  tc.lr_max = 1e-2;
  tc.warmup_steps = 20;
  tc.total_steps = 400;
  tc.micro_batch = 2;
  tc.grad_accum_steps = 2;
  tc.seq_len = 8;
  auto make = [&] {
    return train::Trainer(model::InitParams(mc, 9), tc, data::PackedDatasetIterator::Open(shards, 4));
  };

  std::vector<double> straight, split;
  auto full = make();
  full.Run(200, [&](const train::StepMetrics& m) { straight.push_back(m.loss); });
  auto first = make();
  first.Run(100, [&](const train::StepMetrics& m) { split.push_back(m.loss); }, dir / "ckpt");
  auto resumed = train::Trainer::Resume(dir / "ckpt");
  resumed.Run(100, [&](const train::StepMetrics& m) { split.push_back(m.loss); });

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < std::min(straight.size(), split.size()); ++i) mismatches += straight[i] != split[i];
  const bool pass = straight.size() == 200 && split.size() == 200 && mismatches == 0;
  return {pass, std::to_string(straight.size()) + " vs " + std::to_string(split.size()) + " losses, " +
                    std::to_string(mismatches) + " differ"};
}

std::vector<fs::path> DistinctShards(const fs::path& dir, std::int64_t first, std::size_t blocks,
                                     std::uint64_t per_shard, const std::string& prefix) {
  std::vector<std::int64_t> seq;
  for (std::size_t i = 0; i < blocks * 2; ++i) seq.push_back(first + static_cast<std::int64_t>(i));
  data::PackOptions o;
  o.block_size = 2;
  o.separator_id = std::nullopt;
  o.blocks_per_shard = per_shard;
  o.file_prefix = prefix;
  return data::PackTokens({seq}, o, dir);
}

Result AppendSemantics() {
  TempDir dir;
  const auto old_shards = DistinctShards(dir / "old", 0, 20, 6, "old");
  const auto new_shards = DistinctShards(dir / "new", 5000, 5, 3, "new");
  std::size_t instances = 0, failures = 0;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    for (std::size_t cursor = 0; cursor <= 20; ++cursor) {
      ++instances;
      auto it = data::PackedDatasetIterator::Open(old_shards, seed);
      const auto before = it.state().order;
      std::vector<std::uint32_t> trained;
      for (std::size_t i = 0; i < cursor; ++i) trained.push_back(it.Next()->tokens[0]);
      it.Append(new_shards);
      const auto& order = it.state().order;
      bool ok = order.size() == 25 && std::equal(before.begin(), before.begin() + cursor, order.begin());
      for (std::size_t i = cursor; i < 25; ++i) {
        const auto b = it.Next();
        ok = ok && b && it.state().epoch == 0;
        if (b) trained.push_back(b->tokens[0]);
      }
      const std::set<std::uint32_t> unique(trained.begin(), trained.end());
      ok = ok && trained.size() == 25 && unique.size() == 25;
      failures += !ok;
    }
  }

  // The same check through the tool: train, then append a shard whose bytes
  // are already registered under another name.
  json mc = {{"layers", 1}, {"heads", 2}, {"kv_heads", 2}, {"num_experts", 2}, {"slots_per_expert", 1},
             {"hidden_size", 8}, {"intermediate_size", 8}, {"vocab_size", 6000}, {"max_seq_len", 4}};
  json tc = {{"warmup_steps", 1}, {"total_steps", 10}, {"micro_batch", 1}, {"grad_accum_steps", 1},
             {"seq_len", 1}};
  std::ofstream(dir / "model.json") << mc.dump();
  std::ofstream(dir / "train.json") << tc.dump();
  fs::copy_file(old_shards[0], dir / "copy.bin");
  std::ostringstream out, err;
  const auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "steel");
    return cli::RunCli(args, out, err);
  };
  const int trained = run({"train", "--model", (dir / "model.json").string(), "--train",
                           (dir / "train.json").string(), "--data", (dir / "old").string(), "--steps", "2",
                           "--checkpoint-dir", (dir / "ckpt").string()});
  const int dup = run({"append", "--checkpoint", (dir / "ckpt").string(), "--shards", (dir / "copy.bin").string()});
  const bool pass = failures == 0 && trained == cli::kExitOk && dup == cli::kExitDuplicateData;
  return {pass, std::to_string(instances - failures) + "/" + std::to_string(instances) +
                    " seed x cursor instances hold; duplicate shard exit code " + std::to_string(dup)};
}

Result Schedule() {
  const train::TrainConfig cfg;
  const double at_warmup = train::CosineLr(cfg.warmup_steps, cfg);
  const double at_total = train::CosineLr(cfg.total_steps, cfg);
  const double midpoint = train::CosineLr(cfg.warmup_steps / 2, cfg);
  const bool pass = at_warmup == 3e-4 && at_total == 0.0 && std::abs(midpoint - 1.5e-4) < 1e-18;
  return {pass, Fmt("lr(warmup) %.17g, lr(total) %.17g, lr(warmup/2) %.17g", at_warmup, at_total, midpoint)};
}

Result Curation() {
  using namespace curation;
  const bool text = DefaultTextPipeline() == ParsePipelineConfig(testing_support::PublishedTextChain());
  const bool code = DefaultCodePipeline() == ParsePipelineConfig(testing_support::PublishedCodeChain());
  const bool shipped =
      LoadPipelineConfig(STEEL_SOURCE_DIR "/configs/text_pipeline.json") == DefaultTextPipeline() &&
      LoadPipelineConfig(STEEL_SOURCE_DIR "/configs/code_pipeline.json") == DefaultCodePipeline();

  std::ifstream in(STEEL_FIXTURE_DIR "/curation_50.jsonl");
  std::vector<Document> docs;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) docs.push_back(json::parse(line).get<Document>());
  }
  const auto result = RunPipeline(docs, DefaultTextPipeline(), 4);
  std::set<std::string> kept;
  for (const auto& d : result.kept) kept.insert(d.id);
  std::size_t wrong = 0;
  for (const auto& d : docs) {
    const auto& expect = d.meta.at("expect");
    if (expect == "keep") {
      wrong += !kept.count(d.id);
    } else {
      const auto it = result.report.drop_reasons.find(d.id);
      wrong += it == result.report.drop_reasons.end() || it->second.op != expect;
    }
  }
  const bool pass = text && code && shipped && docs.size() == 50 && wrong == 0;
  return {pass, std::string("text chain ") + (text ? "matches" : "differs") + ", code chain " +
                    (code ? "matches" : "differs") + ", shipped configs " + (shipped ? "match" : "differ") +
                    "; fixture " + std::to_string(docs.size() - wrong) + "/" + std::to_string(docs.size()) +
                    " labels reproduced (" + std::to_string(kept.size()) + " kept)"};
}

Result Simhash() {
  Timer t;
  const auto corpus = testing_support::SimhashCorpus(1000, 7);
  std::vector<std::uint64_t> fps;
  for (const auto& text : corpus) fps.push_back(curation::SimhashFingerprint(text, 6, true));
  const auto banded = curation::FindNearDuplicatePairs(fps, 4, 6);
  const double secs = t.seconds();
  const auto brute = oracle::BruteForcePairs(fps, 4);
  return {banded == brute && secs < 30.0 && !brute.empty(),
          std::to_string(banded.size()) + " banded pairs vs " + std::to_string(brute.size()) +
              Fmt(" brute-force pairs, %.2f s", secs)};
}

Result Dpo() {
  const double zero = train::DpoLoss(0.0, 0.0, 0.0, 0.0, 0.1);
  const double one = train::DpoLoss(1.0, 0.0, 0.0, 0.0, 0.1);
  return {zero == std::log(2.0) && std::abs(one - 0.644397) <= 1e-6,
          Fmt("margin 0: %.17g, margin 1: %.9f", zero, one)};
}

Result ParameterCount() {
  std::string detail;
  bool pass = true;
  auto published = model::PublishedConfig();
  for (const auto& c : {model::TinyConfig(), testing_support::SmallConfig(8, 2, 3, 2, 12), published}) {
    const auto got = model::CountParameters(c);
    const auto expect = oracle::ShapeSumCount(c);
    pass = pass && got == expect;
    auto tied = c, untied = c;
    tied.tie_embeddings = true;
    untied.tie_embeddings = false;
    pass = pass && model::CountParameters(untied) - model::CountParameters(tied) ==
                       std::uint64_t{c.hidden_size} * c.vocab_size;
    if (!detail.empty()) detail += ", ";
    detail += std::to_string(got);
  }
  return {pass, "counts " + detail + " match the shape oracle; tied difference d*vocab"};
}

Result Exclusions() {
  std::ostringstream out, err;
  const int code = cli::RunCli({"steel", "bench", "--steps", "3", "--micro-batch", "2", "--seq-len", "32"}, out, err);
  std::string last;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) last = line;
  double rate = 0.0;
  {
    std::istringstream fields(last);
    std::string f;
    for (int i = 0; i < 5 && fields >> f; ++i) rate = std::atof(f.c_str());
  }
  return {code == cli::kExitOk && rate > 0.0,
          "benchmark scores, reference throughput and loss curves are excluded by design; bench ran at " +
              Fmt("%.0f tokens/s (informational)", rate)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
      {"gradient suite", GradientSuite},
      {"soft MoE matches straight-line oracle", SoftMoeOracle},
      {"soft MoE token-permutation equivariance", Equivariance},
      {"overfit fixed corpus", Overfit},
      {"resume bit-exactness", ResumeExact},
      {"append semantics", AppendSemantics},
      {"schedule values", Schedule},
      {"curation thresholds and fixture", Curation},
      {"simhash index equals brute force", Simhash},
      {"DPO closed-form values", Dpo},
      {"parameter counter", ParameterCount},
      {"excluded results, informational bench", Exclusions},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failed += !r.pass;
    std::printf("%s %2zu %s: %s\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, r.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
