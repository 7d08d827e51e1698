#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.h"
#include "steel/data/tokenizer.h"
#include "steel/model/config.h"
#include "steel/train/checkpoint.h"
#include "steel/train/config.h"
#include "temp_dir.h"

namespace steel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing_support::TempDir;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
};

Outcome Steel(std::vector<std::string> args) {
  args.insert(args.begin(), "steel");
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs a built binary with stderr captured alongside stdout.
Outcome RunBinary(const std::string& command) {
  Outcome o;
  FILE* pipe = popen((command + " 2>&1").c_str(), "r");
  if (!pipe) return {-1, "", "popen failed"};
  std::array<char, 512> buf;
  while (std::fgets(buf.data(), buf.size(), pipe)) o.out += buf.data();
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

void WriteFile(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// A small byte-level model and a short run, written into one temp dir.
class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    json model = {{"layers", 1}, {"heads", 2}, {"kv_heads", 2}, {"num_experts", 2},
                  {"slots_per_expert", 1}, {"hidden_size", 8}, {"intermediate_size", 8},
                  {"vocab_size", data::ByteTokenizer::kVocabSize}, {"max_seq_len", 16}};
    WriteFile(dir_ / "model.json", model.dump());
    json train = {{"warmup_steps", 2}, {"total_steps", 40}, {"micro_batch", 2},
                  {"grad_accum_steps", 1}, {"seq_len", 8}, {"seed", 3}, {"lr_max", 1e-2}};
    WriteFile(dir_ / "train.json", train.dump());
    WriteFile(dir_ / "docs_a.jsonl", Docs("alpha", 20));
    WriteFile(dir_ / "docs_b.jsonl", Docs("beta", 6));
  }

  static std::string Docs(const std::string& word, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += json{{"text", word + " line " + std::to_string(i)}}.dump() + "\n";
    return s;
  }

  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  void Pack(const std::string& in, const std::string& out, const std::string& prefix) {
    const auto r = Steel({"pack", "--in", P(in), "--out-dir", P(out), "--block-size", "9",
                        "--blocks-per-shard", "4", "--prefix", prefix});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  Outcome Train(const std::string& ckpt, int steps) {
    return Steel({"train", "--model", P("model.json"), "--train", P("train.json"), "--data", P("shards_a"),
                "--steps", std::to_string(steps), "--checkpoint-dir", P(ckpt)});
  }

  TempDir dir_;
};

TEST(Cli, VersionAndHelp) {
  const auto v = Steel({"--version"});
  EXPECT_EQ(v.code, kExitOk);
  EXPECT_NE(v.out.find("SLPK"), std::string::npos);
  EXPECT_EQ(Steel({"--help"}).code, kExitOk);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(Steel({"--bogus"}).code, kExitConfig);
  EXPECT_EQ(Steel({"train"}).code, kExitConfig);
  EXPECT_EQ(Steel({"curate", "--config", "x"}).code, kExitConfig);
  EXPECT_EQ(Steel({}).code, kExitConfig);
}

TEST_F(CliFixture, PackTrainResumeMatchesStraightRun) {
  Pack("docs_a.jsonl", "shards_a", "a");
  const auto straight = Train("straight", 6);
  ASSERT_EQ(straight.code, kExitOk) << straight.err;
  ASSERT_EQ(Train("split", 3).code, kExitOk);
  const auto resumed = Steel({"resume", "--checkpoint", P("split"), "--steps", "3"});
  ASSERT_EQ(resumed.code, kExitOk) << resumed.err;

  const auto a = train::ResolveCheckpoint(P("straight"));
  const auto b = train::ResolveCheckpoint(P("split"));
  EXPECT_EQ(a.filename(), b.filename());
  EXPECT_EQ(ReadFile(a / "params.bin"), ReadFile(b / "params.bin"));
  EXPECT_EQ(ReadFile(a / "optimizer.bin"), ReadFile(b / "optimizer.bin"));
  EXPECT_EQ(ReadFile(a / "iterator.slit"), ReadFile(b / "iterator.slit"));

  // Six metric lines from the straight run, each valid JSON with a step.
  std::istringstream lines(straight.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) EXPECT_EQ(json::parse(line).at("step"), ++n);
  EXPECT_EQ(n, 6);
}

TEST_F(CliFixture, AppendRejectsDuplicatesWithExitFour) {
  Pack("docs_a.jsonl", "shards_a", "a");
  Pack("docs_b.jsonl", "shards_b", "b");
  ASSERT_EQ(Train("ckpt", 2).code, kExitOk);
  const auto dup = Steel({"append", "--checkpoint", P("ckpt"), "--shards", P("shards_a")});
  EXPECT_EQ(dup.code, kExitDuplicateData);
  EXPECT_NE(dup.err.find("already registered"), std::string::npos) << dup.err;

  const auto ok = Steel({"append", "--checkpoint", P("ckpt"), "--shards", P("shards_b")});
  ASSERT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("appended"), std::string::npos);
  const auto again = Steel({"append", "--checkpoint", P("ckpt"), "--shards", P("shards_b")});
  EXPECT_EQ(again.code, kExitDuplicateData);
  EXPECT_EQ(Steel({"resume", "--checkpoint", P("ckpt"), "--steps", "2"}).code, kExitOk);
}

TEST_F(CliFixture, CorruptCheckpointExitsFive) {
  Pack("docs_a.jsonl", "shards_a", "a");
  ASSERT_EQ(Train("ckpt", 2).code, kExitOk);
  const auto bundle = train::ResolveCheckpoint(P("ckpt"));
  std::string bytes = ReadFile(bundle / "params.bin");
  bytes[bytes.size() / 2] ^= 0x10;
  WriteFile(bundle / "params.bin", bytes);
  const auto r = Steel({"resume", "--checkpoint", P("ckpt"), "--steps", "1"});
  EXPECT_EQ(r.code, kExitCorruptCheckpoint);
  EXPECT_NE(r.err.find("params.bin"), std::string::npos) << r.err;
  EXPECT_EQ(Steel({"resume", "--checkpoint", P("nowhere"), "--steps", "1"}).code, kExitCorruptCheckpoint);
}

TEST_F(CliFixture, MalformedInputExitsThree) {
  WriteFile(dir_ / "bad.jsonl", "{\"text\": \"ok\"}\n{not json\n");
  const auto r = Steel({"pack", "--in", P("bad.jsonl"), "--out-dir", P("out")});
  EXPECT_EQ(r.code, kExitMalformedInput);
  EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;
  WriteFile(dir_ / "ids.jsonl", "{\"tokens\": [1, -1]}\n");
  EXPECT_EQ(Steel({"pack", "--in", P("ids.jsonl"), "--out-dir", P("out2"), "--block-size", "4"}).code,
            kExitMalformedInput);
}

TEST_F(CliFixture, BadConfigExitsTwo) {
  WriteFile(dir_ / "bad_train.json", R"({"warmup_steps": 5, "total_steps": 2})");
  Pack("docs_a.jsonl", "shards_a", "a");
  EXPECT_EQ(Steel({"train", "--train", P("bad_train.json"), "--data", P("shards_a"), "--steps", "1"}).code,
            kExitConfig);
  WriteFile(dir_ / "typo.json", R"({"warmup_step": 5})");
  EXPECT_EQ(Steel({"train", "--train", P("typo.json"), "--data", P("shards_a"), "--steps", "1"}).code,
            kExitConfig);
  EXPECT_EQ(Steel({"train", "--train", P("train.json"), "--data", P("missing"), "--steps", "1"}).code,
            kExitConfig);
}

TEST_F(CliFixture, CurateFixtureAndReport) {
  const std::string fixture = STEEL_FIXTURE_DIR "/curation_50.jsonl";
  const auto r = Steel({"curate", "--config", STEEL_SOURCE_DIR "/configs/text_pipeline.json", "--in", fixture,
                      "--out", P("kept.jsonl"), "--report", P("report.json"), "--jobs", "4"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  int expected = 0;
  {
    std::ifstream in(fixture);
    std::string line;
    while (std::getline(in, line)) expected += json::parse(line)["meta"]["expect"] == "keep";
  }
  std::ifstream kept(P("kept.jsonl"));
  int n = 0;
  for (std::string line; std::getline(kept, line);) ++n;
  EXPECT_EQ(n, expected);
  const json report = json::parse(ReadFile(P("report.json")));
  EXPECT_EQ(report.at("output_docs"), expected);
  EXPECT_EQ(report.at("operators").size(), 21u);
}

TEST_F(CliFixture, CurateConfigErrorWritesNothing) {
  WriteFile(dir_ / "pipe.json", R"([{"name": "text_length_filter", "params": {"min_len": "x"}}])");
  const auto r = Steel({"curate", "--config", P("pipe.json"), "--in", STEEL_FIXTURE_DIR "/curation_50.jsonl",
                      "--out", P("kept.jsonl")});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_FALSE(fs::exists(P("kept.jsonl")));
}

TEST_F(CliFixture, SftAndDpoRun) {
  WriteFile(dir_ / "sft.jsonl", R"({"prompt": "hi", "response": "yo"})" "\n");
  WriteFile(dir_ / "pref.jsonl", R"({"prompt": "hi", "chosen": "yo", "rejected": "no"})" "\n");
  const auto s = Steel({"sft", "--model", P("model.json"), "--train", P("train.json"), "--data", P("sft.jsonl"),
                      "--steps", "2", "--out-dir", P("tuned")});
  ASSERT_EQ(s.code, kExitOk) << s.err;
  EXPECT_TRUE(fs::exists(P("tuned/params.bin")));
  const auto d = Steel({"dpo", "--model", P("model.json"), "--train", P("train.json"), "--data", P("pref.jsonl"),
                      "--steps", "2"});
  EXPECT_EQ(d.code, kExitOk) << d.err;
  EXPECT_NEAR(json::parse(d.out.substr(0, d.out.find('\n'))).at("loss").get<double>(), std::log(2.0), 1e-12);
}

TEST(Cli, GradcheckPassesAndFailsOnTolerance) {
  const auto ok = Steel({"gradcheck"});
  EXPECT_EQ(ok.code, kExitOk) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("silu"), std::string::npos);
  EXPECT_EQ(Steel({"gradcheck", "--tolerance", "1e-30"}).code, kExitFailure);
}

TEST(Cli, BrokenSiluBuildFailsGradcheck) {
  const auto r = RunBinary(std::string(STEEL_BROKEN_SILU_BIN) + " gradcheck");
  EXPECT_EQ(r.code, kExitFailure) << r.out;
  EXPECT_NE(r.out.find("silu"), std::string::npos);
  EXPECT_NE(r.out.find("gradcheck failed"), std::string::npos) << r.out;
}

TEST(Cli, InstalledBinaryExitCodes) {
  EXPECT_EQ(RunBinary(std::string(STEEL_BIN) + " --version").code, kExitOk);
  EXPECT_EQ(RunBinary(std::string(STEEL_BIN) + " --bogus").code, kExitConfig);
}

TEST(Cli, BenchReportsThroughput) {
  const auto r = Steel({"bench", "--steps", "2", "--micro-batch", "1", "--seq-len", "8"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("tokens_per_s"), std::string::npos);
  EXPECT_NE(r.out.find("peak_memory_estimate_mb"), std::string::npos);
  EXPECT_NE(r.out.find("\n2\t"), std::string::npos);
  EXPECT_EQ(Steel({"bench", "--seq-len", "100000"}).code, kExitConfig);
}

TEST(Configs, ShippedFullSizeConfigsMatchDefaults) {
  const auto model = json::parse(ReadFile(STEEL_SOURCE_DIR "/configs/published_model.json")).get<model::ModelConfig>();
  EXPECT_EQ(model, model::PublishedConfig());
  const auto pretrain = json::parse(ReadFile(STEEL_SOURCE_DIR "/configs/pretrain.json")).get<train::TrainConfig>();
  EXPECT_EQ(pretrain, train::TrainConfig{});
}

}  // namespace
}  // namespace steel::cli
