#include "cli.h"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "steel/curation/pipeline.h"
#include "steel/data/binary_io.h"
#include "steel/data/iterator.h"
#include "steel/data/shard.h"
#include "steel/data/tokenizer.h"
#include "steel/model/grad_suite.h"
#include "steel/model/layers.h"
#include "steel/model/params.h"
#include "steel/numerics/errors.h"
#include "steel/numerics/ops.h"
#include "steel/numerics/rng.h"
#include "steel/train/checkpoint.h"
#include "steel/train/losses.h"
#include "steel/train/trainer.h"

namespace steel::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + " is not valid JSON: " + e.what());
  }
}

model::ModelConfig LoadModelConfig(const std::string& path) {
  if (path.empty()) {
    model::ModelConfig c = model::TinyConfig();
    c.vocab_size = data::ByteTokenizer::kVocabSize;
    return c;
  }
  model::ModelConfig c;
  try {
    c = ReadJsonFile(path).get<model::ModelConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.Validate();
  return c;
}

train::TrainConfig LoadTrainConfig(const std::string& path) {
  train::TrainConfig c;
  try {
    c = ReadJsonFile(path).get<train::TrainConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.Validate();
  return c;
}

// Calls fn(line_number, object) for each non-blank line; malformed JSON is
// a DataError naming the line.
void ForEachJsonLine(const std::string& path, const std::function<void(std::size_t, const json&)>& fn) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed JSON line");
    }
    try {
      fn(lineno, j);
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string StringField(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw DataError(std::string("missing string field '") + key + "'");
  }
  return j[key].get<std::string>();
}

void WriteText(const std::string& path, const std::string& text) {
  data::WriteFileAtomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<fs::path> ExpandShards(const std::vector<std::string>& inputs) {
  std::vector<fs::path> shards;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".bin") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      shards.insert(shards.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      shards.emplace_back(in);
    } else {
      throw ConfigError("no such shard file or directory: " + in);
    }
  }
  if (shards.empty()) throw ConfigError("no shard files given");
  return shards;
}

json MetricsJson(const train::StepMetrics& m) {
  return {{"step", m.step}, {"loss", m.loss}, {"lr", m.lr}, {"grad_norm", m.grad_norm}, {"tokens", m.tokens}};
}

// Prints each metrics record as one JSON line, optionally mirrored to a file.
class MetricsLog {
 public:
  MetricsLog(std::ostream& out, const std::string& path) : out_(out) {
    if (!path.empty()) {
      file_.open(path, std::ios::app);
      if (!file_) throw ConfigError("cannot open log file " + path);
    }
  }
  void operator()(const train::StepMetrics& m) {
    const std::string line = MetricsJson(m).dump();
    out_ << line << '\n';
    if (file_.is_open()) file_ << line << '\n';
  }

 private:
  std::ostream& out_;
  std::ofstream file_;
};

fs::path CheckpointRootOf(const fs::path& path) {
  return fs::exists(path / "manifest.json") ? path.parent_path() : path;
}

model::LMParams InitialParams(const model::ModelConfig& config, const std::string& init,
                              std::uint64_t seed) {
  if (init.empty()) return model::InitParams(config, seed);
  train::CheckpointBundle b = train::ReadCheckpoint(train::ResolveCheckpoint(init));
  if (!(b.model_config == config)) {
    throw ConfigError("checkpoint " + init + " was trained with a different model config");
  }
  return b.params;
}

void SaveParams(const fs::path& dir, const model::LMParams& params) {
  fs::create_directories(dir);
  const auto bytes = train::EncodeParams(params);
  data::WriteFileAtomic(dir / "params.bin", bytes);
  WriteText((dir / "model.json").string(), json(params.config).dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct CurateArgs {
  std::string config;
  std::string in;
  std::string out;
  std::string report;
  std::size_t jobs = 1;
};

int Curate(const CurateArgs& a, std::ostream& out) {
  const auto specs = curation::LoadPipelineConfig(a.config);
  for (const auto& s : specs) curation::MakeOperator(s);  // config errors before any input is read

  std::vector<curation::Document> docs;
  ForEachJsonLine(a.in, [&](std::size_t, const json& j) { docs.push_back(j.get<curation::Document>()); });
  auto result = curation::RunPipeline(std::move(docs), specs, a.jobs);

  std::string kept;
  for (const auto& d : result.kept) kept += json(d).dump() + "\n";
  WriteText(a.out, kept);
  if (!a.report.empty()) WriteText(a.report, json(result.report).dump(2) + "\n");
  out << "kept " << result.report.output_docs << " of " << result.report.input_docs << " documents\n";
  return kExitOk;
}

struct PackArgs {
  std::string in;
  std::string out_dir;
  std::uint32_t block_size = 2049;
  std::uint64_t blocks_per_shard = 1024;
  std::int64_t separator_id = 1;
  std::uint32_t pad_id = 0;
  std::string prefix = "shard";
};

int Pack(const PackArgs& a, std::ostream& out) {
  if (a.block_size == 0) throw ConfigError("--block-size must be positive");
  if (a.blocks_per_shard == 0) throw ConfigError("--blocks-per-shard must be positive");
  data::PackOptions opts;
  opts.block_size = a.block_size;
  opts.blocks_per_shard = a.blocks_per_shard;
  opts.separator_id = a.separator_id < 0 ? std::nullopt : std::optional<std::uint32_t>(a.separator_id);
  opts.pad_id = a.pad_id;
  opts.file_prefix = a.prefix;
  fs::create_directories(a.out_dir);
  data::ShardWriter writer(opts, a.out_dir);
  const data::ByteTokenizer tokenizer;
  ForEachJsonLine(a.in, [&](std::size_t, const json& j) {
    std::vector<std::int64_t> ids;
    if (j.is_object() && j.contains("tokens")) {
      if (!j["tokens"].is_array()) throw DataError("'tokens' must be an array");
      for (const auto& t : j["tokens"]) {
        if (!t.is_number_integer()) throw DataError("token ids must be integers");
        ids.push_back(t.get<std::int64_t>());
      }
    } else {
      for (auto t : tokenizer.Encode(StringField(j, "text"))) ids.push_back(t);
    }
    writer.AddSequence(ids);
  });
  const auto shards = writer.Finish();
  for (const auto& p : shards) out << p.string() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string model;
  std::string train;
  std::vector<std::string> data;
  std::uint64_t steps = 0;
  std::optional<std::uint64_t> seed;
  std::string checkpoint_dir;
  std::string log;
  bool no_wrap = false;
};

int Train(const TrainArgs& a, std::ostream& out) {
  const auto model_cfg = LoadModelConfig(a.model);
  auto train_cfg = LoadTrainConfig(a.train);
  if (a.seed) train_cfg.seed = *a.seed;
  auto iter = data::PackedDatasetIterator::Open(ExpandShards(a.data), train_cfg.seed, !a.no_wrap);
  train::Trainer trainer(model::InitParams(model_cfg, train_cfg.seed), train_cfg, std::move(iter));
  MetricsLog log(out, a.log);
  std::optional<fs::path> root;
  if (!a.checkpoint_dir.empty()) root = a.checkpoint_dir;
  trainer.Run(a.steps, std::ref(log), root);
  return kExitOk;
}

struct ResumeArgs {
  std::string checkpoint;
  std::uint64_t steps = 0;
  std::string checkpoint_dir;
  std::string log;
};

int Resume(const ResumeArgs& a, std::ostream& out) {
  auto trainer = train::Trainer::Resume(a.checkpoint);
  MetricsLog log(out, a.log);
  const fs::path root = a.checkpoint_dir.empty() ? CheckpointRootOf(a.checkpoint) : fs::path(a.checkpoint_dir);
  trainer.Run(a.steps, std::ref(log), root);
  return kExitOk;
}

struct AppendArgs {
  std::string checkpoint;
  std::vector<std::string> shards;
  std::string out_dir;
};

int Append(const AppendArgs& a, std::ostream& out) {
  auto trainer = train::Trainer::Resume(a.checkpoint);
  const auto shards = ExpandShards(a.shards);
  const std::uint64_t before = trainer.data().total_blocks();
  trainer.mutable_data().Append(shards);
  const fs::path root = a.out_dir.empty() ? CheckpointRootOf(a.checkpoint) : fs::path(a.out_dir);
  const fs::path written = trainer.SaveCheckpoint(root);
  out << "appended " << (trainer.data().total_blocks() - before) << " blocks; checkpoint "
      << written.string() << '\n';
  return kExitOk;
}

struct TuneArgs {
  std::string model;
  std::string train;
  std::string data;
  std::uint64_t steps = 0;
  std::string init;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

int Sft(const TuneArgs& a, std::ostream& out) {
  const auto model_cfg = LoadModelConfig(a.model);
  auto cfg = LoadTrainConfig(a.train);
  if (a.seed) cfg.seed = *a.seed;
  const data::ByteTokenizer tokenizer;
  std::vector<train::SftExample> examples;
  ForEachJsonLine(a.data, [&](std::size_t, const json& j) {
    examples.push_back(train::RenderChat(tokenizer, StringField(j, "prompt"), StringField(j, "response")));
  });
  if (examples.empty()) throw DataError(a.data + ": no examples");
  auto params = InitialParams(model_cfg, a.init, cfg.seed);
  MetricsLog log(out, "");
  train::RunSft(params, examples, cfg, a.steps, std::ref(log));
  if (!a.out_dir.empty()) SaveParams(a.out_dir, params);
  return kExitOk;
}

int Dpo(const TuneArgs& a, std::ostream& out) {
  const auto model_cfg = LoadModelConfig(a.model);
  auto cfg = LoadTrainConfig(a.train);
  if (a.seed) cfg.seed = *a.seed;
  const data::ByteTokenizer tokenizer;
  std::vector<train::PreferencePair> pairs;
  ForEachJsonLine(a.data, [&](std::size_t, const json& j) {
    const std::string prompt = StringField(j, "prompt");
    pairs.push_back({train::RenderChat(tokenizer, prompt, StringField(j, "chosen")),
                     train::RenderChat(tokenizer, prompt, StringField(j, "rejected"))});
  });
  if (pairs.empty()) throw DataError(a.data + ": no preference pairs");
  auto policy = InitialParams(model_cfg, a.init, cfg.seed);
  const auto reference = model::CloneParams(policy, false);
  MetricsLog log(out, "");
  train::RunDpo(policy, reference, pairs, cfg, a.steps, std::ref(log));
  if (!a.out_dir.empty()) SaveParams(a.out_dir, policy);
  return kExitOk;
}

struct GradcheckArgs {
  std::string config;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

int Gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = LoadModelConfig(a.config);
  const auto results = model::RunGradientSuite(cfg, a.tolerance, a.seed);
  std::vector<std::string> failed;
  for (const auto& r : results) {
    char line[128];
    std::snprintf(line, sizeof line, "%-20s %.3e %s\n", r.component.c_str(), r.rel_error,
                  r.pass ? "ok" : "FAIL");
    out << line;
    if (!r.pass) failed.push_back(r.component);
  }
  if (failed.empty()) return kExitOk;
  err << "gradcheck failed (tolerance " << a.tolerance << "):";
  for (const auto& f : failed) err << ' ' << f;
  err << '\n';
  return kExitFailure;
}

struct BenchArgs {
  std::string config;
  std::uint64_t steps = 0;
  std::uint32_t micro_batch = 4;
  std::uint32_t seq_len = 64;
  std::uint64_t seed = 0;
};

int Bench(const BenchArgs& a, std::ostream& out) {
  const auto cfg = LoadModelConfig(a.config);
  if (a.micro_batch == 0) throw ConfigError("--micro-batch must be positive");
  if (a.seq_len == 0 || a.seq_len + 1 > cfg.max_seq_len) {
    throw ConfigError("--seq-len must be in [1, max_seq_len - 1]");
  }
  const std::uint64_t n_params = model::CountParameters(cfg);
  // Weights, gradients and two moment buffers in double precision, plus a
  // rough activation footprint per layer (projections, scores, expert slots).
  const double act = static_cast<double>(a.micro_batch) * cfg.layers *
                     (static_cast<double>(a.seq_len + 1) * (12.0 * cfg.hidden_size + cfg.vocab_size / cfg.layers) +
                      static_cast<double>(cfg.heads) * (a.seq_len + 1) * (a.seq_len + 1));
  const double mem_mb = (4.0 * n_params + act) * 8.0 / (1024.0 * 1024.0);
  out << "# params " << n_params << "  micro_batch " << a.micro_batch << "  seq_len " << a.seq_len
      << "  peak_memory_estimate_mb " << static_cast<long long>(mem_mb) << '\n';
  out << "step\tloss\ttokens\tseconds\ttokens_per_s\n";
  if (a.steps == 0) return kExitOk;

  auto params = model::InitParams(cfg, a.seed);
  auto named = model::NamedParameters(params);
  train::TrainConfig tc;
  tc.warmup_steps = 1;
  tc.total_steps = a.steps + 1;
  tc.micro_batch = a.micro_batch;
  tc.grad_accum_steps = 1;
  tc.seq_len = a.seq_len;
  train::AdamW optimizer;
  CounterRng rng(a.seed, 1);
  for (std::uint64_t step = 1; step <= a.steps; ++step) {
    const auto start = std::chrono::steady_clock::now();
    train::ZeroGrads(named);
    double loss_sum = 0.0;
    for (std::uint32_t b = 0; b < a.micro_batch; ++b) {
      std::vector<std::uint32_t> tokens(a.seq_len + 1);
      for (auto& t : tokens) t = static_cast<std::uint32_t>(rng.NextBounded(cfg.vocab_size));
      const Value loss = train::CrossEntropyShifted(model::LmForward(tokens, params), tokens);
      Backward(Scale(loss, 1.0 / a.micro_batch));
      loss_sum += loss.item();
    }
    train::ApplyOptimizerStep(named, optimizer, tc);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::uint64_t tokens = static_cast<std::uint64_t>(a.micro_batch) * a.seq_len;
    char line[160];
    std::snprintf(line, sizeof line, "%llu\t%.17g\t%llu\t%.4f\t%.1f\n", static_cast<unsigned long long>(step),
                  loss_sum / a.micro_batch, static_cast<unsigned long long>(tokens), secs, tokens / secs);
    out << line;
  }
  return kExitOk;
}

std::string VersionText() {
  std::ostringstream s;
  s << "steel 0.1.0\n"
    << "shard format " << std::string(data::kShardMagic, 4) << " v" << data::kShardVersion << '\n'
    << "snapshot format " << std::string(data::kSnapshotMagic, 4) << " v" << data::kSnapshotVersion << '\n'
    << "checkpoint format v" << train::kCheckpointVersion << '\n';
  return s.str();
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steel-LLM desk-scale toolkit", "steel"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print tool and file-format versions");

  CurateArgs curate;
  auto* c = app.add_subcommand("curate", "Run a curation pipeline over JSONL documents");
  c->add_option("--config", curate.config, "Pipeline config (JSON array of {name, params})")->required();
  c->add_option("--in", curate.in, "Input documents, one JSON object per line")->required();
  c->add_option("--out", curate.out, "Surviving documents")->required();
  c->add_option("--report", curate.report, "Report JSON");
  c->add_option("--jobs", curate.jobs, "Worker threads")->check(CLI::PositiveNumber);

  PackArgs pack;
  auto* p = app.add_subcommand("pack", "Tokenize and pack JSONL into binary shards");
  p->add_option("--in", pack.in, "JSONL with {\"text\": ...} or {\"tokens\": [...]} per line")->required();
  p->add_option("--out-dir", pack.out_dir, "Shard directory")->required();
  p->add_option("--block-size", pack.block_size, "Tokens per block (seq_len + 1)");
  p->add_option("--blocks-per-shard", pack.blocks_per_shard, "Blocks per shard file");
  p->add_option("--separator-id", pack.separator_id, "Document separator id, -1 for none");
  p->add_option("--pad-id", pack.pad_id, "Padding id for the tail block");
  p->add_option("--prefix", pack.prefix, "Shard file prefix");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Pretrain from packed shards");
  t->add_option("--model", tr.model, "Model config JSON (default: tiny)");
  t->add_option("--train", tr.train, "Train config JSON")->required();
  t->add_option("--data", tr.data, "Shard files or directories")->required();
  t->add_option("--steps", tr.steps, "Optimizer steps to run")->required();
  t->add_option("--seed", tr.seed, "Overrides the train config seed");
  t->add_option("--checkpoint-dir", tr.checkpoint_dir, "Checkpoint root");
  t->add_option("--log", tr.log, "Append metrics JSON lines to this file");
  t->add_flag("--no-wrap", tr.no_wrap, "Stop at the end of the first epoch");

  ResumeArgs rs;
  auto* r = app.add_subcommand("resume", "Continue training from a checkpoint");
  r->add_option("--checkpoint", rs.checkpoint, "Bundle directory or checkpoint root")->required();
  r->add_option("--steps", rs.steps, "Further optimizer steps")->required();
  r->add_option("--checkpoint-dir", rs.checkpoint_dir, "Where to write new checkpoints");
  r->add_option("--log", rs.log, "Append metrics JSON lines to this file");

  AppendArgs ap;
  auto* a = app.add_subcommand("append", "Add shards to a run and reshuffle the untrained data");
  a->add_option("--checkpoint", ap.checkpoint, "Bundle directory or checkpoint root")->required();
  a->add_option("--shards", ap.shards, "New shard files or directories")->required();
  a->add_option("--out-dir", ap.out_dir, "Checkpoint root for the updated bundle");

  TuneArgs sft;
  auto* s = app.add_subcommand("sft", "Supervised fine-tuning on {prompt, response} JSONL");
  TuneArgs dpo;
  auto* d = app.add_subcommand("dpo", "Preference optimization on {prompt, chosen, rejected} JSONL");
  for (auto [cmd, args] : {std::pair{s, &sft}, std::pair{d, &dpo}}) {
    cmd->add_option("--model", args->model, "Model config JSON (default: tiny)");
    cmd->add_option("--train", args->train, "Train config JSON")->required();
    cmd->add_option("--data", args->data, "Examples JSONL")->required();
    cmd->add_option("--steps", args->steps, "Optimizer steps")->required();
    cmd->add_option("--init", args->init, "Start from this checkpoint's parameters");
    cmd->add_option("--out-dir", args->out_dir, "Write the tuned parameters here");
    cmd->add_option("--seed", args->seed, "Overrides the train config seed");
  }

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of every gradient rule");
  g->add_option("--config", gc.config, "Model config JSON (default: tiny)");
  g->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  g->add_option("--seed", gc.seed, "Seed for the random test tensors");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Report training throughput (informational)");
  b->add_option("--config", bn.config, "Model config JSON (default: tiny)");
  b->add_option("--steps", bn.steps, "Timed steps");
  b->add_option("--micro-batch", bn.micro_batch, "Sequences per step");
  b->add_option("--seq-len", bn.seq_len, "Tokens per sequence");
  b->add_option("--seed", bn.seed, "Seed for weights and tokens");

  std::vector<std::string> argv(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (version) {
    out << VersionText();
    return kExitOk;
  }
  try {
    if (c->parsed()) return Curate(curate, out);
    if (p->parsed()) return Pack(pack, out);
    if (t->parsed()) return Train(tr, out);
    if (r->parsed()) return Resume(rs, out);
    if (a->parsed()) return Append(ap, out);
    if (s->parsed()) return Sft(sft, out);
    if (d->parsed()) return Dpo(dpo, out);
    if (g->parsed()) return Gradcheck(gc, out, err);
    if (b->parsed()) return Bench(bn, out);
    out << app.help();
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DuplicateDataError& e) {
    err << "duplicate data: " << e.what() << "\nalready registered as: " << e.registered_path() << '\n';
    return kExitDuplicateData;
  } catch (const CorruptCheckpointError& e) {
    err << "corrupt checkpoint: " << e.what() << '\n';
    return kExitCorruptCheckpoint;
  } catch (const RestoreError& e) {
    err << "corrupt checkpoint: " << e.what() << '\n';
    return kExitCorruptCheckpoint;
  } catch (const DataError& e) {
    err << "malformed input: " << e.what() << '\n';
    return kExitMalformedInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace steel::cli
