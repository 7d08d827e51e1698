#include "steel/train/checkpoint.h"

#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "steel/data/binary_io.h"
#include "steel/data/iterator.h"
#include "steel/data/md5.h"
#include "steel/numerics/errors.h"

namespace steel::train {

namespace fs = std::filesystem;
using data::ByteReader;
using data::ByteWriter;

namespace {

constexpr char kParamsMagic[4] = {'S', 'L', 'P', 'M'};
constexpr char kOptimizerMagic[4] = {'S', 'L', 'O', 'P'};
constexpr const char* kParts[] = {"params.bin", "optimizer.bin", "iterator.slit", "config.json"};

void WriteMagic(ByteWriter& w, const char (&magic)[4]) {
  w.Raw(std::span(reinterpret_cast<const std::uint8_t*>(magic), 4));
}

void ExpectMagic(ByteReader& r, const char (&magic)[4], const char* what) {
  auto got = r.Raw(4);
  if (!std::equal(got.begin(), got.end(), magic)) r.FailAt(std::string(what) + ": bad magic", 0);
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    r.FailAt(std::string(what) + ": unknown version " + std::to_string(version), 4);
  }
}

std::vector<std::uint8_t> Bytes(const std::string& s) { return {s.begin(), s.end()}; }

}  // namespace

std::vector<std::uint8_t> EncodeParams(const model::LMParams& params) {
  const auto named = model::NamedParameters(params);
  ByteWriter w;
  WriteMagic(w, kParamsMagic);
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(named.size()));
  for (const auto& p : named) {
    w.Str(p.name);
    w.U32(static_cast<std::uint32_t>(p.value.rank()));
    for (std::size_t e : p.value.shape()) w.U64(e);
    for (double v : p.value.data()) w.F64(v);
  }
  return w.Take();
}

model::LMParams DecodeParams(std::span<const std::uint8_t> bytes,
                             const model::ModelConfig& config) {
  model::LMParams params = model::InitParams(config, 0);
  auto named = model::NamedParameters(params);
  ByteReader r(bytes);
  ExpectMagic(r, kParamsMagic, "params");
  const std::uint32_t count = r.U32();
  if (count != named.size()) {
    r.Fail("params: file holds " + std::to_string(count) + " tensors, config expects " +
           std::to_string(named.size()));
  }
  for (auto& p : named) {
    const std::string name = r.Str();
    if (name != p.name) r.Fail("params: expected tensor " + p.name + ", found " + name);
    const std::uint32_t rank = r.U32();
    Shape shape(rank);
    for (auto& e : shape) e = r.U64();
    if (shape != p.value.shape()) {
      r.Fail("params: " + name + " has shape " + ShapeToString(shape) + ", expected " +
             ShapeToString(p.value.shape()));
    }
    for (double& v : p.value.mutable_data()) v = r.F64();
  }
  if (!r.done()) r.Fail("params: trailing bytes");
  return params;
}

std::vector<std::uint8_t> EncodeOptimizer(const OptimizerState& state,
                                          const std::vector<model::NamedParam>& params) {
  ByteWriter w;
  WriteMagic(w, kOptimizerMagic);
  w.U32(kCheckpointVersion);
  w.U64(state.step);
  w.U32(static_cast<std::uint32_t>(state.moments.size()));
  for (std::size_t i = 0; i < state.moments.size(); ++i) {
    w.Str(params.at(i).name);
    w.U64(state.moments[i].first.size());
    for (double v : state.moments[i].first) w.F64(v);
    for (double v : state.moments[i].second) w.F64(v);
  }
  return w.Take();
}

OptimizerState DecodeOptimizer(std::span<const std::uint8_t> bytes,
                               const std::vector<model::NamedParam>& params) {
  ByteReader r(bytes);
  ExpectMagic(r, kOptimizerMagic, "optimizer");
  OptimizerState state;
  state.step = r.U64();
  const std::uint32_t count = r.U32();
  if (count != 0 && count != params.size()) {
    r.Fail("optimizer: " + std::to_string(count) + " moment sets for " +
           std::to_string(params.size()) + " parameters");
  }
  state.moments.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.Str();
    if (name != params[i].name) r.Fail("optimizer: expected " + params[i].name + ", found " + name);
    const std::uint64_t n = r.U64();
    if (n != params[i].value.size()) r.Fail("optimizer: wrong moment length for " + name);
    state.moments[i].first.resize(n);
    state.moments[i].second.resize(n);
    for (double& v : state.moments[i].first) v = r.F64();
    for (double& v : state.moments[i].second) v = r.F64();
  }
  if (!r.done()) r.Fail("optimizer: trailing bytes");
  return state;
}

void WriteCheckpoint(const fs::path& dir, const CheckpointBundle& bundle) {
  const auto named = model::NamedParameters(bundle.params);
  std::map<std::string, std::vector<std::uint8_t>> parts;
  parts["params.bin"] = EncodeParams(bundle.params);
  parts["optimizer.bin"] = EncodeOptimizer(bundle.optimizer, named);
  parts["iterator.slit"] = bundle.iterator_snapshot;
  nlohmann::json config = {
      {"model", bundle.model_config}, {"train", bundle.train_config}, {"step", bundle.step}};
  parts["config.json"] = Bytes(config.dump(2) + "\n");

  nlohmann::json manifest = {{"format_version", kCheckpointVersion}, {"step", bundle.step}};
  for (const auto& [name, bytes] : parts) manifest["files"][name] = data::ToHex(data::Md5(bytes));
  parts["manifest.json"] = Bytes(manifest.dump(2) + "\n");

  const fs::path tmp = dir.string() + ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  for (const auto& [name, bytes] : parts) {
    std::ofstream out(tmp / name, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("checkpoint: failed writing " + (tmp / name).string());
  }
  if (fs::exists(dir)) {
    const fs::path old = dir.string() + ".old";
    fs::remove_all(old);
    fs::rename(dir, old);
    fs::rename(tmp, dir);
    fs::remove_all(old);
  } else {
    fs::rename(tmp, dir);
  }
}

CheckpointBundle ReadCheckpoint(const fs::path& dir) {
  auto read = [&dir](const std::string& name) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw CorruptCheckpointError("checkpoint: missing " + p.string());
    return data::ReadFileBytes(p);
  };
  try {
    const auto manifest_bytes = read("manifest.json");
    const auto manifest = nlohmann::json::parse(manifest_bytes);
    if (manifest.at("format_version").get<std::uint32_t>() != kCheckpointVersion) {
      throw CorruptCheckpointError("checkpoint: unsupported format version");
    }
    std::map<std::string, std::vector<std::uint8_t>> parts;
    for (const char* name : kParts) {
      parts[name] = read(name);
      const std::string expected = manifest.at("files").at(name).get<std::string>();
      if (data::ToHex(data::Md5(parts[name])) != expected) {
        throw CorruptCheckpointError("checkpoint: " + (dir / name).string() +
                                     " does not match its manifest digest");
      }
    }
    const auto config = nlohmann::json::parse(parts["config.json"]);
    CheckpointBundle bundle;
    bundle.model_config = config.at("model").get<model::ModelConfig>();
    bundle.train_config = config.at("train").get<TrainConfig>();
    bundle.step = config.at("step").get<std::uint64_t>();
    bundle.params = DecodeParams(parts["params.bin"], bundle.model_config);
    bundle.optimizer =
        DecodeOptimizer(parts["optimizer.bin"], model::NamedParameters(bundle.params));
    bundle.iterator_snapshot = std::move(parts["iterator.slit"]);
    data::DeserializeState(bundle.iterator_snapshot);
    return bundle;
  } catch (const CorruptCheckpointError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError("checkpoint " + dir.string() + ": bad JSON: " + e.what());
  } catch (const Error& e) {
    throw CorruptCheckpointError("checkpoint " + dir.string() + ": " + e.what());
  }
}

fs::path ResolveCheckpoint(const fs::path& path) {
  if (fs::exists(path / "manifest.json")) return path;
  const fs::path latest = path / "latest";
  if (fs::exists(latest)) {
    std::ifstream in(latest);
    std::string name;
    std::getline(in, name);
    if (!name.empty() && fs::exists(path / name / "manifest.json")) return path / name;
  }
  throw CorruptCheckpointError("no checkpoint bundle at " + path.string());
}

}  // namespace steel::train
