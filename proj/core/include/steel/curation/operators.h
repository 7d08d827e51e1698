#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "steel/curation/document.h"
#include "steel/curation/perplexity.h"
#include "steel/curation/simhash.h"

namespace steel::curation {

enum class OperatorKind { kMapper, kFilter, kDeduplicator };

const char* ToString(OperatorKind kind);

struct OperatorSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  bool operator==(const OperatorSpec&) const = default;
};

void to_json(nlohmann::json& j, const OperatorSpec& s);
void from_json(const nlohmann::json& j, OperatorSpec& s);

struct FilterVerdict {
  bool keep = true;
  double statistic = 0.0;
  double min = 0.0;
  double max = 0.0;
};

class Operator {
 public:
  virtual ~Operator() = default;
  virtual OperatorKind kind() const = 0;
  const std::string& name() const { return name_; }
  /// Parameters after merging with the catalog defaults.
  const nlohmann::json& params() const { return params_; }

 protected:
  Operator(std::string name, nlohmann::json params)
      : name_(std::move(name)), params_(std::move(params)) {}

 private:
  std::string name_;
  nlohmann::json params_;
};

class MapperOp : public Operator {
 public:
  using Fn = std::function<std::string(std::string_view)>;
  MapperOp(std::string name, nlohmann::json params, Fn fn)
      : Operator(std::move(name), std::move(params)), fn_(std::move(fn)) {}
  OperatorKind kind() const override { return OperatorKind::kMapper; }
  std::string Map(std::string_view text) const { return fn_(text); }

 private:
  Fn fn_;
};

class FilterOp : public Operator {
 public:
  using StatFn = std::function<double(const Document&)>;
  FilterOp(std::string name, nlohmann::json params, StatFn stat, double min, double max)
      : Operator(std::move(name), std::move(params)), stat_(std::move(stat)), min_(min), max_(max) {}
  OperatorKind kind() const override { return OperatorKind::kFilter; }
  double Statistic(const Document& doc) const { return stat_(doc); }
  /// Keeps when min <= statistic <= max.
  FilterVerdict Evaluate(const Document& doc) const;

 private:
  StatFn stat_;
  double min_;
  double max_;
};

class DeduplicatorOp : public Operator {
 public:
  DeduplicatorOp(std::string name, nlohmann::json params, SimhashOptions opts)
      : Operator(std::move(name), std::move(params)), opts_(opts) {}
  OperatorKind kind() const override { return OperatorKind::kDeduplicator; }
  const SimhashOptions& options() const { return opts_; }
  std::uint64_t Fingerprint(const Document& doc) const {
    return SimhashFingerprint(doc.text, opts_.window_size, opts_.lowercase);
  }

 private:
  SimhashOptions opts_;
};

/// Registered operator names in catalog order.
std::vector<std::string> CatalogNames();
bool IsRegistered(const std::string& name);
OperatorKind KindOf(const std::string& name);
/// Default parameters for `name`; throws ConfigError when unknown.
nlohmann::json DefaultParams(const std::string& name);

/// Validates `spec` against the schema (known name, known parameter keys,
/// matching value types, sane ranges) and builds it. Throws ConfigError.
std::unique_ptr<Operator> MakeOperator(const OperatorSpec& spec);

/// Overrides the scorer used by perplexity filters built afterwards; nullptr
/// restores the bundled trigram model.
void SetPerplexityScorerForTesting(std::shared_ptr<const PerplexityScorer> scorer);

Document RunMapper(const Document& doc, const OperatorSpec& spec);
FilterVerdict RunFilter(const Document& doc, const OperatorSpec& spec);

/// The shipped text (21 operators) and code (13 operators) chains.
std::vector<OperatorSpec> DefaultTextPipeline();
std::vector<OperatorSpec> DefaultCodePipeline();

/// Parses a pipeline config: a JSON array of {name, params}.
std::vector<OperatorSpec> ParsePipelineConfig(const nlohmann::json& j);
std::vector<OperatorSpec> LoadPipelineConfig(const std::string& path);

}  // namespace steel::curation
