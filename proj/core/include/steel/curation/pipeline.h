#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "steel/curation/document.h"
#include "steel/curation/operators.h"

namespace steel::curation {

struct OperatorReport {
  std::string name;
  OperatorKind kind = OperatorKind::kMapper;
  std::size_t seen = 0;
  std::size_t modified = 0;
  std::size_t dropped = 0;
  double wall_time_ms = 0.0;
};

struct DropReason {
  std::string op;
  double statistic = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::string duplicate_of;  // deduplicator only
  int hamming = 0;           // deduplicator only
};

struct PipelineReport {
  std::size_t input_docs = 0;
  std::size_t output_docs = 0;
  std::vector<OperatorReport> operators;
  std::map<std::string, DropReason> drop_reasons;  // by document id

  /// Same result ignoring wall times.
  bool SameCounts(const PipelineReport& other) const;
};

void to_json(nlohmann::json& j, const PipelineReport& r);

struct PipelineResult {
  std::vector<Document> kept;
  PipelineReport report;
};

/// Applies `specs` in order with up to `parallelism` worker threads. All
/// specs are validated before any document is touched; document ids must be
/// unique (DataError otherwise). Output order is input order.
PipelineResult RunPipeline(std::vector<Document> docs, const std::vector<OperatorSpec>& specs,
                           std::size_t parallelism = 1);

}  // namespace steel::curation
