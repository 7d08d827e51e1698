#include "steel/curation/pipeline.h"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "steel/numerics/errors.h"

namespace steel::curation {
namespace {

// Runs fn(k) for k in [0, n) on up to `workers` threads. The first
// exception (lowest k) is rethrown after all threads finish.
template <typename Fn>
void ParallelFor(std::size_t n, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (k < error_index) {
            error_index = k;
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

bool PipelineReport::SameCounts(const PipelineReport& other) const {
  if (input_docs != other.input_docs || output_docs != other.output_docs ||
      operators.size() != other.operators.size() || drop_reasons.size() != other.drop_reasons.size()) {
    return false;
  }
  for (std::size_t k = 0; k < operators.size(); ++k) {
    const auto& a = operators[k];
    const auto& b = other.operators[k];
    if (a.name != b.name || a.seen != b.seen || a.modified != b.modified || a.dropped != b.dropped) {
      return false;
    }
  }
  for (const auto& [id, r] : drop_reasons) {
    auto it = other.drop_reasons.find(id);
    if (it == other.drop_reasons.end() || it->second.op != r.op ||
        it->second.duplicate_of != r.duplicate_of) {
      return false;
    }
  }
  return true;
}

void to_json(nlohmann::json& j, const PipelineReport& r) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : r.operators) {
    ops.push_back({{"name", op.name},
                   {"kind", ToString(op.kind)},
                   {"seen", op.seen},
                   {"modified", op.modified},
                   {"dropped", op.dropped},
                   {"wall_time_ms", op.wall_time_ms}});
  }
  nlohmann::json reasons = nlohmann::json::object();
  for (const auto& [id, d] : r.drop_reasons) {
    if (d.duplicate_of.empty()) {
      reasons[id] = {{"operator", d.op}, {"statistic", d.statistic}, {"min", d.min}, {"max", d.max}};
    } else {
      reasons[id] = {{"operator", d.op}, {"duplicate_of", d.duplicate_of}, {"hamming", d.hamming}};
    }
  }
  j = {{"input_docs", r.input_docs},
       {"output_docs", r.output_docs},
       {"operators", ops},
       {"drop_reasons", reasons}};
}

PipelineResult RunPipeline(std::vector<Document> docs, const std::vector<OperatorSpec>& specs,
                           std::size_t parallelism) {
  std::vector<std::unique_ptr<Operator>> ops;
  ops.reserve(specs.size());
  for (const auto& spec : specs) ops.push_back(MakeOperator(spec));

  std::unordered_set<std::string> ids;
  for (const auto& d : docs) {
    if (!ids.insert(d.id).second) throw DataError("duplicate document id: '" + d.id + "'");
  }

  PipelineResult result;
  auto& report = result.report;
  report.input_docs = docs.size();
  std::vector<std::size_t> alive(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) alive[i] = i;

  for (const auto& op : ops) {
    const auto start = std::chrono::steady_clock::now();
    OperatorReport rep;
    rep.name = op->name();
    rep.kind = op->kind();
    rep.seen = alive.size();
    std::vector<std::size_t> survivors;

    if (const auto* mapper = dynamic_cast<const MapperOp*>(op.get())) {
      std::vector<char> changed(alive.size(), 0);
      ParallelFor(alive.size(), parallelism, [&](std::size_t k) {
        Document& d = docs[alive[k]];
        std::string text = mapper->Map(d.text);
        if (text != d.text) {
          d.text = std::move(text);
          changed[k] = 1;
        }
      });
      for (char c : changed) rep.modified += c;
      survivors = alive;
    } else if (const auto* filter = dynamic_cast<const FilterOp*>(op.get())) {
      std::vector<FilterVerdict> verdicts(alive.size());
      ParallelFor(alive.size(), parallelism,
                  [&](std::size_t k) { verdicts[k] = filter->Evaluate(docs[alive[k]]); });
      for (std::size_t k = 0; k < alive.size(); ++k) {
        if (verdicts[k].keep) {
          survivors.push_back(alive[k]);
        } else {
          report.drop_reasons[docs[alive[k]].id] =
              DropReason{op->name(), verdicts[k].statistic, verdicts[k].min, verdicts[k].max, "", 0};
        }
      }
    } else {
      const auto* dedup = dynamic_cast<const DeduplicatorOp*>(op.get());
      std::vector<std::uint64_t> fps(alive.size());
      ParallelFor(alive.size(), parallelism,
                  [&](std::size_t k) { fps[k] = dedup->Fingerprint(docs[alive[k]]); });
      const DedupResult dr = SimhashDedup(fps, dedup->options());
      for (std::size_t k = 0; k < alive.size(); ++k) {
        const std::size_t rep_k = dr.representative[k];
        if (rep_k == k) {
          survivors.push_back(alive[k]);
        } else {
          DropReason reason;
          reason.op = op->name();
          reason.duplicate_of = docs[alive[rep_k]].id;
          reason.hamming = HammingDistance(fps[k], fps[rep_k]);
          report.drop_reasons[docs[alive[k]].id] = std::move(reason);
        }
      }
    }

    rep.dropped = alive.size() - survivors.size();
    rep.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    report.operators.push_back(std::move(rep));
    alive = std::move(survivors);
  }

  result.kept.reserve(alive.size());
  for (std::size_t i : alive) result.kept.push_back(std::move(docs[i]));
  report.output_docs = result.kept.size();
  return result;
}

}  // namespace steel::curation
