#include "steel/curation/operators.h"

#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "steel/curation/mappers.h"
#include "steel/curation/text_stats.h"
#include "steel/curation/unicode.h"
#include "steel/numerics/errors.h"

namespace steel::curation {
namespace {

using nlohmann::json;
using Factory = std::function<std::unique_ptr<Operator>(const std::string&, const json&)>;

struct Entry {
  OperatorKind kind;
  json defaults;
  Factory make;
};

std::mutex& ScorerMutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<const PerplexityScorer>& ScorerOverride() {
  static std::shared_ptr<const PerplexityScorer> scorer;
  return scorer;
}

std::string Sanitize(std::string_view text) { return EncodeUtf8(DecodeUtf8(text)); }

double Num(const json& p, const char* key) { return p.at(key).get<double>(); }

std::size_t Count(const std::string& op, const json& p, const char* key) {
  const double v = Num(p, key);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError(op + ": '" + key + "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::unique_ptr<Operator> Mapper(const std::string& name, const json& p, MapperOp::Fn fn) {
  return std::make_unique<MapperOp>(name, p, std::move(fn));
}

std::unique_ptr<Operator> RangeFilter(const std::string& name, const json& p, const char* lo_key,
                                      const char* hi_key, FilterOp::StatFn stat) {
  const double lo = lo_key ? Num(p, lo_key) : 0.0;
  const double hi = Num(p, hi_key);
  if (lo > hi) throw ConfigError(name + ": lower bound exceeds upper bound");
  return std::make_unique<FilterOp>(name, p, std::move(stat), lo, hi);
}

const std::vector<std::pair<std::string, Entry>>& Registry() {
  static const std::vector<std::pair<std::string, Entry>> registry = [] {
    std::vector<std::pair<std::string, Entry>> r;
    const auto add = [&](std::string name, OperatorKind kind, json defaults, Factory make) {
      r.emplace_back(std::move(name), Entry{kind, std::move(defaults), std::move(make)});
    };
    const auto mapper = OperatorKind::kMapper;
    const auto filter = OperatorKind::kFilter;

    add("chinese_convert_mapper", mapper, {{"mode", "t2s"}, {"table", ""}},
        [](const std::string& n, const json& p) {
          const auto mode = p.at("mode").get<std::string>();
          const auto path = p.at("table").get<std::string>();
          std::shared_ptr<const ConversionTable> table;
          if (!path.empty()) {
            table = std::make_shared<const ConversionTable>(ConversionTable::Load(path));
          } else if (mode == "t2s") {
            table = std::shared_ptr<const ConversionTable>(&ConversionTable::BuiltinT2S(),
                                                           [](const ConversionTable*) {});
          } else {
            throw ConfigError(n + ": mode '" + mode + "' needs a 'table' file");
          }
          return Mapper(n, p, [table](std::string_view t) { return table->Convert(t); });
        });
    add("clean_email_mapper", mapper, {{"repl", ""}}, [](const std::string& n, const json& p) {
      const auto repl = p.at("repl").get<std::string>();
      return Mapper(n, p, [repl](std::string_view t) { return CleanEmail(t, repl); });
    });
    add("clean_html_mapper", mapper, json::object(), [](const std::string& n, const json& p) {
      return Mapper(n, p, [](std::string_view t) { return Sanitize(CleanHtml(t)); });
    });
    add("clean_ip_mapper", mapper, {{"repl", ""}}, [](const std::string& n, const json& p) {
      const auto repl = p.at("repl").get<std::string>();
      return Mapper(n, p, [repl](std::string_view t) { return CleanIp(t, repl); });
    });
    add("clean_links_mapper", mapper, {{"repl", ""}}, [](const std::string& n, const json& p) {
      const auto repl = p.at("repl").get<std::string>();
      return Mapper(n, p, [repl](std::string_view t) { return CleanLinks(t, repl); });
    });
    add("clean_copyright_mapper", mapper, json::object(), [](const std::string& n, const json& p) {
      return Mapper(n, p, [](std::string_view t) { return Sanitize(CleanCopyright(t)); });
    });
    add("expand_macro_mapper", mapper, json::object(), [](const std::string& n, const json& p) {
      return Mapper(n, p, [](std::string_view t) { return Sanitize(ExpandMacro(t)); });
    });
    add("fix_unicode_mapper", mapper, {{"normalization", "NFC"}},
        [](const std::string& n, const json& p) {
          if (p.at("normalization") != "NFC") throw ConfigError(n + ": only NFC normalization is supported");
          return Mapper(n, p, [](std::string_view t) { return FixUnicode(t); });
        });
    add("punctuation_normalization_mapper", mapper, json::object(),
        [](const std::string& n, const json& p) {
          return Mapper(n, p, [](std::string_view t) { return NormalizePunctuation(t); });
        });
    add("remove_repeat_sentences_mapper", mapper,
        {{"lowercase", false}, {"ignore_special_character", true}, {"min_repeat_sentence_length", 2}},
        [](const std::string& n, const json& p) {
          const bool lower = p.at("lowercase").get<bool>();
          const bool ignore = p.at("ignore_special_character").get<bool>();
          const auto min_len = Count(n, p, "min_repeat_sentence_length");
          return Mapper(n, p, [=](std::string_view t) {
            return RemoveRepeatSentences(t, min_len, lower, ignore);
          });
        });
    add("remove_specific_chars_mapper", mapper, {{"chars_to_remove", "◆●■►▼▲▴∆▻▷❖♡□"}},
        [](const std::string& n, const json& p) {
          const auto chars = DecodeUtf8(p.at("chars_to_remove").get<std::string>());
          return Mapper(n, p, [chars](std::string_view t) { return RemoveSpecificChars(t, chars); });
        });
    add("whitespace_normalization_mapper", mapper, json::object(),
        [](const std::string& n, const json& p) {
          return Mapper(n, p, [](std::string_view t) { return NormalizeWhitespace(t); });
        });

    add("alphanumeric_filter", filter, {{"tokenization", false}, {"min_ratio", 0.0}, {"max_ratio", 0.9}},
        [](const std::string& n, const json& p) {
          const bool per_token = p.at("tokenization").get<bool>();
          return RangeFilter(n, p, "min_ratio", "max_ratio", [per_token](const Document& d) {
            return AlphanumericRatio(d.text, per_token);
          });
        });
    add("average_line_length_filter", filter, {{"min_len", 10}, {"max_len", 150}},
        [](const std::string& n, const json& p) {
          return RangeFilter(n, p, "min_len", "max_len",
                             [](const Document& d) { return AverageLineLength(d.text); });
        });
    add("character_repetition_filter", filter, {{"rep_len", 10}, {"min_ratio", 0.0}, {"max_ratio", 0.4}},
        [](const std::string& n, const json& p) {
          const auto rep = Count(n, p, "rep_len");
          if (rep == 0) throw ConfigError(n + ": rep_len must be >= 1");
          return RangeFilter(n, p, "min_ratio", "max_ratio", [rep](const Document& d) {
            return CharacterRepetitionRatio(d.text, rep);
          });
        });
    add("maximum_line_length_filter", filter, {{"min_len", 0}, {"max_len", 1000}},
        [](const std::string& n, const json& p) {
          return RangeFilter(n, p, "min_len", "max_len", [](const Document& d) {
            return static_cast<double>(MaximumLineLength(d.text));
          });
        });
    add("perplexity_filter", filter, {{"max_ppl", 1500}, {"reference", ""}},
        [](const std::string& n, const json& p) {
          std::shared_ptr<const PerplexityScorer> scorer;
          const auto path = p.at("reference").get<std::string>();
          if (!path.empty()) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw ConfigError(n + ": cannot open reference corpus " + path);
            std::stringstream buf;
            buf << in.rdbuf();
            scorer = std::make_shared<const CharTrigramScorer>(buf.str());
          } else {
            std::lock_guard lock(ScorerMutex());
            scorer = ScorerOverride();
          }
          if (!scorer) scorer = CharTrigramScorer::Default();
          return RangeFilter(n, p, nullptr, "max_ppl",
                             [scorer](const Document& d) { return scorer->Score(d.text); });
        });
    add("special_characters_filter", filter, {{"min_ratio", 0.0}, {"max_ratio", 0.25}},
        [](const std::string& n, const json& p) {
          return RangeFilter(n, p, "min_ratio", "max_ratio",
                             [](const Document& d) { return SpecialCharacterRatio(d.text); });
        });
    add("text_length_filter", filter, {{"min_len", 10}, {"max_len", 100000}},
        [](const std::string& n, const json& p) {
          return RangeFilter(n, p, "min_len", "max_len", [](const Document& d) {
            return static_cast<double>(TextLength(d.text));
          });
        });
    add("word_repetition_filter", filter, {{"rep_len", 10}, {"min_ratio", 0.0}, {"max_ratio", 0.5}},
        [](const std::string& n, const json& p) {
          const auto rep = Count(n, p, "rep_len");
          if (rep == 0) throw ConfigError(n + ": rep_len must be >= 1");
          return RangeFilter(n, p, "min_ratio", "max_ratio",
                             [rep](const Document& d) { return WordRepetitionRatio(d.text, rep); });
        });
    add("words_num_filter", filter, {{"min_num", 20}, {"max_num", 6640}},
        [](const std::string& n, const json& p) {
          return RangeFilter(n, p, "min_num", "max_num", [](const Document& d) {
            return static_cast<double>(WordsNum(d.text));
          });
        });

    add("document_simhash_deduplicator", OperatorKind::kDeduplicator,
        {{"tokenization", "space"},
         {"window_size", 6},
         {"num_blocks", 6},
         {"hamming_distance", 4},
         {"lowercase", true}},
        [](const std::string& n, const json& p) -> std::unique_ptr<Operator> {
          if (p.at("tokenization") != "space") throw ConfigError(n + ": only 'space' tokenization is supported");
          SimhashOptions opts;
          opts.window_size = Count(n, p, "window_size");
          opts.num_blocks = Count(n, p, "num_blocks");
          opts.hamming_distance = Count(n, p, "hamming_distance");
          opts.lowercase = p.at("lowercase").get<bool>();
          opts.Validate();
          return std::make_unique<DeduplicatorOp>(n, p, opts);
        });
    return r;
  }();
  return registry;
}

const Entry& Lookup(const std::string& name) {
  for (const auto& [n, e] : Registry()) {
    if (n == name) return e;
  }
  throw ConfigError("unknown operator: '" + name + "'");
}

bool SameType(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

}  // namespace

const char* ToString(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kMapper:
      return "mapper";
    case OperatorKind::kFilter:
      return "filter";
    case OperatorKind::kDeduplicator:
      return "deduplicator";
  }
  return "?";
}

void to_json(json& j, const OperatorSpec& s) { j = json{{"name", s.name}, {"params", s.params}}; }

void from_json(const json& j, OperatorSpec& s) {
  if (!j.is_object()) throw ConfigError("operator spec must be an object");
  for (const auto& [k, v] : j.items()) {
    if (k != "name" && k != "params") throw ConfigError("operator spec: unknown field '" + k + "'");
  }
  if (!j.contains("name") || !j["name"].is_string()) throw ConfigError("operator spec needs a string 'name'");
  s.name = j["name"].get<std::string>();
  s.params = j.value("params", json::object());
  if (s.params.is_null()) s.params = json::object();
  if (!s.params.is_object()) throw ConfigError(s.name + ": 'params' must be an object");
}

FilterVerdict FilterOp::Evaluate(const Document& doc) const {
  const double stat = Statistic(doc);
  return {stat >= min_ && stat <= max_, stat, min_, max_};
}

std::vector<std::string> CatalogNames() {
  std::vector<std::string> names;
  for (const auto& [n, e] : Registry()) names.push_back(n);
  return names;
}

bool IsRegistered(const std::string& name) {
  for (const auto& [n, e] : Registry()) {
    if (n == name) return true;
  }
  return false;
}

OperatorKind KindOf(const std::string& name) { return Lookup(name).kind; }

json DefaultParams(const std::string& name) { return Lookup(name).defaults; }

std::unique_ptr<Operator> MakeOperator(const OperatorSpec& spec) {
  const Entry& entry = Lookup(spec.name);
  if (!spec.params.is_object()) throw ConfigError(spec.name + ": params must be an object");
  json merged = entry.defaults;
  for (const auto& [k, v] : spec.params.items()) {
    if (!entry.defaults.contains(k)) throw ConfigError(spec.name + ": unknown parameter '" + k + "'");
    if (!SameType(entry.defaults[k], v)) {
      throw ConfigError(spec.name + ": parameter '" + k + "' has the wrong type");
    }
    merged[k] = v;
  }
  return entry.make(spec.name, merged);
}

void SetPerplexityScorerForTesting(std::shared_ptr<const PerplexityScorer> scorer) {
  std::lock_guard lock(ScorerMutex());
  ScorerOverride() = std::move(scorer);
}

Document RunMapper(const Document& doc, const OperatorSpec& spec) {
  const auto op = MakeOperator(spec);
  const auto* mapper = dynamic_cast<const MapperOp*>(op.get());
  if (!mapper) throw ConfigError("'" + spec.name + "' is not a mapper");
  Document out = doc;
  out.text = mapper->Map(doc.text);
  return out;
}

FilterVerdict RunFilter(const Document& doc, const OperatorSpec& spec) {
  const auto op = MakeOperator(spec);
  const auto* filter = dynamic_cast<const FilterOp*>(op.get());
  if (!filter) throw ConfigError("'" + spec.name + "' is not a filter");
  return filter->Evaluate(doc);
}

std::vector<OperatorSpec> DefaultTextPipeline() {
  std::vector<OperatorSpec> specs;
  for (const auto& [name, entry] : Registry()) {
    if (name == "words_num_filter") continue;  // code chain only
    specs.push_back({name, entry.defaults});
  }
  return specs;
}

std::vector<OperatorSpec> DefaultCodePipeline() {
  const auto with = [](const std::string& name, json overrides = json::object()) {
    json p = DefaultParams(name);
    p.update(overrides);
    return OperatorSpec{name, p};
  };
  return {
      with("clean_copyright_mapper"),
      with("clean_email_mapper"),
      with("clean_links_mapper"),
      with("fix_unicode_mapper"),
      with("punctuation_normalization_mapper"),
      with("alphanumeric_filter", {{"tokenization", true}, {"min_ratio", 0.546}, {"max_ratio", 3.65}}),
      with("average_line_length_filter", {{"min_len", 10}, {"max_len", 150}}),
      with("character_repetition_filter", {{"rep_len", 10}, {"min_ratio", 0.0}, {"max_ratio", 0.36}}),
      with("maximum_line_length_filter", {{"min_len", 0}, {"max_len", 1000}}),
      with("text_length_filter", {{"min_len", 0}, {"max_len", 96714}}),
      with("words_num_filter", {{"min_num", 20}, {"max_num", 6640}}),
      with("word_repetition_filter", {{"rep_len", 10}, {"min_ratio", 0.0}, {"max_ratio", 0.357}}),
      with("document_simhash_deduplicator"),
  };
}

std::vector<OperatorSpec> ParsePipelineConfig(const json& j) {
  if (!j.is_array()) throw ConfigError("pipeline config must be a JSON array of {name, params}");
  std::vector<OperatorSpec> specs;
  for (const auto& item : j) specs.push_back(item.get<OperatorSpec>());
  return specs;
}

std::vector<OperatorSpec> LoadPipelineConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open pipeline config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("pipeline config " + path + " is not valid JSON: " + e.what());
  }
  return ParsePipelineConfig(j);
}

}  // namespace steel::curation
