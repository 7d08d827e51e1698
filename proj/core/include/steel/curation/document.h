#pragma once

#include <map>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace steel::curation {

enum class DocKind { kText, kCode };

/// One unit of raw text or code moving through the curation pipeline.
struct Document {
  std::string id;
  std::string text;  // UTF-8
  DocKind kind = DocKind::kText;
  std::map<std::string, std::string> meta;

  bool operator==(const Document&) const = default;
};

/// {"id", "text", "kind": "text"|"code", "meta": {...}}; throws DataError.
void to_json(nlohmann::json& j, const Document& d);
void from_json(const nlohmann::json& j, Document& d);

}  // namespace steel::curation
