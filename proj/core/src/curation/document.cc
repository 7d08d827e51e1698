#include "steel/curation/document.h"

#include <nlohmann/json.hpp>

#include "steel/numerics/errors.h"

namespace steel::curation {

void to_json(nlohmann::json& j, const Document& d) {
  j = nlohmann::json{{"id", d.id},
                     {"text", d.text},
                     {"kind", d.kind == DocKind::kCode ? "code" : "text"},
                     {"meta", d.meta}};
}

void from_json(const nlohmann::json& j, Document& d) {
  if (!j.is_object()) throw DataError("document must be a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) throw DataError("document needs a string 'id'");
  if (!j.contains("text") || !j["text"].is_string()) {
    throw DataError("document '" + j["id"].get<std::string>() + "' needs a string 'text'");
  }
  d.id = j["id"].get<std::string>();
  d.text = j["text"].get<std::string>();
  d.kind = DocKind::kText;
  if (auto it = j.find("kind"); it != j.end()) {
    if (*it == "code") {
      d.kind = DocKind::kCode;
    } else if (*it != "text") {
      throw DataError("document '" + d.id + "': kind must be \"text\" or \"code\"");
    }
  }
  d.meta.clear();
  if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError("document '" + d.id + "': meta must be an object");
    for (const auto& [k, v] : it->items()) {
      d.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
}

}  // namespace steel::curation
