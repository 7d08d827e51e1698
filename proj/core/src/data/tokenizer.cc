#include "steel/data/tokenizer.h"

namespace steel::data {

std::vector<std::uint32_t> ByteTokenizer::Encode(std::string_view text) const {
  std::vector<std::uint32_t> ids;
  ids.reserve(text.size());
  for (unsigned char c : text) ids.push_back(kByteOffset + c);
  return ids;
}

std::string ByteTokenizer::Decode(const std::vector<std::uint32_t>& ids) const {
  std::string out;
  for (std::uint32_t id : ids) {
    if (id >= kByteOffset && id < kByteOffset + 256) {
      out.push_back(static_cast<char>(id - kByteOffset));
    } else if (id == kUser) {
      out += "<|user|>";
    } else if (id == kAssistant) {
      out += "<|assistant|>";
    } else if (id == kEnd) {
      out += "<|end|>";
    }
  }
  return out;
}

std::optional<std::uint32_t> ByteTokenizer::SpecialId(std::string_view name) const {
  if (name == "<|user|>") return kUser;
  if (name == "<|assistant|>") return kAssistant;
  if (name == "<|end|>") return kEnd;
  if (name == "<pad>") return kPad;
  if (name == "<eod>") return kEndOfDocument;
  return std::nullopt;
}

}  // namespace steel::data
