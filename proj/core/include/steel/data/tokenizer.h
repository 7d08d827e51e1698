#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace steel::data {

/// Maps text to token ids and back. The production vocabulary is a data
/// dependency; ByteTokenizer is the built-in stand-in.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::uint32_t> Encode(std::string_view text) const = 0;
  virtual std::string Decode(const std::vector<std::uint32_t>& ids) const = 0;
  virtual std::uint32_t vocab_size() const = 0;
  /// Id of a special marker such as "<|user|>", if the vocabulary has one.
  virtual std::optional<std::uint32_t> SpecialId(std::string_view name) const = 0;
};

/// Ids 0 = pad, 1 = end of document, 2..257 = raw bytes, 258 = <|user|>,
/// 259 = <|assistant|>, 260 = <|end|>. Vocabulary size 261.
class ByteTokenizer : public Tokenizer {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kEndOfDocument = 1;
  static constexpr std::uint32_t kByteOffset = 2;
  static constexpr std::uint32_t kUser = 258;
  static constexpr std::uint32_t kAssistant = 259;
  static constexpr std::uint32_t kEnd = 260;
  static constexpr std::uint32_t kVocabSize = 261;

  std::vector<std::uint32_t> Encode(std::string_view text) const override;
  std::string Decode(const std::vector<std::uint32_t>& ids) const override;
  std::uint32_t vocab_size() const override { return kVocabSize; }
  std::optional<std::uint32_t> SpecialId(std::string_view name) const override;
};

}  // namespace steel::data
