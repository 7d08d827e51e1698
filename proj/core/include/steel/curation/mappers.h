#pragma once

#include <map>
#include <string>
#include <string_view>

namespace steel::curation {

// Text rewriters behind the *_mapper operators. Each is idempotent:
// applying it twice gives the same result as applying it once.

std::string CleanEmail(std::string_view text, std::string_view replacement = "");
std::string CleanLinks(std::string_view text, std::string_view replacement = "");
std::string CleanIp(std::string_view text, std::string_view replacement = "");
/// Drops tags, comments and the contents of <script>/<style>.
std::string CleanHtml(std::string_view text);
/// Removes leading comment blocks that mention "copyright" (any case).
std::string CleanCopyright(std::string_view text);
/// Expands \newcommand / \renewcommand / \def macros (up to 9 arguments,
/// nesting depth 8). Definitions are kept; self-referential macros are left
/// alone.
std::string ExpandMacro(std::string_view text);
/// Drops undecodable bytes and surrogates, then applies NFC.
std::string FixUnicode(std::string_view text);
std::string NormalizePunctuation(std::string_view text);
std::string NormalizeWhitespace(std::string_view text);
std::string RemoveSpecificChars(std::string_view text, std::u32string_view chars);
/// Keeps the first occurrence of each sentence (sentence-final marks
/// 。！？.!?). Matching ignores non-alphanumeric characters; sentences
/// shorter than `min_length` characters are never removed.
std::string RemoveRepeatSentences(std::string_view text, std::size_t min_length = 2,
                                  bool lowercase = false, bool ignore_special = true);

/// Single code point substitution table for Chinese script conversion.
class ConversionTable {
 public:
  /// Built-in traditional -> simplified sample.
  static const ConversionTable& BuiltinT2S();
  /// Lines of "<from>\t<to>"; '#' starts a comment. Chains are resolved
  /// to their final target; cycles are a ConfigError.
  static ConversionTable Parse(std::string_view contents);
  static ConversionTable Load(const std::string& path);

  std::string Convert(std::string_view text) const;
  std::size_t size() const { return map_.size(); }

 private:
  void Close();
  std::map<char32_t, char32_t> map_;
};

}  // namespace steel::curation
