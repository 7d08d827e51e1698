#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace steel::curation {

/// Decodes UTF-8. Malformed sequences, overlong forms and surrogate code
/// points are dropped; `dropped` (if given) receives how many were skipped.
std::u32string DecodeUtf8(std::string_view text, std::size_t* dropped = nullptr);
std::string EncodeUtf8(std::u32string_view text);

bool IsAlnum(char32_t c);
bool IsWhitespace(char32_t c);
/// Unicode punctuation or symbol categories.
bool IsPunctuationOrSymbol(char32_t c);
char32_t ToLower(char32_t c);

/// Canonical composition (NFC) of valid UTF-8.
std::string NormalizeNfc(std::string_view text);

/// Splits on Unicode whitespace, dropping empty pieces.
std::vector<std::u32string> SplitWhitespace(std::u32string_view text);

/// Code-point length of UTF-8 text (invalid bytes not counted).
std::size_t CodePointLength(std::string_view text);

}  // namespace steel::curation
