#pragma once

#include <cstddef>
#include <string_view>

namespace steel::curation {

/// Share of character n-gram occurrences whose n-gram occurs more than
/// once in the text. 0 when the text has fewer than n characters.
double CharacterRepetitionRatio(std::string_view text, std::size_t n = 10);

/// Same statistic over whitespace-token n-grams.
double WordRepetitionRatio(std::string_view text, std::size_t n = 10);

/// Number of whitespace-separated tokens.
std::size_t WordsNum(std::string_view text);

/// Alphanumeric characters divided by total characters, or by the number
/// of whitespace tokens when `per_token` is set.
double AlphanumericRatio(std::string_view text, bool per_token);

/// Digits, whitespace, punctuation and symbols over total characters.
double SpecialCharacterRatio(std::string_view text);

/// Characters (newlines included) divided by the number of lines.
double AverageLineLength(std::string_view text);
std::size_t MaximumLineLength(std::string_view text);
std::size_t TextLength(std::string_view text);

}  // namespace steel::curation
