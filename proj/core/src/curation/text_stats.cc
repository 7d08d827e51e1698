#include "steel/curation/text_stats.h"

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "steel/curation/unicode.h"

namespace steel::curation {
namespace {

template <typename Seq>
double RepetitionRatio(const std::vector<Seq>& grams) {
  if (grams.empty()) return 0.0;
  std::unordered_map<Seq, std::size_t> counts;
  for (const auto& g : grams) ++counts[g];
  std::size_t repeated = 0;
  for (const auto& [g, c] : counts) {
    if (c > 1) repeated += c;
  }
  return static_cast<double>(repeated) / static_cast<double>(grams.size());
}

}  // namespace

double CharacterRepetitionRatio(std::string_view text, std::size_t n) {
  const std::u32string cps = DecodeUtf8(text);
  if (n == 0 || cps.size() < n) return 0.0;
  std::vector<std::u32string> grams;
  grams.reserve(cps.size() - n + 1);
  for (std::size_t i = 0; i + n <= cps.size(); ++i) grams.push_back(cps.substr(i, n));
  return RepetitionRatio(grams);
}

double WordRepetitionRatio(std::string_view text, std::size_t n) {
  const auto words = SplitWhitespace(DecodeUtf8(text));
  if (n == 0 || words.size() < n) return 0.0;
  std::vector<std::u32string> grams;
  grams.reserve(words.size() - n + 1);
  for (std::size_t i = 0; i + n <= words.size(); ++i) {
    std::u32string g;
    for (std::size_t k = 0; k < n; ++k) {
      if (k) g.push_back(U' ');
      g += words[i + k];
    }
    grams.push_back(std::move(g));
  }
  return RepetitionRatio(grams);
}

std::size_t WordsNum(std::string_view text) { return SplitWhitespace(DecodeUtf8(text)).size(); }

double AlphanumericRatio(std::string_view text, bool per_token) {
  const std::u32string cps = DecodeUtf8(text);
  const auto alnum = static_cast<double>(std::count_if(cps.begin(), cps.end(), IsAlnum));
  const double denom =
      per_token ? static_cast<double>(SplitWhitespace(cps).size()) : static_cast<double>(cps.size());
  return denom == 0.0 ? 0.0 : alnum / denom;
}

double SpecialCharacterRatio(std::string_view text) {
  const std::u32string cps = DecodeUtf8(text);
  if (cps.empty()) return 0.0;
  const auto special = std::count_if(cps.begin(), cps.end(), [](char32_t c) {
    return (c >= U'0' && c <= U'9') || IsWhitespace(c) || IsPunctuationOrSymbol(c);
  });
  return static_cast<double>(special) / static_cast<double>(cps.size());
}

double AverageLineLength(std::string_view text) {
  const std::u32string cps = DecodeUtf8(text);
  if (cps.empty()) return 0.0;
  const auto lines = std::count(cps.begin(), cps.end(), U'\n') + 1;
  return static_cast<double>(cps.size()) / static_cast<double>(lines);
}

std::size_t MaximumLineLength(std::string_view text) {
  const std::u32string cps = DecodeUtf8(text);
  std::size_t best = 0;
  std::size_t cur = 0;
  for (char32_t c : cps) {
    if (c == U'\n') {
      best = std::max(best, cur);
      cur = 0;
    } else {
      ++cur;
    }
  }
  return std::max(best, cur);
}

std::size_t TextLength(std::string_view text) { return CodePointLength(text); }

}  // namespace steel::curation
