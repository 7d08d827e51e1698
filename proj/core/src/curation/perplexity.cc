#include "steel/curation/perplexity.h"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "steel/curation/unicode.h"

namespace steel::curation {
namespace {

// Start-of-text padding; outside the Unicode range so it never collides.
constexpr char32_t kStart = 0x110000;

}  // namespace

std::uint64_t CharTrigramScorer::ContextKey(char32_t a, char32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

CharTrigramScorer::CharTrigramScorer(std::string_view training_text) {
  const std::u32string s = DecodeUtf8(training_text);
  std::unordered_set<char32_t> alphabet(s.begin(), s.end());
  alphabet_size_ = alphabet.size();
  char32_t a = kStart;
  char32_t b = kStart;
  for (char32_t c : s) {
    const auto key = ContextKey(a, b);
    ++context_counts_[key];
    ++trigram_counts_[key][c];
    a = b;
    b = c;
  }
}

double CharTrigramScorer::Score(std::string_view text) const {
  const std::u32string s = DecodeUtf8(text);
  if (s.empty()) return std::numeric_limits<double>::infinity();
  const double v = static_cast<double>(alphabet_size_ == 0 ? 1 : alphabet_size_);
  double nll = 0.0;
  char32_t a = kStart;
  char32_t b = kStart;
  for (char32_t c : s) {
    const auto key = ContextKey(a, b);
    double context = 0.0;
    double joint = 0.0;
    if (auto it = context_counts_.find(key); it != context_counts_.end()) {
      context = it->second;
      const auto& next = trigram_counts_.at(key);
      if (auto jt = next.find(c); jt != next.end()) joint = jt->second;
    }
    nll -= std::log((joint + 1.0) / (context + v));
    a = b;
    b = c;
  }
  return std::exp(nll / static_cast<double>(s.size()));
}

std::shared_ptr<const CharTrigramScorer> CharTrigramScorer::Default() {
  static const auto scorer = std::make_shared<const CharTrigramScorer>(ReferenceCorpus());
  return scorer;
}

double PerplexityScore(std::string_view text, const PerplexityScorer& scorer) {
  return scorer.Score(text);
}

}  // namespace steel::curation
