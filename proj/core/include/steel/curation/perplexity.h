#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>

namespace steel::curation {

/// Language-model statistic provider for the perplexity filter.
class PerplexityScorer {
 public:
  virtual ~PerplexityScorer() = default;
  /// exp(mean negative log-probability per character); +inf for empty text.
  virtual double Score(std::string_view text) const = 0;
};

/// Character trigram model with add-one smoothing over the alphabet seen in
/// the training text. Each text is scored from a fresh two-symbol start
/// context.
class CharTrigramScorer : public PerplexityScorer {
 public:
  explicit CharTrigramScorer(std::string_view training_text);

  /// Model trained on the bundled mixed Chinese/English reference corpus.
  static std::shared_ptr<const CharTrigramScorer> Default();

  double Score(std::string_view text) const override;
  std::size_t alphabet_size() const { return alphabet_size_; }

 private:
  static std::uint64_t ContextKey(char32_t a, char32_t b);

  std::unordered_map<std::uint64_t, std::uint32_t> context_counts_;
  std::unordered_map<std::uint64_t, std::unordered_map<char32_t, std::uint32_t>> trigram_counts_;
  std::size_t alphabet_size_ = 0;
};

double PerplexityScore(std::string_view text, const PerplexityScorer& scorer);

/// Text of the bundled reference corpus.
std::string_view ReferenceCorpus();

}  // namespace steel::curation
