#pragma once

// Deterministic 1000-document corpus for deduplication tests: unrelated
// documents plus families of exact copies, case and spacing variants, and
// one to seven token edits, so hamming distances cover both sides of the
// threshold.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace steel::testing_support {

inline std::vector<std::string> SimhashCorpus(std::size_t count = 1000, std::uint64_t seed = 7) {
  std::mt19937_64 gen(seed);
  std::vector<std::string> vocab;
  std::uniform_int_distribution<int> letter('a', 'z');
  std::uniform_int_distribution<int> len(2, 9);
  for (int i = 0; i < 3000; ++i) {
    std::string w;
    for (int k = len(gen); k > 0; --k) w.push_back(static_cast<char>(letter(gen)));
    vocab.push_back(w);
  }
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> doc_len(40, 200);
  auto fresh = [&] {
    std::vector<std::string> words;
    for (int k = doc_len(gen); k > 0; --k) words.push_back(vocab[pick(gen)]);
    return words;
  };
  auto join = [](const std::vector<std::string>& words, bool upper, bool wide) {
    std::string out;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i) out += (wide && i % 7 == 0) ? "\n  " : " ";
      std::string w = words[i];
      if (upper && i % 3 == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
      out += w;
    }
    return out;
  };

  std::vector<std::string> docs;
  std::vector<std::vector<std::string>> bases;
  std::uniform_int_distribution<int> kind(0, 9);
  while (docs.size() < count) {
    const int k = kind(gen);
    if (bases.empty() || k < 4) {
      bases.push_back(fresh());
      docs.push_back(join(bases.back(), false, false));
      continue;
    }
    std::vector<std::string> words = bases[std::uniform_int_distribution<std::size_t>(0, bases.size() - 1)(gen)];
    if (k == 4) {
      docs.push_back(join(words, false, false));
    } else if (k == 5) {
      docs.push_back(join(words, true, true));
    } else {
      const int edits = (k - 5) * 2 - 1;  // 1, 3, 5, 7
      for (int e = 0; e < edits; ++e) {
        words[std::uniform_int_distribution<std::size_t>(0, words.size() - 1)(gen)] = vocab[pick(gen)];
      }
      docs.push_back(join(words, false, false));
    }
  }
  return docs;
}

}  // namespace steel::testing_support
