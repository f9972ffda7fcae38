// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Corpus-level BLEU-4 with clipped modified n-gram precision and the classic
// brevity penalty. No smoothing: any zero n-gram count zeroes the score,
// which is expected behavior on very short corpora.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "docmt/corpus.hpp"
#include "docmt/error.hpp"

namespace docmt {

struct BleuReport {
  double bleu = 0.0;  // in [0, 100]
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

namespace detail {

// n-grams joined with an unprintable separator; tokens are whitespace-free.
inline std::unordered_map<std::string, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
  std::unordered_map<std::string, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key = s[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += s[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

inline BleuReport corpus_bleu(const std::vector<Sentence>& hypotheses,
                              const std::vector<Sentence>& references) {
  if (hypotheses.size() != references.size())
    throw LengthMismatch("corpus_bleu: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                         std::to_string(references.size()) + " references");
  if (hypotheses.empty()) throw EmptyCorpus("corpus_bleu: empty corpus");

  BleuReport r;
  std::array<std::size_t, 4> matched{}, total{};
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    r.hyp_len += hypotheses[i].size();
    r.ref_len += references[i].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      auto hyp_counts = detail::ngram_counts(hypotheses[i], n);
      auto ref_counts = detail::ngram_counts(references[i], n);
      for (const auto& [gram, count] : hyp_counts) {
        total[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
    }
  }

  bool all_positive = true;
  for (std::size_t n = 0; n < 4; ++n) {
    r.precisions[n] = total[n] == 0 ? 0.0
                                    : static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    all_positive = all_positive && r.precisions[n] > 0.0;
  }

  if (r.hyp_len == 0) {
    r.brevity_penalty = 0.0;
    r.bleu = 0.0;
    return r;
  }
  r.brevity_penalty =
      r.hyp_len > r.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len));
  if (all_positive) {
    double log_sum = 0.0;
    for (double p : r.precisions) log_sum += std::log(p);
    r.bleu = 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  }
  return r;
}

}  // namespace docmt
