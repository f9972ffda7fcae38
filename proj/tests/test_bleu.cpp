// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "docmt/bleu.hpp"
#include "docmt/rng.hpp"

using namespace docmt;

namespace {

// Independent reference: sorted-vector n-gram counting instead of hash maps,
// written against the textbook definition.
double reference_bleu(const std::vector<Sentence>& hyps, const std::vector<Sentence>& refs) {
  std::size_t hyp_len = 0, ref_len = 0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      auto grams = [&](const Sentence& s) {
        std::vector<std::vector<std::string>> out;
        for (std::size_t k = 0; k + n <= s.size(); ++k)
          out.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(k),
                           s.begin() + static_cast<std::ptrdiff_t>(k + n));
        std::sort(out.begin(), out.end());
        return out;
      };
      auto h = grams(hyps[i]);
      auto r = grams(refs[i]);
      total += h.size();
      // clipped matches = multiset intersection size
      std::size_t hi = 0, ri = 0;
      while (hi < h.size() && ri < r.size()) {
        if (h[hi] == r[ri]) {
          ++matched;
          ++hi;
          ++ri;
        } else if (h[hi] < r[ri]) {
          ++hi;
        } else {
          ++ri;
        }
      }
    }
    if (total == 0 || matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    hyp_len += hyps[i].size();
    ref_len += refs[i].size();
  }
  if (hyp_len == 0) return 0.0;
  const double bp = hyp_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

std::vector<Sentence> random_corpus(Rng& rng, std::size_t sentences, std::size_t vocab,
                                    std::size_t max_len) {
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    Sentence s;
    const std::size_t len = 1 + uniform_int(rng, max_len);
    for (std::size_t j = 0; j < len; ++j) s.push_back("w" + std::to_string(uniform_int(rng, vocab)));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("identical corpora score a perfect 100", "[bleu]") {
  std::vector<Sentence> text = {{"the", "cat", "sat", "on", "the", "mat"},
                                {"a", "quick", "brown", "fox"}};
  auto r = corpus_bleu(text, text);
  CHECK(r.bleu == Catch::Approx(100.0).margin(1e-9));
  CHECK(r.brevity_penalty == 1.0);
  for (double p : r.precisions) CHECK(p == 1.0);
}

TEST_CASE("a missing 4-gram zeroes the unsmoothed score", "[bleu]") {
  auto r = corpus_bleu({{"a", "b", "c", "d"}}, {{"a", "b", "c", "e"}});
  CHECK(r.precisions[0] == Catch::Approx(0.75));
  CHECK(r.precisions[3] == 0.0);
  CHECK(r.bleu == 0.0);
}

TEST_CASE("clipping follows the hand-counted oracle", "[bleu]") {
  // hyp "the cat the cat" vs ref "the cat sat":
  //   p1: counts the=2, cat=2 clipped to 1 each -> 2/4
  //   p2: "the cat" x2 clipped to 1, "cat the" unmatched -> 1/3
  //   p3: no trigram match -> 0
  auto r = corpus_bleu({{"the", "cat", "the", "cat"}}, {{"the", "cat", "sat"}});
  CHECK(r.precisions[0] == Catch::Approx(0.5));
  CHECK(r.precisions[1] == Catch::Approx(1.0 / 3.0));
  CHECK(r.precisions[2] == 0.0);
  CHECK(r.brevity_penalty == 1.0);  // hyp_len 4 > ref_len 3
  CHECK(r.bleu == 0.0);
  CHECK(r.hyp_len == 4);
  CHECK(r.ref_len == 3);
}

TEST_CASE("brevity penalty punishes short hypotheses", "[bleu]") {
  auto r = corpus_bleu({{"a", "b"}}, {{"a", "b", "c", "d"}});
  CHECK(r.brevity_penalty == Catch::Approx(std::exp(1.0 - 2.0)).margin(1e-12));
  CHECK(r.brevity_penalty <= 1.0);
}

TEST_CASE("errors: length mismatch and empty corpus", "[bleu]") {
  CHECK_THROWS_AS(corpus_bleu({{"a"}}, {{"a"}, {"b"}}), LengthMismatch);
  CHECK_THROWS_AS(corpus_bleu({}, {}), EmptyCorpus);
}

TEST_CASE("jointly permuting sentence pairs leaves the score unchanged", "[bleu]") {
  Rng rng = make_rng(60);
  auto hyps = random_corpus(rng, 12, 6, 8);
  auto refs = random_corpus(rng, 12, 6, 8);
  auto base = corpus_bleu(hyps, refs);
  std::vector<std::size_t> perm(hyps.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i)
    std::swap(perm[i - 1], perm[uniform_int(rng, i)]);
  std::vector<Sentence> ph, pr;
  for (std::size_t i : perm) {
    ph.push_back(hyps[i]);
    pr.push_back(refs[i]);
  }
  auto shuffled = corpus_bleu(ph, pr);
  CHECK(shuffled.bleu == Catch::Approx(base.bleu).margin(1e-9));
}

TEST_CASE("agrees with an independent implementation on random corpora", "[bleu]") {
  Rng rng = make_rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + uniform_int(rng, 10);
    // overlap the vocabularies so n-gram matches actually occur
    auto refs = random_corpus(rng, n, 4, 10);
    std::vector<Sentence> hyps = refs;
    for (auto& s : hyps)
      for (auto& tok : s)
        if (uniform_real(rng) < 0.3) tok = "w" + std::to_string(uniform_int(rng, 4));
    auto mine = corpus_bleu(hyps, refs);
    const double ref = reference_bleu(hyps, refs);
    CHECK(mine.bleu == Catch::Approx(ref).margin(1e-6));
    CHECK(mine.bleu >= 0.0);
    CHECK(mine.bleu <= 100.0);
    CHECK(mine.brevity_penalty <= 1.0);
  }
}
