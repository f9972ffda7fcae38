// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Beam search over the decoder with the GNMT length penalty. Hypotheses are
// scored by summed token log-probability divided by ((5+n)/6)^alpha, where n
// counts generated tokens (everything after [BOS], including [EOS]). Ties
// break deterministically toward lexicographically smaller token sequences.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "docmt/model.hpp"

namespace docmt {

struct Hypothesis {
  Ids tokens;  // starts with [BOS]
  double log_prob = 0.0;
  bool finished = false;

  std::size_t generated() const { return tokens.size() - 1; }
};

inline double length_penalty(std::size_t length, double alpha = 1.0) {
  if (length < 1) throw ConfigError("length_penalty: length must be >= 1");
  return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

inline double hypothesis_score(const Hypothesis& h, double alpha) {
  return h.log_prob / length_penalty(std::max<std::size_t>(h.generated(), 1), alpha);
}

namespace detail {

inline bool better(double score_a, const Ids& a, double score_b, const Ids& b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

// Highest score any continuation of an unfinished hypothesis could reach:
// log_prob can only decrease, so divide by the most favorable penalty among
// the lengths still reachable.
inline double best_possible(const Hypothesis& h, std::size_t max_len, double alpha) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t n = h.generated() + 1; n <= max_len; ++n)
    best = std::max(best, h.log_prob / length_penalty(n, alpha));
  return best;
}

}  // namespace detail

// Returns the best hypothesis for a pre-encoded input. Expansion happens over
// the full target vocabulary; hypotheses reaching max_len unfinished are
// force-finished and scored as they stand.
template <typename T>
Hypothesis beam_search(const EncoderOutputT<T>& enc, ModelParamsT<T>& params, const ModelConfig& cfg,
                       std::size_t beam = 4, std::size_t max_len = 64, double alpha = 1.0) {
  if (beam < 1) throw ConfigError("beam_search: beam must be >= 1");
  if (max_len < 1) throw ConfigError("beam_search: max_len must be >= 1");

  std::vector<Hypothesis> active{Hypothesis{{Vocab::kBos}, 0.0, false}};
  std::vector<Hypothesis> finished;

  auto best_finished_score = [&]() {
    double best = -std::numeric_limits<double>::infinity();
    for (const Hypothesis& h : finished) best = std::max(best, hypothesis_score(h, alpha));
    return best;
  };

  for (std::size_t step = 0; step < max_len && !active.empty(); ++step) {
    struct Candidate {
      Hypothesis hyp;
      double score;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(active.size() * cfg.tgt_vocab);
    for (const Hypothesis& h : active) {
      TensorT<T> logits = decode(h.tokens, enc, params, cfg);
      const std::size_t last = logits.rows() - 1;
      TensorT<T> row({1, logits.cols()});
      std::copy_n(logits.data.data() + last * logits.cols(), logits.cols(), row.data.data());
      TensorT<T> logp = log_softmax_rows(row);
      for (std::size_t v = 0; v < cfg.tgt_vocab; ++v) {
        Hypothesis next = h;
        next.tokens.push_back(static_cast<std::int32_t>(v));
        next.log_prob += static_cast<double>(logp.data[v]);
        next.finished = (static_cast<std::int32_t>(v) == Vocab::kEos);
        candidates.push_back({std::move(next), 0.0});
      }
    }
    for (Candidate& c : candidates) c.score = hypothesis_score(c.hyp, alpha);
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return detail::better(a.score, a.hyp.tokens, b.score, b.hyp.tokens);
    });
    if (candidates.size() > beam) candidates.resize(beam);

    active.clear();
    for (Candidate& c : candidates) {
      if (c.hyp.finished)
        finished.push_back(std::move(c.hyp));
      else
        active.push_back(std::move(c.hyp));
    }

    // Stop once no unfinished hypothesis can beat the best finished score.
    if (!finished.empty()) {
      const double bar = best_finished_score();
      bool beatable = false;
      for (const Hypothesis& h : active)
        if (detail::best_possible(h, max_len, alpha) > bar) {
          beatable = true;
          break;
        }
      if (!beatable) break;
    }
  }

  for (Hypothesis& h : active) {
    h.finished = true;  // out of budget; score as-is
    finished.push_back(std::move(h));
  }

  const Hypothesis* best = nullptr;
  double best_score = 0.0;
  for (const Hypothesis& h : finished) {
    const double s = hypothesis_score(h, alpha);
    if (!best || detail::better(s, h.tokens, best_score, best->tokens)) {
      best = &h;
      best_score = s;
    }
  }
  return *best;
}

template <typename T>
Hypothesis beam_search(const ExtendedInput& x, ModelParamsT<T>& params, const ModelConfig& cfg,
                       std::size_t beam = 4, std::size_t max_len = 64, double alpha = 1.0) {
  EncoderOutputT<T> enc = encode(x, params, cfg);
  return beam_search(enc, params, cfg, beam, max_len, alpha);
}

// Greedy argmax decoding; identical to beam_search with beam == 1.
template <typename T>
Hypothesis greedy_decode(const EncoderOutputT<T>& enc, ModelParamsT<T>& params, const ModelConfig& cfg,
                         std::size_t max_len = 64) {
  Hypothesis h{{Vocab::kBos}, 0.0, false};
  for (std::size_t step = 0; step < max_len; ++step) {
    TensorT<T> logits = decode(h.tokens, enc, params, cfg);
    const std::size_t last = logits.rows() - 1;
    TensorT<T> row({1, logits.cols()});
    std::copy_n(logits.data.data() + last * logits.cols(), logits.cols(), row.data.data());
    TensorT<T> logp = log_softmax_rows(row);
    std::size_t arg = 0;
    for (std::size_t v = 1; v < logp.size(); ++v)
      if (logp.data[v] > logp.data[arg]) arg = v;
    h.tokens.push_back(static_cast<std::int32_t>(arg));
    h.log_prob += static_cast<double>(logp.data[arg]);
    if (static_cast<std::int32_t>(arg) == Vocab::kEos) {
      h.finished = true;
      break;
    }
  }
  h.finished = true;
  return h;
}

// Strips [BOS]/[EOS] from a finished hypothesis.
inline Ids hypothesis_output(const Hypothesis& h) {
  Ids out;
  for (std::size_t i = 1; i < h.tokens.size(); ++i) {
    if (h.tokens[i] == Vocab::kEos) break;
    out.push_back(h.tokens[i]);
  }
  return out;
}

inline std::size_t default_max_len(std::size_t source_len) { return 2 * source_len + 10; }

}  // namespace docmt
