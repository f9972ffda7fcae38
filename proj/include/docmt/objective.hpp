// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// MLM masking over the extended input and the joint objective: translation
// negative log-likelihood plus (optionally) the masked-token prediction loss,
// both conditioned on the same masked input.

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "docmt/model.hpp"

namespace docmt {

struct ObjectiveConfig {
  bool mlm_enabled = false;
  double mlm_rate = 0.16;
  std::size_t mlm_cap = 20;
  double mlm_weight = 1.0;  // weight on the MLM term; the default keeps the plain sum
  double label_smoothing = 0.0;
};

// One parallel example, assembled but not yet masked. `target` carries
// [BOS] ... [EOS].
struct TrainExample {
  ExtendedInput input;
  Ids target;
};

// Assembles one training example per sentence, pairing each source sentence
// with its preceding same-document sentences according to the context mode.
// Monolingual documents (MLM pretraining) get an empty-target placeholder of
// just [BOS][EOS].
inline std::vector<TrainExample> build_examples(const std::vector<EncodedDocument>& docs,
                                                ContextMode ctx_mode, PositionMode pos_mode,
                                                std::size_t limit) {
  std::vector<TrainExample> out;
  for (const EncodedDocument& doc : docs) {
    for (std::size_t i = 0; i < doc.source.size(); ++i) {
      TrainExample ex;
      ex.input = assemble(context_for(doc.source, i, ctx_mode), doc.source[i], limit, pos_mode);
      ex.target.push_back(Vocab::kBos);
      if (doc.parallel())
        ex.target.insert(ex.target.end(), doc.target[i].begin(), doc.target[i].end());
      ex.target.push_back(Vocab::kEos);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

struct MaskedBatch {
  std::vector<ExtendedInput> inputs;                        // post-masking token ids
  std::vector<std::vector<std::int32_t>> masked_positions;  // M per example (sorted)
  std::vector<Ids> originals;                               // pre-masking tokens at M
  std::vector<Ids> targets;                                 // [BOS] y [EOS] per example

  std::size_t size() const { return inputs.size(); }
};

struct MaskingResult {
  ExtendedInput masked;
  std::vector<std::int32_t> positions;
  Ids originals;
};

// Selects each non-[SEP] position independently with probability `rate`,
// truncates a too-large draw uniformly at random to `cap`, and guarantees at
// least one selection. Selected tokens become [MASK] 80% of the time, a
// random regular token 10%, and stay unchanged 10%. Segment ids, position
// ids, and the context mask are never touched.
inline MaskingResult apply_mlm_masking(const ExtendedInput& x, double rate, std::size_t cap, Rng& rng,
                                       std::size_t vocab_size) {
  if (rate <= 0.0 || rate >= 1.0) throw ConfigError("mlm_rate must be in (0,1)");
  if (cap < 1) throw ConfigError("mlm_cap must be >= 1");

  std::vector<std::int32_t> candidates;
  candidates.reserve(x.length());
  for (std::size_t i = 0; i < x.length(); ++i)
    if (x.token_ids[i] != Vocab::kSep) candidates.push_back(static_cast<std::int32_t>(i));

  std::vector<std::int32_t> picked;
  for (std::int32_t c : candidates)
    if (uniform_real(rng) < rate) picked.push_back(c);
  if (picked.size() > cap) {
    // Uniform subset of size cap via partial Fisher-Yates.
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(uniform_int(rng, picked.size() - i));
      std::swap(picked[i], picked[j]);
    }
    picked.resize(cap);
  }
  if (picked.empty() && !candidates.empty())
    picked.push_back(candidates[static_cast<std::size_t>(uniform_int(rng, candidates.size()))]);
  std::sort(picked.begin(), picked.end());

  MaskingResult out{x, std::move(picked), {}};
  out.originals.reserve(out.positions.size());
  const std::size_t regular = vocab_size > static_cast<std::size_t>(Vocab::kNumSpecials)
                                  ? vocab_size - static_cast<std::size_t>(Vocab::kNumSpecials)
                                  : 0;
  for (std::int32_t p : out.positions) {
    out.originals.push_back(x.token_ids[static_cast<std::size_t>(p)]);
    const double u = uniform_real(rng);
    if (u < 0.8) {
      out.masked.token_ids[static_cast<std::size_t>(p)] = Vocab::kMask;
    } else if (u < 0.9 && regular > 0) {
      out.masked.token_ids[static_cast<std::size_t>(p)] =
          Vocab::kNumSpecials + static_cast<std::int32_t>(uniform_int(rng, regular));
    }  // else: keep the original token
  }
  return out;
}

inline MaskedBatch make_masked_batch(const std::vector<TrainExample>& examples,
                                     const std::vector<std::size_t>& indices, const ObjectiveConfig& oc,
                                     std::size_t src_vocab, Rng& mask_rng) {
  MaskedBatch b;
  for (std::size_t idx : indices) {
    const TrainExample& ex = examples[idx];
    if (oc.mlm_enabled) {
      MaskingResult m = apply_mlm_masking(ex.input, oc.mlm_rate, oc.mlm_cap, mask_rng, src_vocab);
      b.inputs.push_back(std::move(m.masked));
      b.masked_positions.push_back(std::move(m.positions));
      b.originals.push_back(std::move(m.originals));
    } else {
      b.inputs.push_back(ex.input);
      b.masked_positions.emplace_back();
      b.originals.emplace_back();
    }
    b.targets.push_back(ex.target);
  }
  return b;
}

enum class TrainTask { Translation, MlmOnly };

template <typename T>
struct JointLossNodes {
  typename GraphT<T>::NodeId total;
  double total_value = 0.0;
  double nll_value = 0.0;
  double mlm_value = 0.0;
  std::size_t target_tokens = 0;
  std::size_t masked_tokens = 0;
};

// Builds the joint loss over a batch on one graph. The translation term is
// the per-token NLL mean over all target tokens; the MLM term is the mean
// over all masked positions; total = nll + mlm_weight * mlm. For MlmOnly the
// decoder is not run and total is just the MLM mean.
template <typename T>
JointLossNodes<T> joint_loss_nodes(GraphT<T>& g, ParamBind<T>& pb, const MaskedBatch& batch,
                                   const ModelConfig& cfg, const ObjectiveConfig& oc,
                                   TrainTask task = TrainTask::Translation, bool train = false,
                                   Rng* rng = nullptr) {
  using NodeId = typename GraphT<T>::NodeId;
  if (batch.size() == 0) throw EmptyCorpus("joint_loss: empty batch");

  bool have_nll = false, have_mlm = false;
  NodeId nll_sum{}, mlm_sum{};
  std::size_t total_tokens = 0, total_masked = 0;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto enc = encoder_nodes(g, pb, batch.inputs[i], cfg, train, rng);

    if (task == TrainTask::Translation) {
      const Ids& y = batch.targets[i];
      if (y.size() < 2 || y.front() != Vocab::kBos || y.back() != Vocab::kEos)
        throw ConfigError("joint_loss: target must be [BOS] ... [EOS]");
      Ids prefix(y.begin(), y.end() - 1);
      Ids labels(y.begin() + 1, y.end());
      auto logits = decoder_nodes(g, pb, prefix, enc, batch.inputs[i].context_mask, cfg, train, rng);
      auto ce = g.cross_entropy_sum(logits, labels, static_cast<T>(oc.label_smoothing));
      nll_sum = have_nll ? g.add(nll_sum, ce) : ce;
      have_nll = true;
      total_tokens += labels.size();
    }

    const auto& positions = batch.masked_positions[i];
    if (!positions.empty()) {
      auto logits = mlm_nodes(g, pb, enc, positions, cfg);
      auto ce = g.cross_entropy_sum(logits, batch.originals[i]);
      mlm_sum = have_mlm ? g.add(mlm_sum, ce) : ce;
      have_mlm = true;
      total_masked += positions.size();
    }
  }

  JointLossNodes<T> out;
  out.target_tokens = total_tokens;
  out.masked_tokens = total_masked;

  NodeId nll{}, mlm{};
  if (have_nll) {
    nll = g.scale(nll_sum, T(1) / static_cast<T>(total_tokens));
    out.nll_value = static_cast<double>(g.value(nll).item());
  }
  if (have_mlm) {
    mlm = g.scale(mlm_sum, T(1) / static_cast<T>(total_masked));
    out.mlm_value = static_cast<double>(g.value(mlm).item());
  }

  if (task == TrainTask::MlmOnly) {
    if (!have_mlm) throw ConfigError("joint_loss: MLM-only task requires masked positions");
    out.total = mlm;
  } else if (have_mlm) {
    out.total = g.add(nll, g.scale(mlm, static_cast<T>(oc.mlm_weight)));
  } else {
    out.total = nll;
  }
  out.total_value = static_cast<double>(g.value(out.total).item());
  if (!std::isfinite(out.total_value))
    throw TrainingDiverged("joint_loss: non-finite loss (total=" + std::to_string(out.total_value) + ")");
  return out;
}

struct LossBreakdown {
  double total = 0.0;
  double nll = 0.0;
  double mlm = 0.0;
};

// Forward-only convenience used by tests and evaluation.
template <typename T>
LossBreakdown joint_loss(const MaskedBatch& batch, ModelParamsT<T>& params, const ModelConfig& cfg,
                         const ObjectiveConfig& oc, TrainTask task = TrainTask::Translation) {
  GraphT<T> g;
  ParamBind<T> pb(g, params, /*trainable=*/false);
  auto nodes = joint_loss_nodes(g, pb, batch, cfg, oc, task);
  return LossBreakdown{nodes.total_value, nodes.nll_value, nodes.mlm_value};
}

// Translation NLL of a set of examples, eval mode, no masking.
template <typename T>
double evaluate_nll(const std::vector<TrainExample>& examples, ModelParamsT<T>& params,
                    const ModelConfig& cfg) {
  if (examples.empty()) throw EmptyCorpus("evaluate_nll: no examples");
  double sum = 0.0;
  std::size_t tokens = 0;
  for (const TrainExample& ex : examples) {
    GraphT<T> g;
    ParamBind<T> pb(g, params, /*trainable=*/false);
    auto enc = encoder_nodes(g, pb, ex.input, cfg);
    Ids prefix(ex.target.begin(), ex.target.end() - 1);
    Ids labels(ex.target.begin() + 1, ex.target.end());
    auto logits = decoder_nodes(g, pb, prefix, enc, ex.input.context_mask, cfg);
    auto ce = g.cross_entropy_sum(logits, labels);
    sum += static_cast<double>(g.value(ce).item());
    tokens += labels.size();
  }
  return sum / static_cast<double>(tokens);
}

}  // namespace docmt
