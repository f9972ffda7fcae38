// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Training loop: Adam with the inverse-square-root warmup schedule, greedy
// token-count batching, optional gradient clipping, and divergence detection.
// Single-threaded and fully deterministic given seed, config, and corpus.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "docmt/objective.hpp"

namespace docmt {

struct TrainConfig {
  std::size_t max_steps = 1000;
  std::size_t tokens_per_batch = 3072;
  std::size_t warmup_steps = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  TrainTask task = TrainTask::Translation;
  std::size_t debug_nan_step = 0;  // testing hook: poison the loss at this step

  void validate() const {
    if (max_steps == 0 || tokens_per_batch == 0 || warmup_steps == 0)
      throw ConfigError("trainer: max_steps, tokens_per_batch and warmup_steps must be positive");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 || epsilon <= 0.0)
      throw ConfigError("trainer: invalid Adam hyperparameters");
  }
};

// d_model^-0.5 * min(step^-0.5, step * warmup^-1.5), the schedule of the
// original Transformer; peaks at step == warmup.
inline double lr_schedule(std::size_t step, std::size_t d_model, std::size_t warmup) {
  if (step == 0) throw ConfigError("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return 1.0 / std::sqrt(static_cast<double>(d_model)) * std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
}

template <typename T>
struct AdamStateT {
  std::size_t step = 0;
  std::map<std::string, TensorT<T>> m;
  std::map<std::string, TensorT<T>> v;
};

template <typename T>
void adam_update(TensorT<T>& param, const TensorT<T>& grad, TensorT<T>& m, TensorT<T>& v,
                 std::size_t step, double lr, double beta1, double beta2, double epsilon) {
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T corr1 = T(1) - static_cast<T>(std::pow(beta1, static_cast<double>(step)));
  const T corr2 = T(1) - static_cast<T>(std::pow(beta2, static_cast<double>(step)));
  const T a = static_cast<T>(lr), eps = static_cast<T>(epsilon);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T gi = grad.data[i];
    m.data[i] = b1 * m.data[i] + (T(1) - b1) * gi;
    v.data[i] = b2 * v.data[i] + (T(1) - b2) * gi * gi;
    const T mhat = m.data[i] / corr1;
    const T vhat = v.data[i] / corr2;
    param.data[i] -= a * mhat / (std::sqrt(vhat) + eps);
  }
}

// Shuffles example order and fills batches greedily; a batch closes when
// max(source tokens, target tokens) would exceed the budget. Every example
// lands in exactly one batch.
inline std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::pair<std::size_t, std::size_t>>& sizes, std::size_t tokens_per_batch, Rng& rng) {
  std::vector<std::size_t> order(sizes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, i))]);

  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  std::size_t src_sum = 0, tgt_sum = 0;
  for (std::size_t idx : order) {
    const auto [s, t] = sizes[idx];
    if (s > tokens_per_batch || t > tokens_per_batch)
      throw ExampleTooLong("make_batches: example of " + std::to_string(std::max(s, t)) +
                           " tokens exceeds budget " + std::to_string(tokens_per_batch));
    if (!cur.empty() && std::max(src_sum + s, tgt_sum + t) > tokens_per_batch) {
      batches.push_back(std::move(cur));
      cur.clear();
      src_sum = tgt_sum = 0;
    }
    cur.push_back(idx);
    src_sum += s;
    tgt_sum += t;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

struct StepMetrics {
  std::size_t step = 0;
  double total = 0.0;
  double nll = 0.0;
  double mlm = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

// One forward/backward pass and Adam update over a masked batch.
template <typename T>
StepMetrics train_step(ModelT<T>& model, AdamStateT<T>& opt, const MaskedBatch& batch,
                       const TrainConfig& tc, const ObjectiveConfig& oc, Rng& dropout_rng) {
  if (tc.debug_nan_step != 0 && opt.step + 1 == tc.debug_nan_step) {
    // Testing hook: corrupt an output bias so the forward pass genuinely
    // produces a non-finite loss and the detection path fires.
    const char* victim = tc.task == TrainTask::MlmOnly ? "mlm.output.bias" : "decoder.output.bias";
    model.params.at(victim).data[0] = std::numeric_limits<T>::quiet_NaN();
  }
  GraphT<T> g;
  ParamBind<T> pb(g, model.params, /*trainable=*/true);
  auto loss = joint_loss_nodes(g, pb, batch, model.config, oc, tc.task, /*train=*/true, &dropout_rng);
  g.backward(loss.total);

  std::vector<std::pair<std::string, const TensorT<T>*>> grads;
  double norm_sq = 0.0;
  for (const auto& [name, node] : pb.bound()) {
    const TensorT<T>* grad = g.grad(node);
    if (!grad) continue;
    grads.emplace_back(name, grad);
    for (T x : grad->data) norm_sq += static_cast<double>(x) * static_cast<double>(x);
  }
  const double grad_norm = std::sqrt(norm_sq);
  T clip_scale = T(1);
  if (tc.clip_norm > 0.0 && grad_norm > tc.clip_norm)
    clip_scale = static_cast<T>(tc.clip_norm / grad_norm);

  opt.step += 1;
  const double lr = lr_schedule(opt.step, model.config.d_model, tc.warmup_steps);
  for (auto& [name, grad] : grads) {
    TensorT<T>& param = model.params.at(name);
    auto mi = opt.m.find(name);
    if (mi == opt.m.end()) {
      mi = opt.m.emplace(name, TensorT<T>::zeros(param.shape)).first;
      opt.v.emplace(name, TensorT<T>::zeros(param.shape));
    }
    if (clip_scale != T(1)) {
      TensorT<T> scaled = *grad;
      for (T& x : scaled.data) x *= clip_scale;
      adam_update(param, scaled, mi->second, opt.v.at(name), opt.step, lr, tc.beta1, tc.beta2, tc.epsilon);
    } else {
      adam_update(param, *grad, mi->second, opt.v.at(name), opt.step, lr, tc.beta1, tc.beta2, tc.epsilon);
    }
  }
  return StepMetrics{opt.step, loss.total_value, loss.nll_value, loss.mlm_value, lr, grad_norm};
}

// Runs up to max_steps over the example set, re-batching every epoch.
// on_step fires after every update; on_checkpoint fires every
// checkpoint_every steps and once more at the end.
template <typename T>
void train_loop(ModelT<T>& model, const std::vector<TrainExample>& examples, const TrainConfig& tc,
                const ObjectiveConfig& oc,
                const std::function<void(const StepMetrics&)>& on_step = nullptr,
                const std::function<void(std::size_t, const ModelT<T>&)>& on_checkpoint = nullptr) {
  tc.validate();
  if (examples.empty()) throw EmptyCorpus("train: no examples");

  std::vector<std::pair<std::size_t, std::size_t>> sizes;
  sizes.reserve(examples.size());
  for (const TrainExample& ex : examples)
    sizes.emplace_back(ex.input.source_span.length(),
                       ex.target.size() >= 2 ? ex.target.size() - 2 : 0);

  Rng batch_rng = make_rng(tc.seed, 1);
  Rng mask_rng = make_rng(tc.seed, 2);
  Rng dropout_rng = make_rng(tc.seed, 3);
  AdamStateT<T> opt;

  ObjectiveConfig effective = oc;
  if (tc.task == TrainTask::MlmOnly) effective.mlm_enabled = true;

  while (opt.step < tc.max_steps) {
    const auto batches = make_batches(sizes, tc.tokens_per_batch, batch_rng);
    for (const auto& batch_indices : batches) {
      MaskedBatch batch =
          make_masked_batch(examples, batch_indices, effective, model.config.src_vocab, mask_rng);
      StepMetrics metrics = train_step(model, opt, batch, tc, effective, dropout_rng);
      if (on_step) on_step(metrics);
      if (on_checkpoint && tc.checkpoint_every != 0 && opt.step % tc.checkpoint_every == 0)
        on_checkpoint(opt.step, model);
      if (opt.step >= tc.max_steps) break;
    }
  }
  if (on_checkpoint) on_checkpoint(opt.step, model);
}

}  // namespace docmt
