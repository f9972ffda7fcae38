// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Pre-norm transformer encoder-decoder. The encoder embeds token + segment +
// position and runs full bidirectional self-attention (source and context see
// each other); the decoder runs causal self-attention plus cross-attention
// that can be restricted to source positions via the context mask. An MLM
// head over encoder states shares the source token embedding table.
//
// Every learnable tensor lives in ModelParamsT under a stable name; the
// name->shape table is the contract for checkpoints (see README).

#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "docmt/context.hpp"
#include "docmt/graph.hpp"
#include "docmt/rng.hpp"
#include "docmt/tensor.hpp"

namespace docmt {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 256;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t max_positions = 512;
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  double dropout = 0.1;
  double init_std = 0.02;
  PositionMode position_mode = PositionMode::Reversed;
  bool use_segment_embeddings = true;
  bool use_context_mask = true;

  std::size_t head_dim() const { return d_model / n_heads; }

  void validate() const {
    if (d_model == 0 || n_heads == 0 || d_ffn == 0 || enc_layers == 0 || dec_layers == 0)
      throw ConfigError("model: all dimensions must be positive");
    if (d_model % n_heads != 0) throw ConfigError("model: d_model must be divisible by n_heads");
    if (src_vocab < static_cast<std::size_t>(Vocab::kNumSpecials) ||
        tgt_vocab < static_cast<std::size_t>(Vocab::kNumSpecials))
      throw ConfigError("model: vocab sizes must cover the special tokens");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model: dropout must be in [0,1)");
  }
};

inline constexpr double kLayerNormEps = 1e-5;

namespace names {

inline std::string enc_layer(std::size_t i, const std::string& rest) {
  return "encoder.layer." + std::to_string(i) + "." + rest;
}
inline std::string dec_layer(std::size_t i, const std::string& rest) {
  return "decoder.layer." + std::to_string(i) + "." + rest;
}

}  // namespace names

// Name -> shape for every learnable tensor of a given configuration.
inline std::vector<std::pair<std::string, Shape>> shape_table(const ModelConfig& c) {
  std::vector<std::pair<std::string, Shape>> t;
  const std::size_t d = c.d_model, f = c.d_ffn;
  auto norm = [&](const std::string& p) {
    t.push_back({p + ".gain", {d}});
    t.push_back({p + ".bias", {d}});
  };
  auto attn = [&](const std::string& p) {
    for (const char* w : {"q", "k", "v", "o"}) {
      t.push_back({p + "." + w + ".weight", {d, d}});
      t.push_back({p + "." + w + ".bias", {d}});
    }
  };
  auto ffn = [&](const std::string& p) {
    t.push_back({p + ".in.weight", {d, f}});
    t.push_back({p + ".in.bias", {f}});
    t.push_back({p + ".out.weight", {f, d}});
    t.push_back({p + ".out.bias", {d}});
  };

  t.push_back({"encoder.embed.token", {c.src_vocab, d}});
  t.push_back({"encoder.embed.segment", {2, d}});
  t.push_back({"encoder.embed.position", {c.max_positions, d}});
  for (std::size_t i = 0; i < c.enc_layers; ++i) {
    attn(names::enc_layer(i, "attn"));
    norm(names::enc_layer(i, "attn_norm"));
    ffn(names::enc_layer(i, "ffn"));
    norm(names::enc_layer(i, "ffn_norm"));
  }
  norm("encoder.final_norm");

  t.push_back({"decoder.embed.token", {c.tgt_vocab, d}});
  t.push_back({"decoder.embed.position", {c.max_positions, d}});
  for (std::size_t i = 0; i < c.dec_layers; ++i) {
    attn(names::dec_layer(i, "self_attn"));
    norm(names::dec_layer(i, "self_norm"));
    attn(names::dec_layer(i, "cross_attn"));
    norm(names::dec_layer(i, "cross_norm"));
    ffn(names::dec_layer(i, "ffn"));
    norm(names::dec_layer(i, "ffn_norm"));
  }
  norm("decoder.final_norm");
  t.push_back({"decoder.output.weight", {d, c.tgt_vocab}});
  t.push_back({"decoder.output.bias", {c.tgt_vocab}});

  // MLM head; its output projection is tied to encoder.embed.token.
  t.push_back({"mlm.transform.weight", {d, d}});
  t.push_back({"mlm.transform.bias", {d}});
  t.push_back({"mlm.output.bias", {c.src_vocab}});
  return t;
}

template <typename T>
struct ModelParamsT {
  std::map<std::string, TensorT<T>> tensors;

  static ModelParamsT init(const ModelConfig& cfg, Rng& rng) {
    cfg.validate();
    ModelParamsT p;
    for (const auto& [name, shape] : shape_table(cfg)) {
      if (name.ends_with(".gain")) {
        p.tensors.emplace(name, TensorT<T>::full(shape, T(1)));
      } else if (name.ends_with(".bias")) {
        p.tensors.emplace(name, TensorT<T>::zeros(shape));
      } else {
        p.tensors.emplace(name, TensorT<T>::randn(shape, rng, static_cast<T>(cfg.init_std)));
      }
    }
    return p;
  }

  TensorT<T>& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("no parameter named " + name);
    return it->second;
  }
  const TensorT<T>& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("no parameter named " + name);
    return it->second;
  }

  template <typename U>
  ModelParamsT<U> cast() const {
    ModelParamsT<U> out;
    for (const auto& [k, v] : tensors) out.tensors.emplace(k, v.template cast<U>());
    return out;
  }
};

template <typename T>
struct ModelT {
  ModelConfig config;
  ModelParamsT<T> params;

  static ModelT init(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng = make_rng(seed, /*tag=*/0xD0C);
    return ModelT{cfg, ModelParamsT<T>::init(cfg, rng)};
  }
};

// Binds parameter tensors into a graph as aliased leaves, at most once each.
// The ModelParamsT must outlive the graph.
template <typename T>
class ParamBind {
 public:
  using NodeId = typename GraphT<T>::NodeId;

  ParamBind(GraphT<T>& g, ModelParamsT<T>& params, bool trainable)
      : g_(&g), params_(&params), trainable_(trainable) {}

  NodeId operator[](const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    NodeId id = g_->leaf_ref(&params_->at(name), trainable_);
    bound_.emplace(name, id);
    return id;
  }

  const std::map<std::string, NodeId>& bound() const { return bound_; }

 private:
  GraphT<T>* g_;
  ModelParamsT<T>* params_;
  bool trainable_;
  std::map<std::string, NodeId> bound_;
};

namespace detail {

template <typename T>
typename GraphT<T>::NodeId linear(GraphT<T>& g, ParamBind<T>& pb, typename GraphT<T>::NodeId x,
                                  const std::string& prefix) {
  return g.add_bias(g.matmul(x, pb[prefix + ".weight"]), pb[prefix + ".bias"]);
}

template <typename T>
typename GraphT<T>::NodeId multi_head_attention(GraphT<T>& g, ParamBind<T>& pb, const std::string& prefix,
                                                typename GraphT<T>::NodeId q_in,
                                                typename GraphT<T>::NodeId kv_in, const Mask& mask,
                                                const ModelConfig& cfg, bool train, Rng* rng) {
  const std::size_t dh = cfg.head_dim();
  auto q = linear(g, pb, q_in, prefix + ".q");
  auto k = linear(g, pb, kv_in, prefix + ".k");
  auto v = linear(g, pb, kv_in, prefix + ".v");
  std::vector<typename GraphT<T>::NodeId> heads;
  heads.reserve(cfg.n_heads);
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  for (std::size_t h = 0; h < cfg.n_heads; ++h) {
    auto qh = g.slice_cols(q, h * dh, (h + 1) * dh);
    auto kh = g.slice_cols(k, h * dh, (h + 1) * dh);
    auto vh = g.slice_cols(v, h * dh, (h + 1) * dh);
    auto scores = g.scale(g.matmul_nt(qh, kh), inv_sqrt);
    auto probs = g.masked_softmax(scores, mask);
    if (train && cfg.dropout > 0.0 && rng)
      probs = g.dropout(probs, static_cast<T>(cfg.dropout), *rng, true);
    heads.push_back(g.matmul(probs, vh));
  }
  auto cat = cfg.n_heads == 1 ? heads[0] : g.concat_cols(heads);
  return linear(g, pb, cat, prefix + ".o");
}

template <typename T>
typename GraphT<T>::NodeId feed_forward(GraphT<T>& g, ParamBind<T>& pb, const std::string& prefix,
                                        typename GraphT<T>::NodeId x) {
  return linear(g, pb, g.gelu(linear(g, pb, x, prefix + ".in")), prefix + ".out");
}

template <typename T>
typename GraphT<T>::NodeId maybe_dropout(GraphT<T>& g, typename GraphT<T>::NodeId x, const ModelConfig& cfg,
                                         bool train, Rng* rng) {
  if (train && cfg.dropout > 0.0 && rng) return g.dropout(x, static_cast<T>(cfg.dropout), *rng, true);
  return x;
}

}  // namespace detail

// Encoder forward as graph nodes; returns the [L, d_model] hidden-state node.
template <typename T>
typename GraphT<T>::NodeId encoder_nodes(GraphT<T>& g, ParamBind<T>& pb, const ExtendedInput& x,
                                         const ModelConfig& cfg, bool train = false, Rng* rng = nullptr) {
  const std::size_t n = x.length();
  if (n == 0) throw EmptySource("encode: empty input");
  if (n > cfg.max_positions)
    throw PositionOverflow("encode: input length " + std::to_string(n) + " exceeds max_positions " +
                           std::to_string(cfg.max_positions));
  for (std::int32_t id : x.token_ids)
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.src_vocab)
      throw IdOutOfRange("encode: token id " + std::to_string(id) + " out of vocab range");
  for (std::int32_t p : x.position_ids)
    if (p < 0 || static_cast<std::size_t>(p) >= cfg.max_positions)
      throw PositionOverflow("encode: position id " + std::to_string(p) + " out of range");

  const T eps = static_cast<T>(kLayerNormEps);
  auto h = g.add(g.rows(pb["encoder.embed.token"], x.token_ids),
                 g.rows(pb["encoder.embed.position"], x.position_ids));
  if (cfg.use_segment_embeddings)
    h = g.add(h, g.rows(pb["encoder.embed.segment"], x.segment_ids));
  h = detail::maybe_dropout(g, h, cfg, train, rng);

  const Mask no_mask;  // encoder self-attention is fully bidirectional
  for (std::size_t i = 0; i < cfg.enc_layers; ++i) {
    const std::string attn_norm = names::enc_layer(i, "attn_norm");
    auto ln1 = g.layer_norm(h, pb[attn_norm + ".gain"], pb[attn_norm + ".bias"], eps);
    auto attn = detail::multi_head_attention(g, pb, names::enc_layer(i, "attn"), ln1, ln1, no_mask, cfg,
                                             train, rng);
    h = g.add(h, detail::maybe_dropout(g, attn, cfg, train, rng));
    const std::string ffn_norm = names::enc_layer(i, "ffn_norm");
    auto ln2 = g.layer_norm(h, pb[ffn_norm + ".gain"], pb[ffn_norm + ".bias"], eps);
    auto ffn = detail::feed_forward(g, pb, names::enc_layer(i, "ffn"), ln2);
    h = g.add(h, detail::maybe_dropout(g, ffn, cfg, train, rng));
  }
  return g.layer_norm(h, pb["encoder.final_norm.gain"], pb["encoder.final_norm.bias"], eps);
}

// Decoder forward as graph nodes; returns next-token logits [T, tgt_vocab].
// Cross-attention hides positions where enc_context_mask is set (when the
// context mask is enabled in the configuration).
template <typename T>
typename GraphT<T>::NodeId decoder_nodes(GraphT<T>& g, ParamBind<T>& pb, const Ids& prefix,
                                         typename GraphT<T>::NodeId enc_hidden,
                                         const std::vector<std::uint8_t>& enc_context_mask,
                                         const ModelConfig& cfg, bool train = false, Rng* rng = nullptr) {
  if (prefix.empty()) throw EmptyPrefix("decode: empty target prefix");
  if (prefix.front() != Vocab::kBos) throw EmptyPrefix("decode: prefix must begin with [BOS]");
  const std::size_t t_len = prefix.size();
  if (t_len > cfg.max_positions) throw PositionOverflow("decode: prefix exceeds max_positions");
  for (std::int32_t id : prefix)
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.tgt_vocab)
      throw IdOutOfRange("decode: token id " + std::to_string(id) + " out of vocab range");
  const std::size_t enc_len = g.value(enc_hidden).rows();
  if (enc_context_mask.size() != enc_len) throw ShapeError("decode: context mask length mismatch");

  const T eps = static_cast<T>(kLayerNormEps);
  std::vector<std::int32_t> dec_positions(t_len);
  std::iota(dec_positions.begin(), dec_positions.end(), 0);
  auto h = g.add(g.rows(pb["decoder.embed.token"], prefix),
                 g.rows(pb["decoder.embed.position"], dec_positions));
  h = detail::maybe_dropout(g, h, cfg, train, rng);

  const Mask causal = Mask::causal(t_len);
  const Mask cross = cfg.use_context_mask ? Mask::rows_from(t_len, enc_context_mask) : Mask();
  for (std::size_t i = 0; i < cfg.dec_layers; ++i) {
    const std::string self_norm = names::dec_layer(i, "self_norm");
    auto ln1 = g.layer_norm(h, pb[self_norm + ".gain"], pb[self_norm + ".bias"], eps);
    auto self_attn = detail::multi_head_attention(g, pb, names::dec_layer(i, "self_attn"), ln1, ln1,
                                                  causal, cfg, train, rng);
    h = g.add(h, detail::maybe_dropout(g, self_attn, cfg, train, rng));

    const std::string cross_norm = names::dec_layer(i, "cross_norm");
    auto ln2 = g.layer_norm(h, pb[cross_norm + ".gain"], pb[cross_norm + ".bias"], eps);
    auto cross_attn = detail::multi_head_attention(g, pb, names::dec_layer(i, "cross_attn"), ln2,
                                                   enc_hidden, cross, cfg, train, rng);
    h = g.add(h, detail::maybe_dropout(g, cross_attn, cfg, train, rng));

    const std::string ffn_norm = names::dec_layer(i, "ffn_norm");
    auto ln3 = g.layer_norm(h, pb[ffn_norm + ".gain"], pb[ffn_norm + ".bias"], eps);
    auto ffn = detail::feed_forward(g, pb, names::dec_layer(i, "ffn"), ln3);
    h = g.add(h, detail::maybe_dropout(g, ffn, cfg, train, rng));
  }
  h = g.layer_norm(h, pb["decoder.final_norm.gain"], pb["decoder.final_norm.bias"], eps);
  return g.add_bias(g.matmul(h, pb["decoder.output.weight"]), pb["decoder.output.bias"]);
}

// MLM logits over the source vocabulary at the requested encoder positions.
// The output projection reuses the encoder token embedding table.
template <typename T>
typename GraphT<T>::NodeId mlm_nodes(GraphT<T>& g, ParamBind<T>& pb, typename GraphT<T>::NodeId enc_hidden,
                                     const std::vector<std::int32_t>& positions, const ModelConfig& cfg) {
  const std::size_t enc_len = g.value(enc_hidden).rows();
  for (std::int32_t p : positions)
    if (p < 0 || static_cast<std::size_t>(p) >= enc_len)
      throw IdOutOfRange("mlm_logits: position " + std::to_string(p) + " out of range");
  auto picked = g.rows(enc_hidden, positions);
  auto transformed = g.gelu(detail::linear(g, pb, picked, "mlm.transform"));
  return g.add_bias(g.matmul_nt(transformed, pb["encoder.embed.token"]), pb["mlm.output.bias"]);
}

// ---- plain-tensor front end (inference & tests) ---------------------------

template <typename T>
struct EncoderOutputT {
  TensorT<T> hidden;                       // [L, d_model]
  std::vector<std::uint8_t> context_mask;  // length L
};

template <typename T>
EncoderOutputT<T> encode(const ExtendedInput& x, ModelParamsT<T>& params, const ModelConfig& cfg,
                         bool train = false, Rng* rng = nullptr) {
  GraphT<T> g;
  ParamBind<T> pb(g, params, /*trainable=*/false);
  auto h = encoder_nodes(g, pb, x, cfg, train, rng);
  return EncoderOutputT<T>{g.value(h), x.context_mask};
}

template <typename T>
TensorT<T> decode(const Ids& prefix, const EncoderOutputT<T>& enc, ModelParamsT<T>& params,
                  const ModelConfig& cfg, bool train = false, Rng* rng = nullptr) {
  GraphT<T> g;
  ParamBind<T> pb(g, params, /*trainable=*/false);
  auto enc_node = g.leaf_ref(&enc.hidden, false);
  auto logits = decoder_nodes(g, pb, prefix, enc_node, enc.context_mask, cfg, train, rng);
  return g.value(logits);
}

template <typename T>
TensorT<T> mlm_logits(const EncoderOutputT<T>& enc, const std::vector<std::int32_t>& positions,
                      ModelParamsT<T>& params, const ModelConfig& cfg) {
  if (positions.empty()) return TensorT<T>({0, cfg.src_vocab});
  GraphT<T> g;
  ParamBind<T> pb(g, params, /*trainable=*/false);
  auto enc_node = g.leaf_ref(&enc.hidden, false);
  auto logits = mlm_nodes(g, pb, enc_node, positions, cfg);
  return g.value(logits);
}

}  // namespace docmt
