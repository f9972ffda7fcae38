// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration. Unknown keys are rejected; values
// round-trip exactly (floating-point keys are written with shortest
// round-trip formatting), so the effective config echoed into a run
// directory reproduces the run.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "docmt/context.hpp"
#include "docmt/error.hpp"
#include "docmt/model.hpp"
#include "docmt/objective.hpp"
#include "docmt/trainer.hpp"

namespace docmt {

struct RunConfig {
  // data
  std::string corpus;     // binarized corpus (DCP1)
  std::string vocab_src;  // vocab files, one token per line
  std::string vocab_tgt;
  std::string run_dir = "run";
  std::string pretrained_checkpoint;  // optional NTC1 to initialize the encoder
  bool strict_init = false;

  // model
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ffn = 256;
  std::size_t enc_layers = 2;
  std::size_t dec_layers = 2;
  std::size_t max_positions = 512;
  double dropout = 0.1;
  double init_std = 0.02;
  std::string position_mode = "reversed";  // sequential | reversed
  std::string context = "large";           // none | small | large
  bool segment_embeddings = true;
  bool context_masks = true;

  // objective
  std::string task = "translate";  // translate | mlm
  bool mlm = false;
  double mlm_rate = 0.16;
  std::size_t mlm_cap = 20;
  double mlm_weight = 1.0;
  double label_smoothing = 0.0;

  // training
  std::size_t max_steps = 1000;
  std::size_t tokens_per_batch = 3072;
  std::size_t warmup_steps = 4000;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  double clip_norm = 1.0;
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 1;
  std::size_t debug_nan_step = 0;

  // search
  std::size_t beam = 4;
  double length_penalty_alpha = 1.0;

  PositionMode position_mode_enum() const {
    if (position_mode == "sequential") return PositionMode::Sequential;
    if (position_mode == "reversed") return PositionMode::Reversed;
    throw ConfigError("position_mode must be sequential or reversed, got " + position_mode);
  }
  ContextMode context_enum() const {
    if (context == "none") return ContextMode::None;
    if (context == "small") return ContextMode::Small;
    if (context == "large") return ContextMode::Large;
    throw ConfigError("context must be none, small or large, got " + context);
  }
  TrainTask task_enum() const {
    if (task == "translate") return TrainTask::Translation;
    if (task == "mlm") return TrainTask::MlmOnly;
    throw ConfigError("task must be translate or mlm, got " + task);
  }

  ModelConfig model_config(std::size_t src_vocab_size, std::size_t tgt_vocab_size) const {
    ModelConfig m;
    m.d_model = d_model;
    m.n_heads = n_heads;
    m.d_ffn = d_ffn;
    m.enc_layers = enc_layers;
    m.dec_layers = dec_layers;
    m.max_positions = max_positions;
    m.src_vocab = src_vocab_size;
    m.tgt_vocab = tgt_vocab_size;
    m.dropout = dropout;
    m.init_std = init_std;
    m.position_mode = position_mode_enum();
    m.use_segment_embeddings = segment_embeddings;
    m.use_context_mask = context_masks;
    m.validate();
    return m;
  }

  TrainConfig train_config() const {
    TrainConfig t;
    t.max_steps = max_steps;
    t.tokens_per_batch = tokens_per_batch;
    t.warmup_steps = warmup_steps;
    t.beta1 = beta1;
    t.beta2 = beta2;
    t.epsilon = epsilon;
    t.clip_norm = clip_norm;
    t.seed = seed;
    t.checkpoint_every = checkpoint_every;
    t.task = task_enum();
    t.debug_nan_step = debug_nan_step;
    t.validate();
    return t;
  }

  ObjectiveConfig objective_config() const {
    ObjectiveConfig o;
    o.mlm_enabled = mlm || task_enum() == TrainTask::MlmOnly;
    o.mlm_rate = mlm_rate;
    o.mlm_cap = mlm_cap;
    o.mlm_weight = mlm_weight;
    o.label_smoothing = label_smoothing;
    return o;
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw ConfigError("cannot format double");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config: " + key + ": expected a number, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("config: " + key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config: " + key + ": expected a boolean, got '" + s + "'");
}

}  // namespace detail

// Field table: name, getter (to string), setter (from string). Single source
// of truth for parsing, serialization, and the CLI flag mirror.
struct ConfigField {
  std::string key;
  std::string (*get)(const RunConfig&);
  void (*set)(RunConfig&, const std::string&);
};

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = {
#define DOCMT_STR_FIELD(NAME)                                             \
  {#NAME, [](const RunConfig& c) { return c.NAME; },                      \
   [](RunConfig& c, const std::string& v) { c.NAME = v; }}
#define DOCMT_SIZE_FIELD(NAME)                                                            \
  {#NAME, [](const RunConfig& c) { return std::to_string(c.NAME); },                      \
   [](RunConfig& c, const std::string& v) {                                               \
     c.NAME = static_cast<std::size_t>(detail::parse_u64(#NAME, v));                      \
   }}
#define DOCMT_DOUBLE_FIELD(NAME)                                                \
  {#NAME, [](const RunConfig& c) { return detail::format_double(c.NAME); },     \
   [](RunConfig& c, const std::string& v) { c.NAME = detail::parse_double(#NAME, v); }}
#define DOCMT_BOOL_FIELD(NAME)                                                 \
  {#NAME, [](const RunConfig& c) { return std::string(c.NAME ? "true" : "false"); }, \
   [](RunConfig& c, const std::string& v) { c.NAME = detail::parse_bool(#NAME, v); }}
      DOCMT_STR_FIELD(corpus),
      DOCMT_STR_FIELD(vocab_src),
      DOCMT_STR_FIELD(vocab_tgt),
      DOCMT_STR_FIELD(run_dir),
      DOCMT_STR_FIELD(pretrained_checkpoint),
      DOCMT_BOOL_FIELD(strict_init),
      DOCMT_SIZE_FIELD(d_model),
      DOCMT_SIZE_FIELD(n_heads),
      DOCMT_SIZE_FIELD(d_ffn),
      DOCMT_SIZE_FIELD(enc_layers),
      DOCMT_SIZE_FIELD(dec_layers),
      DOCMT_SIZE_FIELD(max_positions),
      DOCMT_DOUBLE_FIELD(dropout),
      DOCMT_DOUBLE_FIELD(init_std),
      DOCMT_STR_FIELD(position_mode),
      DOCMT_STR_FIELD(context),
      DOCMT_BOOL_FIELD(segment_embeddings),
      DOCMT_BOOL_FIELD(context_masks),
      DOCMT_STR_FIELD(task),
      DOCMT_BOOL_FIELD(mlm),
      DOCMT_DOUBLE_FIELD(mlm_rate),
      DOCMT_SIZE_FIELD(mlm_cap),
      DOCMT_DOUBLE_FIELD(mlm_weight),
      DOCMT_DOUBLE_FIELD(label_smoothing),
      DOCMT_SIZE_FIELD(max_steps),
      DOCMT_SIZE_FIELD(tokens_per_batch),
      DOCMT_SIZE_FIELD(warmup_steps),
      DOCMT_DOUBLE_FIELD(beta1),
      DOCMT_DOUBLE_FIELD(beta2),
      DOCMT_DOUBLE_FIELD(epsilon),
      DOCMT_DOUBLE_FIELD(clip_norm),
      DOCMT_SIZE_FIELD(checkpoint_every),
      {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) { c.seed = detail::parse_u64("seed", v); }},
      DOCMT_SIZE_FIELD(debug_nan_step),
      DOCMT_SIZE_FIELD(beam),
      DOCMT_DOUBLE_FIELD(length_penalty_alpha),
#undef DOCMT_STR_FIELD
#undef DOCMT_SIZE_FIELD
#undef DOCMT_DOUBLE_FIELD
#undef DOCMT_BOOL_FIELD
  };
  return fields;
}

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const ConfigField& f : config_fields()) {
    if (f.key == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto notspace = [](unsigned char c) { return !std::isspace(c); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
    value.erase(value.begin(), std::find_if(value.begin(), value.end(), notspace));
    apply_config_entry(base, key, value);
  }
  return base;
}

inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

inline std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const ConfigField& f : config_fields()) os << f.key << " = " << f.get(cfg) << "\n";
  return os.str();
}

inline void save_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write config file " + path);
  f << serialize_config(cfg);
}

}  // namespace docmt
