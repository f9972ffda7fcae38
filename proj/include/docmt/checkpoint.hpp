// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// NTC1 named-tensor checkpoints.
//
// File layout (all integers little-endian):
//   magic "NTC1"
//   u32 entry count
//   per entry: u16 name length, name bytes (UTF-8),
//              u8 dtype (0 = f32, 1 = f64), u8 rank, rank * u32 dims,
//              raw data (row-major, IEEE-754 little-endian)
//   optional metadata block, present only when non-empty:
//              u32 pair count, per pair: u16 key length, key,
//              u32 value length, value
//
// Entries are written in name order, so identical contents produce identical
// bytes. save followed by load restores a checkpoint bit-for-bit.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "docmt/model.hpp"
#include "docmt/tensor.hpp"

namespace docmt {

enum class Dtype : std::uint8_t { F32 = 0, F64 = 1 };

inline const char* to_string(Dtype d) { return d == Dtype::F32 ? "f32" : "f64"; }

struct CheckpointEntry {
  Dtype dtype = Dtype::F32;
  Shape dims;
  std::vector<std::uint8_t> raw;  // little-endian scalar bytes

  std::size_t scalar_size() const { return dtype == Dtype::F32 ? 4 : 8; }
  std::size_t count() const { return numel(dims); }

  template <typename T>
  static CheckpointEntry from_tensor(const TensorT<T>& t) {
    CheckpointEntry e;
    e.dtype = sizeof(T) == 4 ? Dtype::F32 : Dtype::F64;
    e.dims = t.shape;
    e.raw.resize(t.size() * sizeof(T));
    for (std::size_t i = 0; i < t.size(); ++i) {
      if constexpr (sizeof(T) == 4) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.data[i]));
        for (int b = 0; b < 4; ++b) e.raw[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
      } else {
        const auto bits = std::bit_cast<std::uint64_t>(static_cast<double>(t.data[i]));
        for (int b = 0; b < 8; ++b) e.raw[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
      }
    }
    return e;
  }

  template <typename T>
  TensorT<T> to_tensor() const {
    TensorT<T> t(dims);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (dtype == Dtype::F32) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
        t.data[i] = static_cast<T>(std::bit_cast<float>(bits));
      } else {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
        t.data[i] = static_cast<T>(std::bit_cast<double>(bits));
      }
    }
    return t;
  }

  bool operator==(const CheckpointEntry& o) const {
    return dtype == o.dtype && dims == o.dims && raw == o.raw;
  }
};

struct Checkpoint {
  std::map<std::string, CheckpointEntry> entries;
  std::map<std::string, std::string> metadata;

  bool operator==(const Checkpoint& o) const {
    return entries == o.entries && metadata == o.metadata;
  }

  template <typename T>
  void put(const std::string& name, const TensorT<T>& t) {
    if (entries.count(name)) throw DuplicateName("checkpoint: duplicate entry " + name);
    entries.emplace(name, CheckpointEntry::from_tensor(t));
  }

  bool has(const std::string& name) const { return entries.count(name) != 0; }

  template <typename T>
  TensorT<T> get(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw ConfigError("checkpoint: no entry named " + name);
    return it->second.template to_tensor<T>();
  }
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

struct ByteReader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw TruncatedFile("checkpoint: unexpected end of file");
  }
  std::uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf[pos] | (buf[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(buf[pos + b]) << (8 * b);
    pos += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> v(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                                buf.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return v;
  }
  bool done() const { return pos == buf.size(); }
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize(const Checkpoint& c) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'N', 'T', 'C', '1'});
  detail::put_u32(out, static_cast<std::uint32_t>(c.entries.size()));
  for (const auto& [name, e] : c.entries) {
    detail::put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<std::uint8_t>(e.dtype));
    out.push_back(static_cast<std::uint8_t>(e.dims.size()));
    for (std::size_t d : e.dims) detail::put_u32(out, static_cast<std::uint32_t>(d));
    out.insert(out.end(), e.raw.begin(), e.raw.end());
  }
  if (!c.metadata.empty()) {
    detail::put_u32(out, static_cast<std::uint32_t>(c.metadata.size()));
    for (const auto& [k, v] : c.metadata) {
      detail::put_u16(out, static_cast<std::uint16_t>(k.size()));
      out.insert(out.end(), k.begin(), k.end());
      detail::put_u32(out, static_cast<std::uint32_t>(v.size()));
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

inline Checkpoint deserialize(const std::vector<std::uint8_t>& buf) {
  detail::ByteReader r{buf};
  if (r.str(4) != "NTC1") throw BadMagic("checkpoint: bad magic, expected NTC1");
  Checkpoint c;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str(r.u16());
    CheckpointEntry e;
    const std::uint8_t dt = r.u8();
    if (dt > 1) throw TruncatedFile("checkpoint: unknown dtype " + std::to_string(dt));
    e.dtype = static_cast<Dtype>(dt);
    const std::uint8_t rank = r.u8();
    e.dims.resize(rank);
    for (std::uint8_t d = 0; d < rank; ++d) e.dims[d] = r.u32();
    e.raw = r.bytes(e.count() * e.scalar_size());
    if (!c.entries.emplace(name, std::move(e)).second)
      throw DuplicateName("checkpoint: duplicate entry " + name);
  }
  if (!r.done()) {
    const std::uint32_t pairs = r.u32();
    for (std::uint32_t i = 0; i < pairs; ++i) {
      const std::string k = r.str(r.u16());
      const std::string v = r.str(r.u32());
      c.metadata.emplace(k, v);
    }
    if (!r.done()) throw TruncatedFile("checkpoint: trailing bytes after metadata");
  }
  return c;
}

inline void save(const Checkpoint& c, const std::string& path) {
  const auto bytes = serialize(c);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write on checkpoint " + path);
}

inline Checkpoint load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

template <typename T>
Checkpoint checkpoint_from(const ModelParamsT<T>& params,
                           std::map<std::string, std::string> metadata = {}) {
  Checkpoint c;
  c.metadata = std::move(metadata);
  for (const auto& [name, t] : params.tensors) c.put(name, t);
  return c;
}

template <typename T>
void params_from_checkpoint(ModelParamsT<T>& params, const Checkpoint& c) {
  for (auto& [name, t] : params.tensors) {
    auto it = c.entries.find(name);
    if (it == c.entries.end()) throw ShapeMismatch("checkpoint: missing parameter " + name);
    if (it->second.dims != t.shape)
      throw ShapeMismatch("checkpoint: shape mismatch for " + name + ": expected " + shape_str(t.shape) +
                          ", found " + shape_str(it->second.dims));
    t = it->second.template to_tensor<T>();
  }
}

struct InitReport {
  std::vector<std::string> initialized;
  std::vector<std::string> skipped;     // checkpoint entries with no matching parameter
  std::vector<std::string> mismatched;  // name matched, shape did not
};

// Copies every encoder-side checkpoint tensor whose name and shape match into
// `params`. A longer pretrained position table is truncated to the model's
// max_positions. Checkpoint layers beyond enc_layers simply find no matching
// name and are reported as skipped, which selects the bottom layers. Nothing
// outside the returned `initialized` list is modified; in strict mode a shape
// mismatch throws before any copy happens.
template <typename T>
InitReport init_encoder(ModelParamsT<T>& params, const Checkpoint& ckpt, bool strict = false) {
  InitReport report;
  std::vector<std::pair<std::string, TensorT<T>>> pending;
  for (const auto& [name, entry] : ckpt.entries) {
    if (!name.starts_with("encoder.")) {
      report.skipped.push_back(name);
      continue;
    }
    auto it = params.tensors.find(name);
    if (it == params.tensors.end()) {
      report.skipped.push_back(name);
      continue;
    }
    const Shape& want = it->second.shape;
    if (entry.dims == want) {
      pending.emplace_back(name, entry.template to_tensor<T>());
      report.initialized.push_back(name);
    } else if (name == "encoder.embed.position" && entry.dims.size() == 2 && want.size() == 2 &&
               entry.dims[1] == want[1] && entry.dims[0] > want[0]) {
      TensorT<T> full = entry.template to_tensor<T>();
      TensorT<T> cut(want);
      std::copy_n(full.data.begin(), cut.size(), cut.data.begin());
      pending.emplace_back(name, std::move(cut));
      report.initialized.push_back(name);
    } else {
      report.mismatched.push_back(name);
    }
  }
  if (strict && !report.mismatched.empty())
    throw ShapeMismatch("init_encoder: shape mismatch for " + report.mismatched.front() +
                        (report.mismatched.size() > 1
                             ? " (+" + std::to_string(report.mismatched.size() - 1) + " more)"
                             : ""));
  for (auto& [name, tensor] : pending) params.at(name) = std::move(tensor);
  return report;
}

}  // namespace docmt
