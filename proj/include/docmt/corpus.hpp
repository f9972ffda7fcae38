// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Document-aware corpus loading and vocabulary management. Corpus files hold
// one whitespace-pretokenized sentence per line with a blank line between
// documents; parallel corpora are two such files with aligned lines and
// aligned document boundaries.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "docmt/error.hpp"

namespace docmt {

using Ids = std::vector<std::int32_t>;
using Sentence = std::vector<std::string>;

struct Document {
  std::int64_t id = 0;
  std::vector<Sentence> source;
  std::vector<Sentence> target;  // empty for monolingual corpora

  bool parallel() const { return !target.empty(); }
};

class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kBos = 2;
  static constexpr std::int32_t kEos = 3;
  static constexpr std::int32_t kSep = 4;
  static constexpr std::int32_t kMask = 5;
  static constexpr std::int32_t kNumSpecials = 6;

  static const std::vector<std::string>& special_tokens() {
    static const std::vector<std::string> s = {"[PAD]", "[UNK]", "[BOS]", "[EOS]", "[SEP]", "[MASK]"};
    return s;
  }

  Vocab() {
    for (const std::string& t : special_tokens()) push(t);
  }

  std::size_t size() const { return tokens_.size(); }

  std::int32_t id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) != 0; }

  const std::string& token_of(std::int32_t id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
      throw UnknownId("vocab: id " + std::to_string(id) + " out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  void push(const std::string& token) {
    if (index_.count(token)) throw DuplicateName("vocab: duplicate token " + token);
    index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
    tokens_.push_back(token);
  }

  Ids encode(const Sentence& tokens) const {
    Ids out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(id_of(t));
    return out;
  }

  Sentence decode(const Ids& ids) const {
    Sentence out;
    out.reserve(ids.size());
    for (std::int32_t id : ids) out.push_back(token_of(id));
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write vocab file " + path);
    for (const std::string& t : tokens_) f << t << '\n';
  }

  static Vocab load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read vocab file " + path);
    Vocab v;
    v.tokens_.clear();
    v.index_.clear();
    std::string line;
    while (std::getline(f, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      v.push(line);
    }
    const auto& sp = special_tokens();
    if (v.tokens_.size() < sp.size()) throw ConfigError("vocab file too small: " + path);
    for (std::size_t i = 0; i < sp.size(); ++i)
      if (v.tokens_[i] != sp[i])
        throw ConfigError("vocab file " + path + ": slot " + std::to_string(i) + " must be " + sp[i]);
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

namespace detail {

inline Sentence split_ws(const std::string& line) {
  Sentence out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::vector<std::vector<Sentence>> read_blocks(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read corpus file " + path);
  std::vector<std::vector<Sentence>> blocks;
  std::vector<Sentence> cur;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    Sentence toks = split_ws(line);
    if (toks.empty()) {
      if (!cur.empty()) blocks.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(std::move(toks));
    }
  }
  if (!cur.empty()) blocks.push_back(std::move(cur));
  return blocks;
}

}  // namespace detail

inline std::vector<Document> load_documents(const std::string& path) {
  auto blocks = detail::read_blocks(path);
  if (blocks.empty()) throw EmptyCorpus("no sentences in " + path);
  std::vector<Document> docs;
  docs.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Document d;
    d.id = static_cast<std::int64_t>(i);
    d.source = std::move(blocks[i]);
    docs.push_back(std::move(d));
  }
  return docs;
}

inline std::vector<Document> load_parallel(const std::string& src_path, const std::string& tgt_path) {
  auto src = detail::read_blocks(src_path);
  auto tgt = detail::read_blocks(tgt_path);
  if (src.empty()) throw EmptyCorpus("no sentences in " + src_path);
  if (src.size() != tgt.size())
    throw AlignmentMismatch(src_path + " has " + std::to_string(src.size()) + " documents, " + tgt_path +
                            " has " + std::to_string(tgt.size()));
  std::vector<Document> docs;
  docs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].size() != tgt[i].size())
      throw AlignmentMismatch("document " + std::to_string(i) + ": " + std::to_string(src[i].size()) +
                              " source sentences vs " + std::to_string(tgt[i].size()) + " target sentences");
    Document d;
    d.id = static_cast<std::int64_t>(i);
    d.source = std::move(src[i]);
    d.target = std::move(tgt[i]);
    docs.push_back(std::move(d));
  }
  return docs;
}

// ---- binarized corpus ------------------------------------------------------
//
// DCP1 file layout (little-endian): magic "DCP1", u8 has_target,
// u32 document count; per document: u32 sentence count; per sentence:
// u32 source length, source ids (u32 each), and when has_target is set,
// u32 target length, target ids. Document boundaries are structural.

struct EncodedDocument {
  std::vector<Ids> source;
  std::vector<Ids> target;

  bool parallel() const { return !target.empty(); }
};

inline std::vector<EncodedDocument> encode_documents(const std::vector<Document>& docs,
                                                     const Vocab& src_vocab, const Vocab* tgt_vocab) {
  std::vector<EncodedDocument> out;
  out.reserve(docs.size());
  for (const Document& d : docs) {
    EncodedDocument e;
    for (const Sentence& s : d.source) e.source.push_back(src_vocab.encode(s));
    if (d.parallel()) {
      if (!tgt_vocab) throw ConfigError("encode_documents: parallel corpus needs a target vocab");
      for (const Sentence& s : d.target) e.target.push_back(tgt_vocab->encode(s));
    }
    out.push_back(std::move(e));
  }
  return out;
}

namespace detail {

inline void write_u32(std::ofstream& f, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::ifstream& f) {
  unsigned char b[4];
  f.read(reinterpret_cast<char*>(b), 4);
  if (!f) throw IoError("binarized corpus: unexpected end of file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void write_ids(std::ofstream& f, const Ids& ids) {
  write_u32(f, static_cast<std::uint32_t>(ids.size()));
  for (std::int32_t id : ids) write_u32(f, static_cast<std::uint32_t>(id));
}

inline Ids read_ids(std::ifstream& f) {
  Ids ids(read_u32(f));
  for (auto& id : ids) id = static_cast<std::int32_t>(read_u32(f));
  return ids;
}

}  // namespace detail

inline void save_encoded(const std::vector<EncodedDocument>& docs, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write binarized corpus " + path);
  const bool has_target = !docs.empty() && docs.front().parallel();
  f.write("DCP1", 4);
  f.put(has_target ? 1 : 0);
  detail::write_u32(f, static_cast<std::uint32_t>(docs.size()));
  for (const EncodedDocument& d : docs) {
    detail::write_u32(f, static_cast<std::uint32_t>(d.source.size()));
    for (std::size_t s = 0; s < d.source.size(); ++s) {
      detail::write_ids(f, d.source[s]);
      if (has_target) detail::write_ids(f, d.target[s]);
    }
  }
  if (!f) throw IoError("short write on binarized corpus " + path);
}

inline std::vector<EncodedDocument> load_encoded(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read binarized corpus " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::string(magic, 4) != "DCP1")
    throw BadMagic("binarized corpus: bad magic in " + path);
  const int has_target = f.get();
  if (has_target != 0 && has_target != 1) throw IoError("binarized corpus: bad header");
  std::vector<EncodedDocument> docs(detail::read_u32(f));
  for (EncodedDocument& d : docs) {
    d.source.resize(detail::read_u32(f));
    if (has_target) d.target.resize(d.source.size());
    for (std::size_t s = 0; s < d.source.size(); ++s) {
      d.source[s] = detail::read_ids(f);
      if (has_target) d.target[s] = detail::read_ids(f);
    }
  }
  return docs;
}

// Frequency-ranked vocabulary with ties broken lexicographically. Specials
// always occupy ids 0-5; max_size bounds the total size including them.
inline Vocab build_vocab(const std::vector<Document>& docs, std::size_t max_size,
                         std::size_t min_count = 1, bool use_target_side = false) {
  if (max_size <= static_cast<std::size_t>(Vocab::kNumSpecials))
    throw ConfigError("build_vocab: max_size must exceed " + std::to_string(Vocab::kNumSpecials));
  std::map<std::string, std::size_t> counts;
  for (const Document& d : docs) {
    const auto& side = use_target_side ? d.target : d.source;
    for (const Sentence& s : side)
      for (const std::string& t : s) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  for (const auto& [tok, cnt] : ranked) {
    if (v.size() >= max_size) break;
    if (cnt < min_count) break;
    if (!v.contains(tok)) v.push(tok);
  }
  return v;
}

}  // namespace docmt
