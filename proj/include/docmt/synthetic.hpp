// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Generator for a two-sentence disambiguation corpus. Every document opens
// with a marker sentence and follows with a sentence containing the ambiguous
// token "amb", whose correct translation (ALPHA vs BETA) is determined solely
// by the marker in the preceding sentence. All other tokens translate
// word-for-word, so a sentence-level model can learn everything except the
// ambiguous choice, and a context-aware model can learn all of it.

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "docmt/corpus.hpp"
#include "docmt/rng.hpp"

namespace docmt {

struct SyntheticSpec {
  std::size_t documents = 2000;
  std::size_t filler_vocab = 12;
  std::size_t fillers_per_sentence = 2;  // sentence length = fillers + 1
  std::uint64_t seed = 7;
};

namespace synthetic {

inline const std::string kMarkerA = "ma";
inline const std::string kMarkerB = "mb";
inline const std::string kAmbiguous = "amb";
inline const std::string kVariantA = "ALPHA";
inline const std::string kVariantB = "BETA";

inline std::string src_filler(std::size_t i) { return "sf" + std::to_string(i); }
inline std::string tgt_filler(std::size_t i) { return "tf" + std::to_string(i); }

inline std::string translate_token(const std::string& src, bool marker_is_a) {
  if (src == kMarkerA) return "MA";
  if (src == kMarkerB) return "MB";
  if (src == kAmbiguous) return marker_is_a ? kVariantA : kVariantB;
  return "tf" + src.substr(2);  // sfN -> tfN
}

}  // namespace synthetic

inline std::vector<Document> generate_synthetic(const SyntheticSpec& spec) {
  Rng rng = make_rng(spec.seed, 0x5E17);
  std::vector<Document> docs;
  docs.reserve(spec.documents);
  for (std::size_t d = 0; d < spec.documents; ++d) {
    const bool marker_is_a = (d % 2 == 0);

    auto make_sentence = [&](const std::string& special) {
      Sentence s;
      for (std::size_t i = 0; i < spec.fillers_per_sentence; ++i)
        s.push_back(synthetic::src_filler(uniform_int(rng, spec.filler_vocab)));
      const std::size_t slot = uniform_int(rng, s.size() + 1);
      s.insert(s.begin() + static_cast<std::ptrdiff_t>(slot), special);
      return s;
    };

    Document doc;
    doc.id = static_cast<std::int64_t>(d);
    doc.source.push_back(make_sentence(marker_is_a ? synthetic::kMarkerA : synthetic::kMarkerB));
    doc.source.push_back(make_sentence(synthetic::kAmbiguous));
    for (const Sentence& s : doc.source) {
      Sentence t;
      for (const std::string& tok : s) t.push_back(synthetic::translate_token(tok, marker_is_a));
      doc.target.push_back(std::move(t));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

// Which variant the ambiguous sentence of `doc` must translate to.
inline std::string expected_variant(const Document& doc) {
  for (const std::string& tok : doc.source.front())
    if (tok == synthetic::kMarkerA) return synthetic::kVariantA;
  return synthetic::kVariantB;
}

inline void write_corpus_file(const std::vector<Document>& docs, const std::string& path,
                              bool target_side) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write corpus file " + path);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d > 0) f << '\n';
    const auto& side = target_side ? docs[d].target : docs[d].source;
    for (const Sentence& s : side) {
      for (std::size_t i = 0; i < s.size(); ++i) f << (i ? " " : "") << s[i];
      f << '\n';
    }
  }
}

}  // namespace docmt
