// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0
//
// Assembly of the extended encoder input: preceding-sentence context, a [SEP]
// separator, and the source sentence, capped to a fixed number of positions.
// Produces segment ids (0 = context and [SEP], 1 = source), position ids
// (sequential, or source-first "reversed" so source positions do not depend
// on context length), and the mask that hides context from the decoder.

#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "docmt/corpus.hpp"
#include "docmt/error.hpp"

namespace docmt {

enum class PositionMode { Sequential, Reversed };

enum class ContextMode { None, Small, Large };

inline const char* to_string(PositionMode m) {
  return m == PositionMode::Sequential ? "sequential" : "reversed";
}
inline const char* to_string(ContextMode m) {
  switch (m) {
    case ContextMode::None: return "none";
    case ContextMode::Small: return "small";
    default: return "large";
  }
}

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
};

struct ExtendedInput {
  Ids token_ids;
  std::vector<std::int32_t> segment_ids;   // 0 or 1
  std::vector<std::int32_t> position_ids;  // permutation of 0..L-1
  Span source_span;                        // [begin,end) indices of source tokens
  std::vector<std::uint8_t> context_mask;  // 1 = hidden from decoder cross-attention

  std::size_t length() const { return token_ids.size(); }
  bool has_context() const { return source_span.begin > 0; }
};

// Concatenates context sentences (document order), one [SEP], and the source.
// When the total exceeds `limit`, the oldest context tokens are dropped; the
// [SEP] is dropped too if no context survives. Source tokens are never cut.
inline ExtendedInput assemble(const std::vector<Ids>& context_sentences, const Ids& source,
                              std::size_t limit, PositionMode mode) {
  if (source.empty()) throw EmptySource("assemble: empty source sentence");
  if (source.size() > limit)
    throw SourceTooLong("assemble: source length " + std::to_string(source.size()) +
                        " exceeds limit " + std::to_string(limit));

  Ids context;
  for (const Ids& s : context_sentences) context.insert(context.end(), s.begin(), s.end());

  // Room left for context once the source is placed; one slot goes to [SEP]
  // whenever any context survives.
  const std::size_t room = limit - source.size();
  const std::size_t kept = room == 0 ? 0 : std::min(context.size(), room - 1);

  ExtendedInput out;
  const std::size_t total = kept + (kept > 0 ? 1 : 0) + source.size();
  out.token_ids.reserve(total);
  if (kept > 0) {
    out.token_ids.insert(out.token_ids.end(), context.end() - static_cast<std::ptrdiff_t>(kept), context.end());
    out.token_ids.push_back(Vocab::kSep);
  }
  out.source_span.begin = out.token_ids.size();
  out.token_ids.insert(out.token_ids.end(), source.begin(), source.end());
  out.source_span.end = out.token_ids.size();

  const std::size_t n = out.token_ids.size();
  out.segment_ids.assign(n, 0);
  out.context_mask.assign(n, 1);
  for (std::size_t i = out.source_span.begin; i < out.source_span.end; ++i) {
    out.segment_ids[i] = 1;
    out.context_mask[i] = 0;
  }

  out.position_ids.resize(n);
  if (mode == PositionMode::Sequential) {
    std::iota(out.position_ids.begin(), out.position_ids.end(), 0);
  } else {
    // Source first (0..|src|-1), then [SEP], then context left-to-right.
    std::int32_t next = 0;
    for (std::size_t i = out.source_span.begin; i < out.source_span.end; ++i)
      out.position_ids[i] = next++;
    if (out.source_span.begin > 0) out.position_ids[out.source_span.begin - 1] = next++;
    for (std::size_t i = 0; i + 1 < out.source_span.begin; ++i) out.position_ids[i] = next++;
  }
  return out;
}

inline std::vector<std::uint8_t> cross_attention_mask(const ExtendedInput& x) {
  return x.context_mask;
}

// Preceding same-document sentences that serve as context for sentence `i`.
inline std::vector<Ids> context_for(const std::vector<Ids>& doc_sentences, std::size_t i, ContextMode mode) {
  std::vector<Ids> ctx;
  if (mode == ContextMode::None || i == 0) return ctx;
  if (mode == ContextMode::Small) {
    ctx.push_back(doc_sentences[i - 1]);
  } else {
    ctx.assign(doc_sentences.begin(), doc_sentences.begin() + static_cast<std::ptrdiff_t>(i));
  }
  return ctx;
}

}  // namespace docmt
