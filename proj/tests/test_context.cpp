// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "docmt/context.hpp"
#include "docmt/rng.hpp"

using namespace docmt;

namespace {

Ids iota_ids(std::int32_t start, std::size_t n) {
  Ids v(n);
  std::iota(v.begin(), v.end(), start);
  return v;
}

void check_invariants(const ExtendedInput& x, std::size_t limit) {
  const std::size_t n = x.length();
  CHECK(n <= limit);
  CHECK(x.segment_ids.size() == n);
  CHECK(x.position_ids.size() == n);
  CHECK(x.context_mask.size() == n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool in_source = i >= x.source_span.begin && i < x.source_span.end;
    CHECK(x.segment_ids[i] == (in_source ? 1 : 0));
    CHECK((x.context_mask[i] != 0) == !in_source);
  }
  std::vector<std::int32_t> sorted = x.position_ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == static_cast<std::int32_t>(i));
  if (x.source_span.begin == 0) {
    for (std::int32_t id : x.token_ids) CHECK(id != Vocab::kSep);
  }
}

}  // namespace

TEST_CASE("assemble reproduces the cat-sentence layout", "[context]") {
  // context "His cat is cute" = ids 10..13, source "It likes fish" = ids 20..22
  const Ids context = {10, 11, 12, 13};
  const Ids source = {20, 21, 22};
  ExtendedInput x = assemble({context}, source, 512, PositionMode::Reversed);
  CHECK(x.token_ids == Ids{10, 11, 12, 13, Vocab::kSep, 20, 21, 22});
  CHECK(x.segment_ids == std::vector<std::int32_t>{0, 0, 0, 0, 0, 1, 1, 1});
  CHECK(x.position_ids == std::vector<std::int32_t>{4, 5, 6, 7, 3, 0, 1, 2});
  CHECK(x.context_mask == std::vector<std::uint8_t>{1, 1, 1, 1, 1, 0, 0, 0});
  CHECK(x.source_span.begin == 5);
  CHECK(x.source_span.end == 8);
  check_invariants(x, 512);

  ExtendedInput xs = assemble({context}, source, 512, PositionMode::Sequential);
  CHECK(xs.token_ids == x.token_ids);
  CHECK(xs.position_ids == std::vector<std::int32_t>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("no context means no [SEP] and all-source fields", "[context]") {
  const Ids source = iota_ids(30, 5);
  for (PositionMode mode : {PositionMode::Sequential, PositionMode::Reversed}) {
    ExtendedInput x = assemble({}, source, 512, mode);
    CHECK(x.token_ids == source);
    CHECK(x.source_span.begin == 0);
    CHECK(x.source_span.end == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(x.segment_ids[i] == 1);
      CHECK(x.context_mask[i] == 0);
      CHECK(x.position_ids[i] == static_cast<std::int32_t>(i));
    }
    check_invariants(x, 512);
  }
}

TEST_CASE("oversize context is left-truncated to keep the newest tokens", "[context]") {
  const Ids context = iota_ids(100, 600);
  const Ids source = iota_ids(20, 20);
  ExtendedInput x = assemble({context}, source, 512, PositionMode::Sequential);
  CHECK(x.length() == 512);  // 491 context + [SEP] + 20 source
  CHECK(x.source_span.begin == 492);
  // surviving context must be the newest 491 tokens, order preserved
  for (std::size_t i = 0; i < 491; ++i)
    CHECK(x.token_ids[i] == context[600 - 491 + i]);
  CHECK(x.token_ids[491] == Vocab::kSep);
  check_invariants(x, 512);
}

TEST_CASE("source fills the window exactly: no context, no [SEP]", "[context]") {
  const Ids source = iota_ids(10, 16);
  ExtendedInput x = assemble({iota_ids(50, 8)}, source, 16, PositionMode::Reversed);
  CHECK(x.token_ids == source);
  CHECK(x.source_span.begin == 0);

  // one spare slot goes unused rather than holding a dangling [SEP]
  ExtendedInput y = assemble({iota_ids(50, 8)}, iota_ids(10, 15), 16, PositionMode::Reversed);
  CHECK(y.length() == 15);
  CHECK(y.source_span.begin == 0);

  // two spare slots => one context token + [SEP]
  ExtendedInput z = assemble({iota_ids(50, 8)}, iota_ids(10, 14), 16, PositionMode::Reversed);
  CHECK(z.length() == 16);
  CHECK(z.token_ids[0] == 57);  // newest context token
  CHECK(z.token_ids[1] == Vocab::kSep);
}

TEST_CASE("source precondition violations are rejected", "[context]") {
  CHECK_THROWS_AS(assemble({}, {}, 512, PositionMode::Reversed), EmptySource);
  CHECK_THROWS_AS(assemble({}, iota_ids(0, 513), 512, PositionMode::Reversed), SourceTooLong);
}

TEST_CASE("multiple context sentences flatten in document order", "[context]") {
  ExtendedInput x = assemble({{10, 11}, {12}, {13, 14}}, {20}, 512, PositionMode::Sequential);
  CHECK(x.token_ids == Ids{10, 11, 12, 13, 14, Vocab::kSep, 20});
}

TEST_CASE("reversed positions keep source ids stable across context lengths", "[context]") {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t src_len = 1 + uniform_int(rng, 12);
    Ids source = iota_ids(40, src_len);
    std::vector<std::vector<std::int32_t>> reversed_slices;
    std::vector<std::vector<std::int32_t>> sequential_slices;
    std::vector<std::size_t> ctx_lens = {0, 1, 3, 7, 19};
    for (std::size_t cl : ctx_lens) {
      std::vector<Ids> ctx;
      if (cl > 0) ctx.push_back(iota_ids(100, cl));
      ExtendedInput xr = assemble(ctx, source, 512, PositionMode::Reversed);
      ExtendedInput xs = assemble(ctx, source, 512, PositionMode::Sequential);
      check_invariants(xr, 512);
      std::vector<std::int32_t> r(xr.position_ids.begin() + xr.source_span.begin,
                                  xr.position_ids.begin() + xr.source_span.end);
      std::vector<std::int32_t> s(xs.position_ids.begin() + xs.source_span.begin,
                                  xs.position_ids.begin() + xs.source_span.end);
      reversed_slices.push_back(r);
      sequential_slices.push_back(s);
    }
    for (std::size_t i = 1; i < reversed_slices.size(); ++i) {
      CHECK(reversed_slices[i] == reversed_slices[0]);
      CHECK(sequential_slices[i] != sequential_slices[i - 1]);  // distinct context lengths shift them
    }
  }
}

TEST_CASE("cross_attention_mask mirrors the context mask with a live source", "[context]") {
  ExtendedInput x = assemble({{10, 11}}, {20, 21}, 512, PositionMode::Reversed);
  auto mask = cross_attention_mask(x);
  CHECK(mask == x.context_mask);
  CHECK(std::count(mask.begin(), mask.end(), 0) == 2);

  ExtendedInput y = assemble({}, {20, 21}, 512, PositionMode::Reversed);
  auto mask_y = cross_attention_mask(y);
  CHECK(std::count(mask_y.begin(), mask_y.end(), 1) == 0);

  Rng rng = make_rng(31);
  for (int t = 0; t < 30; ++t) {
    const std::size_t cl = uniform_int(rng, 30);
    const std::size_t sl = 1 + uniform_int(rng, 10);
    std::vector<Ids> ctx;
    if (cl > 0) ctx.push_back(iota_ids(60, cl));
    ExtendedInput z = assemble(ctx, iota_ids(10, sl), 512, PositionMode::Sequential);
    auto m = cross_attention_mask(z);
    CHECK(static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)) ==
          z.length() - z.source_span.length());
  }
}

TEST_CASE("assemble is deterministic", "[context]") {
  auto a = assemble({{1, 2, 3}}, {7, 8}, 512, PositionMode::Reversed);
  auto b = assemble({{1, 2, 3}}, {7, 8}, 512, PositionMode::Reversed);
  CHECK(a.token_ids == b.token_ids);
  CHECK(a.position_ids == b.position_ids);
  CHECK(a.segment_ids == b.segment_ids);
  CHECK(a.context_mask == b.context_mask);
}

TEST_CASE("context_for respects mode and document start", "[context]") {
  std::vector<Ids> doc = {{1}, {2}, {3}, {4}};
  CHECK(context_for(doc, 0, ContextMode::Large).empty());
  CHECK(context_for(doc, 2, ContextMode::None).empty());
  CHECK(context_for(doc, 2, ContextMode::Small) == std::vector<Ids>{{2}});
  CHECK(context_for(doc, 3, ContextMode::Large) == std::vector<Ids>{{1}, {2}, {3}});
}
