// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "docmt/corpus.hpp"
#include "docmt/synthetic.hpp"

using namespace docmt;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("docmt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
}

}  // namespace

TEST_CASE("load_documents splits at blank lines", "[corpus]") {
  TempDir tmp;
  write_file(tmp.file("c.txt"), "a b\nc d\n\ne f\n");
  auto docs = load_documents(tmp.file("c.txt"));
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].source.size() == 2);
  CHECK(docs[1].source.size() == 1);
  CHECK(docs[0].source[0] == Sentence{"a", "b"});
  CHECK(docs[1].source[0] == Sentence{"e", "f"});
}

TEST_CASE("trailing blank lines do not create documents", "[corpus]") {
  TempDir tmp;
  write_file(tmp.file("a.txt"), "a b\nc d\n\ne f\n");
  write_file(tmp.file("b.txt"), "a b\nc d\n\ne f\n\n\n");
  auto a = load_documents(tmp.file("a.txt"));
  auto b = load_documents(tmp.file("b.txt"));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].source == b[i].source);
}

TEST_CASE("document sentence counts match a line-counting oracle", "[corpus]") {
  TempDir tmp;
  // 3 documents with 5/1/2 sentences
  std::string text;
  for (int i = 0; i < 5; ++i) text += "d0 s" + std::to_string(i) + "\n";
  text += "\n";
  text += "d1 s0\n";
  text += "\nd2 s0\nd2 s1\n";
  write_file(tmp.file("c.txt"), text);
  auto docs = load_documents(tmp.file("c.txt"));
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].source.size() == 5);
  CHECK(docs[1].source.size() == 1);
  CHECK(docs[2].source.size() == 2);
}

TEST_CASE("empty corpus and misaligned parallel files are errors", "[corpus]") {
  TempDir tmp;
  write_file(tmp.file("empty.txt"), "\n\n");
  CHECK_THROWS_AS(load_documents(tmp.file("empty.txt")), EmptyCorpus);

  write_file(tmp.file("s.txt"), "a b\nc d\n");
  write_file(tmp.file("t.txt"), "x y\n");
  CHECK_THROWS_AS(load_parallel(tmp.file("s.txt"), tmp.file("t.txt")), AlignmentMismatch);

  write_file(tmp.file("s2.txt"), "a b\n\nc d\n");
  write_file(tmp.file("t2.txt"), "x y\nz w\n");
  CHECK_THROWS_AS(load_parallel(tmp.file("s2.txt"), tmp.file("t2.txt")), AlignmentMismatch);
}

TEST_CASE("specials occupy fixed ids 0-5", "[corpus]") {
  Vocab v;
  CHECK(v.size() == 6);
  CHECK(v.id_of("[PAD]") == 0);
  CHECK(v.id_of("[UNK]") == 1);
  CHECK(v.id_of("[BOS]") == 2);
  CHECK(v.id_of("[EOS]") == 3);
  CHECK(v.id_of("[SEP]") == 4);
  CHECK(v.id_of("[MASK]") == 5);
  CHECK(v.token_of(4) == "[SEP]");
}

TEST_CASE("build_vocab ranks by frequency with lexicographic ties", "[corpus]") {
  Document d;
  d.source = {{"y", "x"}, {"x", "y", "z"}};
  SECTION("max_size caps the vocabulary") {
    auto v = build_vocab({d}, 8);
    CHECK(v.size() == 8);  // 6 specials + x + y; z is cut
  }
  SECTION("degenerate input keeps only specials") {
    Document empty;
    empty.source = {};
    CHECK(build_vocab({empty}, 100).size() == 6);
  }
  SECTION("x and y tie at count 2 and take ids 6,7 in lexicographic order") {
    auto v = build_vocab({d}, 8);
    CHECK(v.id_of("x") == 6);
    CHECK(v.id_of("y") == 7);
    CHECK(v.id_of("z") == 1);  // cut by max_size -> [UNK]
  }
}

TEST_CASE("build_vocab matches an independent frequency-count oracle", "[corpus]") {
  auto docs = generate_synthetic(SyntheticSpec{.documents = 50, .seed = 3});
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs)
    for (const auto& s : d.source)
      for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (auto& [tok, c] : counts) ranked.push_back({c, tok});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t k = 5;
  auto v = build_vocab(docs, 6 + k);
  for (std::size_t i = 0; i < k; ++i)
    CHECK(v.id_of(ranked[i].second) == static_cast<std::int32_t>(6 + i));
}

TEST_CASE("encode/decode round-trips in-vocabulary text", "[corpus]") {
  Document d;
  d.source = {{"the", "cat", "sat"}, {"the", "dog", "ran"}};
  auto v = build_vocab({d}, 100);
  SECTION("empty sequence") {
    CHECK(v.encode({}).empty());
    CHECK(v.decode({}).empty());
  }
  SECTION("specials round-trip by fixed id") {
    CHECK(v.encode({"[SEP]"}) == Ids{4});
    CHECK(v.decode({4}) == Sentence{"[SEP]"});
  }
  SECTION("unknown tokens map to [UNK]") {
    CHECK(v.encode({"zebra"}) == Ids{Vocab::kUnk});
  }
  SECTION("decode of out-of-range id fails") {
    CHECK_THROWS_AS(v.decode({9999}), UnknownId);
    CHECK_THROWS_AS(v.decode({-1}), UnknownId);
  }
  SECTION("random in-vocab sentences round-trip") {
    Rng rng = make_rng(11);
    std::vector<std::string> alphabet = {"the", "cat", "sat", "dog", "ran"};
    for (int t = 0; t < 50; ++t) {
      Sentence s;
      for (int i = 0; i < 10; ++i) s.push_back(alphabet[uniform_int(rng, alphabet.size())]);
      CHECK(v.decode(v.encode(s)) == s);
    }
  }
}

TEST_CASE("vocab files round-trip byte-identically", "[corpus]") {
  TempDir tmp;
  Document d;
  d.source = {{"alpha", "beta", "gamma"}};
  auto v = build_vocab({d}, 100);
  v.save(tmp.file("v1.txt"));
  auto v2 = Vocab::load(tmp.file("v1.txt"));
  v2.save(tmp.file("v2.txt"));
  std::ifstream f1(tmp.file("v1.txt"), std::ios::binary), f2(tmp.file("v2.txt"), std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(v2.id_of("alpha") == v.id_of("alpha"));
}

TEST_CASE("binarized corpus round-trips with document boundaries", "[corpus]") {
  TempDir tmp;
  auto docs = generate_synthetic(SyntheticSpec{.documents = 7, .seed = 9});
  auto sv = build_vocab(docs, 1000);
  auto tv = build_vocab(docs, 1000, 1, /*use_target_side=*/true);
  auto enc = encode_documents(docs, sv, &tv);
  save_encoded(enc, tmp.file("c.dcp"));
  auto back = load_encoded(tmp.file("c.dcp"));
  REQUIRE(back.size() == enc.size());
  for (std::size_t i = 0; i < enc.size(); ++i) {
    CHECK(back[i].source == enc[i].source);
    CHECK(back[i].target == enc[i].target);
  }
}
