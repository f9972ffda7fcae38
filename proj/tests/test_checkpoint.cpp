// Copyright 2026 the docmt authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "docmt/checkpoint.hpp"

using namespace docmt;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("docmt_ckpt_" + name)).string();
}

struct FileGuard {
  std::string path;
  explicit FileGuard(std::string p) : path(std::move(p)) {}
  ~FileGuard() { std::filesystem::remove(path); }
};

ModelConfig encoder_config(std::size_t layers, std::size_t d_model = 8, std::size_t d_ffn = 16) {
  ModelConfig c;
  c.d_model = d_model;
  c.n_heads = 2;
  c.d_ffn = d_ffn;
  c.enc_layers = layers;
  c.dec_layers = 1;
  c.max_positions = 16;
  c.src_vocab = 10;
  c.tgt_vocab = 10;
  return c;
}

}  // namespace

TEST_CASE("empty checkpoint serializes to a bare header", "[checkpoint]") {
  Checkpoint c;
  auto bytes = serialize(c);
  CHECK(bytes.size() == 8);  // magic + entry count
  auto back = deserialize(bytes);
  CHECK(back == c);
}

TEST_CASE("single-entry file size matches byte accounting", "[checkpoint]") {
  Checkpoint c;
  TensorF t({2, 3}, {1, 2, 3, 4, 5, 6});
  c.put("w", t);
  auto bytes = serialize(c);
  // header 8 + name(2+1) + dtype 1 + rank 1 + dims 2*4 + data 24
  CHECK(bytes.size() == 8 + 3 + 2 + 8 + 24);
  auto back = deserialize(bytes);
  CHECK(back.get<float>("w").data == t.data);
}

TEST_CASE("corrupt magic and truncations are typed errors", "[checkpoint]") {
  Checkpoint c;
  c.put("w", TensorF({2, 2}, {1, 2, 3, 4}));
  auto bytes = serialize(c);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize(bad), BadMagic);

  for (std::size_t cut : {bytes.size() - 1, bytes.size() - 10, std::size_t{9}, std::size_t{5}}) {
    std::vector<std::uint8_t> trunc(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK_THROWS_AS(deserialize(trunc), TruncatedFile);
  }
}

TEST_CASE("duplicate names are rejected on load and on put", "[checkpoint]") {
  Checkpoint c;
  c.put("w", TensorF({1}, {1.0f}));
  CHECK_THROWS_AS(c.put("w", TensorF({1}, {2.0f})), DuplicateName);

  // hand-build a file with the same entry twice
  Checkpoint one;
  one.put("w", TensorF({1}, {1.0f}));
  auto single = serialize(one);
  std::vector<std::uint8_t> doubled(single.begin(), single.begin() + 8);
  doubled[4] = 2;  // entry count 2
  doubled.insert(doubled.end(), single.begin() + 8, single.end());
  doubled.insert(doubled.end(), single.begin() + 8, single.end());
  CHECK_THROWS_AS(deserialize(doubled), DuplicateName);
}

TEST_CASE("random checkpoints round-trip bit-identically", "[checkpoint]") {
  Rng rng = make_rng(12);
  for (int t = 0; t < 20; ++t) {
    Checkpoint c;
    const std::size_t entries = 1 + uniform_int(rng, 5);
    for (std::size_t e = 0; e < entries; ++e) {
      Shape shape{1 + uniform_int(rng, 4), 1 + uniform_int(rng, 6)};
      const std::string name = "tensor." + std::to_string(t) + "." + std::to_string(e);
      if (uniform_int(rng, 2) == 0)
        c.put(name, TensorF::randn(shape, rng));
      else
        c.put(name, TensorD::randn(shape, rng));
    }
    if (uniform_int(rng, 2) == 0) c.metadata["note"] = "trial " + std::to_string(t);

    const std::string path = temp_path("roundtrip.ntc1");
    FileGuard guard(path);
    save(c, path);
    Checkpoint back = load(path);
    CHECK(back == c);
    CHECK(serialize(back) == serialize(c));
  }
}

TEST_CASE("f64 entries preserve full precision", "[checkpoint]") {
  Checkpoint c;
  TensorD t({3}, {1.0 / 3.0, 1e-300, -0.0});
  c.put("d", t);
  auto back = deserialize(serialize(c));
  auto restored = back.get<double>("d");
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(std::memcmp(&restored.data[i], &t.data[i], sizeof(double)) == 0);
}

TEST_CASE("identity init: a freshly saved encoder initializes 100%", "[checkpoint]") {
  auto cfg = encoder_config(2);
  auto model = ModelT<float>::init(cfg, 21);
  Checkpoint c;
  for (const auto& [name, t] : model.params.tensors)
    if (name.starts_with("encoder.")) c.put(name, t);

  auto target = ModelT<float>::init(cfg, 22);
  auto report = init_encoder(target.params, c);
  CHECK(report.initialized.size() == c.entries.size());
  CHECK(report.skipped.empty());
  CHECK(report.mismatched.empty());
  for (const std::string& name : report.initialized)
    CHECK(target.params.at(name).data == model.params.at(name).data);
}

TEST_CASE("12-layer checkpoint into a 6-layer encoder uses the bottom layers", "[checkpoint]") {
  auto cfg12 = encoder_config(12);
  auto donor = ModelT<float>::init(cfg12, 23);
  Checkpoint c = checkpoint_from(donor.params);

  auto cfg6 = encoder_config(6);
  auto target = ModelT<float>::init(cfg6, 24);
  auto before = target.params;  // copy for the untouched check
  auto report = init_encoder(target.params, c);

  // layers 0-5 initialized from the checkpoint
  for (std::size_t layer = 0; layer < 6; ++layer) {
    const std::string probe = names::enc_layer(layer, "attn.q.weight");
    CHECK(std::find(report.initialized.begin(), report.initialized.end(), probe) !=
          report.initialized.end());
    CHECK(target.params.at(probe).data == donor.params.at(probe).data);
  }
  // layers 6-11 of the checkpoint have no matching name
  for (std::size_t layer = 6; layer < 12; ++layer) {
    const std::string probe = names::enc_layer(layer, "attn.q.weight");
    CHECK(std::find(report.skipped.begin(), report.skipped.end(), probe) != report.skipped.end());
  }
  // nothing outside the initialized list changed
  for (const auto& [name, t] : target.params.tensors) {
    if (std::find(report.initialized.begin(), report.initialized.end(), name) ==
        report.initialized.end())
      CHECK(t.data == before.at(name).data);
  }
  CHECK(report.mismatched.empty());
}

TEST_CASE("wrong dimensions mismatch everything and change nothing", "[checkpoint]") {
  auto donor = ModelT<float>::init(encoder_config(2, 12, 24), 25);
  Checkpoint c;
  for (const auto& [name, t] : donor.params.tensors)
    if (name.starts_with("encoder.")) c.put(name, t);

  auto cfg = encoder_config(2, 8);
  auto target = ModelT<float>::init(cfg, 26);
  auto before = target.params;
  auto report = init_encoder(target.params, c);
  CHECK(report.initialized.empty());
  CHECK(report.mismatched.size() == c.entries.size());
  for (const auto& [name, t] : target.params.tensors) CHECK(t.data == before.at(name).data);

  CHECK_THROWS_AS(init_encoder(target.params, c, /*strict=*/true), ShapeMismatch);
  for (const auto& [name, t] : target.params.tensors) CHECK(t.data == before.at(name).data);
}

TEST_CASE("longer pretrained position tables are truncated", "[checkpoint]") {
  auto big = encoder_config(1);
  big.max_positions = 32;
  auto donor = ModelT<float>::init(big, 27);
  Checkpoint c = checkpoint_from(donor.params);

  auto small = encoder_config(1);
  small.max_positions = 16;
  auto target = ModelT<float>::init(small, 28);
  auto report = init_encoder(target.params, c);
  CHECK(std::find(report.initialized.begin(), report.initialized.end(),
                  "encoder.embed.position") != report.initialized.end());
  const auto& got = target.params.at("encoder.embed.position");
  const auto& src = donor.params.at("encoder.embed.position");
  REQUIRE(got.rows() == 16);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < got.cols(); ++j) CHECK(got.at(i, j) == src.at(i, j));
}

TEST_CASE("decoder and MLM head are never touched by init_encoder", "[checkpoint]") {
  auto cfg = encoder_config(2);
  auto donor = ModelT<float>::init(cfg, 29);
  Checkpoint c = checkpoint_from(donor.params);  // full model, decoder included
  auto target = ModelT<float>::init(cfg, 30);
  auto before = target.params;
  auto report = init_encoder(target.params, c);
  for (const auto& [name, t] : target.params.tensors) {
    if (!name.starts_with("encoder.")) {
      CHECK(t.data == before.at(name).data);
      CHECK(std::find(report.initialized.begin(), report.initialized.end(), name) ==
            report.initialized.end());
    }
  }
  // the decoder/MLM entries of the checkpoint land in the skipped list
  CHECK(std::find(report.skipped.begin(), report.skipped.end(), "decoder.output.weight") !=
        report.skipped.end());
  CHECK(std::find(report.skipped.begin(), report.skipped.end(), "mlm.transform.weight") !=
        report.skipped.end());
}

TEST_CASE("position table is identical under both position modes", "[checkpoint]") {
  // the table is indexed by position id, so reversed mode needs no transform
  auto cfg_seq = encoder_config(1);
  cfg_seq.position_mode = PositionMode::Sequential;
  auto cfg_rev = encoder_config(1);
  cfg_rev.position_mode = PositionMode::Reversed;
  auto donor = ModelT<float>::init(cfg_seq, 31);
  Checkpoint c = checkpoint_from(donor.params);

  auto a = ModelT<float>::init(cfg_seq, 32);
  auto b = ModelT<float>::init(cfg_rev, 33);
  init_encoder(a.params, c);
  init_encoder(b.params, c);
  CHECK(a.params.at("encoder.embed.position").data == b.params.at("encoder.embed.position").data);
}

TEST_CASE("params_from_checkpoint restores a full model exactly", "[checkpoint]") {
  auto cfg = encoder_config(2);
  auto model = ModelT<float>::init(cfg, 34);
  Checkpoint c = checkpoint_from(model.params, {{"kind", "full"}});
  auto other = ModelT<float>::init(cfg, 35);
  params_from_checkpoint(other.params, c);
  for (const auto& [name, t] : model.params.tensors) CHECK(other.params.at(name).data == t.data);

  Checkpoint missing = c;
  missing.entries.erase("decoder.output.bias");
  CHECK_THROWS_AS(params_from_checkpoint(other.params, missing), ShapeMismatch);
}
