// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "resonance/errors.hpp"
#include "resonance/grad_check.hpp"
#include "resonance/model.hpp"
#include "resonance/tokenizer.hpp"

using namespace resonance;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.lm.vocab_size = 24;
  c.lm.d_model = 16;
  c.lm.n_layers = 2;
  c.lm.n_heads = 2;
  c.lm.max_sequence_length = 48;
  c.d_enc = 12;
  c.pt_layers = 1;
  c.fusion_heads = 2;
  c.fusion_max_length = 24;
  c.lora_rank = 2;
  c.lora_alpha = 4.0;
  return c;
}

ClipEmbeddingSet random_set(Modality m, std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  ClipEmbeddingSet s{m, n, dim, std::vector<double>(n * dim)};
  for (auto& v : s.matrix) v = dist(rng);
  return s;
}

std::vector<TokenId> random_ids(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<TokenId> dist(Tokenizer::kSpecialCount, 23);
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = dist(rng);
  return ids;
}

ModelInput full_input(std::size_t n_clips, std::size_t d_enc, std::mt19937_64& rng) {
  ModelInput in;
  in.media.music = random_set(Modality::kMusic, n_clips, d_enc, rng);
  in.media.video = random_set(Modality::kVideo, n_clips, d_enc, rng);
  in.media.image = random_set(Modality::kImage, 1, d_enc, rng);
  in.text = {Tokenizer::kMusic, 9};
  in.query = random_ids(4, rng);
  return in;
}

}  // namespace

TEST_CASE("model config JSON round trip and validation") {
  ModelConfig c = small_config();
  c.mie = false;
  const ModelConfig back = ModelConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK_THROWS_AS(ModelConfig::from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(ModelConfig::from_json({{"d_model", "wide"}}), ConfigError);
  c.fusion_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("assembly layout and supervision mask") {
  ParameterStore<double> store;
  std::mt19937_64 rng(1);
  ResonanceModel<double> model(store, small_config(), rng);
  const ModelInput in = full_input(3, 12, rng);
  const std::vector<TokenId> target = {10, 11, 12};
  const auto seq = model.assemble(in, target, AssemblyMode::kConfigured);
  CHECK(seq.fused_rows == 3 + 3 + 1 + 2);
  CHECK(seq.query_rows == 5);
  CHECK(seq.target_rows == 4);
  CHECK(seq.length() == 18);
  for (std::size_t i = 0; i < seq.length(); ++i) CHECK(seq.supervision[i] == (i >= 14));
  CHECK(seq.row_tokens[13] == Tokenizer::kBos);
  CHECK(seq.row_tokens.back() == Tokenizer::kEos);
  CHECK(model.logits(seq).shape() == Shape{18, 24});

  const auto vanilla = model.assemble(in, target, AssemblyMode::kVanilla);
  CHECK(vanilla.fused_rows == 1 + 1 + 1 + 2);
}

TEST_CASE("pooled, unfused assembly with one clip is bit-identical to vanilla") {
  ModelConfig c = small_config();
  c.mie = false;
  c.pt_layers = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    ParameterStore<double> store;
    std::mt19937_64 rng(100 + trial);
    ResonanceModel<double> model(store, c, rng);
    const ModelInput in = full_input(1, c.d_enc, rng);
    const auto target = random_ids(3, rng);
    const Tensor<double> a = model.logits(model.assemble(in, target, AssemblyMode::kConfigured));
    const Tensor<double> b = model.logits(model.assemble(in, target, AssemblyMode::kVanilla));
    REQUIRE(a.shape() == b.shape());
    bool same = true;
    for (std::size_t i = 0; i < a.numel(); ++i) same = same && a.data()[i] == b.data()[i];
    CHECK(same);
  }
}

TEST_CASE("music-only input fuses adapted music rows followed by the input text") {
  ModelConfig c = small_config();
  c.pt_layers = 0;
  ParameterStore<double> store;
  std::mt19937_64 rng(2);
  ResonanceModel<double> model(store, c, rng);
  ModelInput in;
  in.media.music = random_set(Modality::kMusic, 4, c.d_enc, rng);
  in.text = {Tokenizer::kMusic};
  const Tensor<double> block = model.fused_block(in, AssemblyMode::kConfigured);
  REQUIRE(block.rows() == 5);
  const Tensor<double> music = model.adaptors().adapt(*in.media.music);
  const Tensor<double> text = model.lm().embed(in.text);
  for (std::size_t i = 0; i < 4 * 16; ++i) CHECK(block.data()[i] == music.data()[i]);
  for (std::size_t i = 0; i < 16; ++i) CHECK(block.data()[4 * 16 + i] == text.data()[i]);
}

TEST_CASE("text-only input still produces logits; empty input is rejected") {
  ParameterStore<double> store;
  std::mt19937_64 rng(3);
  ResonanceModel<double> model(store, small_config(), rng);
  ModelInput in;
  in.text = {8, 9};
  in.query = {10};
  const auto seq = model.assemble(in, std::vector<TokenId>{11}, AssemblyMode::kConfigured);
  CHECK(seq.fused_rows == 2);
  CHECK(model.logits(seq).rows() == seq.length());
  ModelInput empty;
  empty.query = {10};
  CHECK_THROWS_AS(model.assemble(empty, std::vector<TokenId>{11}, AssemblyMode::kConfigured), DataError);
  CHECK_NOTHROW(model.assemble(empty, std::vector<TokenId>{11}, AssemblyMode::kConfigured, true));
  in.query = {99};
  CHECK_THROWS_AS(model.assemble(in, std::vector<TokenId>{11}, AssemblyMode::kConfigured), DataError);
}

TEST_CASE("query-only input leaves fusion gradients at zero") {
  ParameterStore<double> store;
  std::mt19937_64 rng(4);
  ResonanceModel<double> model(store, small_config(), rng);
  ModelInput in;
  in.query = {8, 9, 10};
  store.zero_grad();
  model.loss(in, std::vector<TokenId>{11, 12}, AssemblyMode::kConfigured, true).backward();
  for (const auto& name : model.fusion_parameters()) {
    auto t = store.get(name).tensor;
    for (double g : t.grad()) CHECK(g == 0.0);
  }
  bool lm_moved = false;
  for (double g : store.get("lm.tok_emb").tensor.grad()) lm_moved = lm_moved || g != 0.0;
  CHECK(lm_moved);
}

TEST_CASE("overlong assembly is rejected") {
  ModelConfig c = small_config();
  c.lm.max_sequence_length = 12;
  ParameterStore<double> store;
  std::mt19937_64 rng(5);
  ResonanceModel<double> model(store, c, rng);
  const ModelInput in = full_input(3, c.d_enc, rng);
  CHECK_THROWS_AS(model.assemble(in, std::vector<TokenId>{11}, AssemblyMode::kConfigured), SequenceLengthError);
}

TEST_CASE("full pipeline passes the gradient check at d_model 16, 2 layers, one fusion layer") {
  ParameterStore<double> store;
  std::mt19937_64 rng(6);
  ResonanceModel<double> model(store, small_config(), rng);
  model.attach_lora(CausalLM<double>::default_lora_patterns(), rng);
  for (const auto& name : model.lm().lora_parameter_names()) {
    std::normal_distribution<double> n(0.0, 0.3);
    for (auto& x : store.get(name).tensor.data()) x = n(rng);
  }
  const ModelInput in = full_input(2, 12, rng);
  const std::vector<TokenId> target = {10, 11};
  auto f = [&] { return model.loss(in, target); };
  std::vector<GradCheckInput<double>> inputs;
  for (auto& p : store.all()) inputs.push_back({p.name, p.tensor});
  const auto r = grad_check<double>(f, inputs, 1e-6);
  INFO("worst: ", r.worst_coordinate);
  CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("accuracy and generation") {
  ParameterStore<float> store;
  std::mt19937_64 rng(7);
  ResonanceModel<float> model(store, small_config(), rng);
  const ModelInput in = full_input(2, 12, rng);
  const auto acc = model.accuracy(in, std::vector<TokenId>{10, 11});
  CHECK(acc.total == 3);
  GenerationOptions opts;
  opts.max_new = 5;
  const auto a = model.generate(in, opts);
  CHECK(a == model.generate(in, opts));
  CHECK(a.size() <= 5);
}
