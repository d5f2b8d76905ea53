// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "resonance/errors.hpp"
#include "resonance/grad_check.hpp"
#include "resonance/training.hpp"
#include "unit/test_util.hpp"

using namespace resonance;
using resonance::testing::TempDir;

namespace {

ModelConfig small_config(std::size_t d = 16) {
  ModelConfig c;
  c.lm.vocab_size = 24;
  c.lm.d_model = d;
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

std::vector<TrainingExample> random_examples(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<TokenId> tok(Tokenizer::kSpecialCount, 23);
  std::vector<TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingExample ex;
    ex.id = "ex-" + std::to_string(i);
    ex.input.media.music = random_set(Modality::kMusic, 3, 12, rng);
    ex.input.media.image = random_set(Modality::kImage, 1, 12, rng);
    ex.input.text = {Tokenizer::kMusic, Tokenizer::kImage};
    ex.input.query = {tok(rng), tok(rng)};
    ex.target = {tok(rng), tok(rng), tok(rng)};
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
std::map<std::string, std::vector<T>> snapshot(const ParameterStore<T>& store) {
  std::map<std::string, std::vector<T>> out;
  for (const auto& p : store.all()) out[p.name].assign(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

StageConfig quick_stage(int stage, std::size_t steps) {
  StageConfig c = StageConfig::defaults(stage);
  c.lr = 1e-2;
  c.batch_size = 4;
  c.max_steps = steps;
  return c;
}

}  // namespace

TEST_CASE("Adam first step moves each coordinate by lr in the gradient's direction") {
  ParameterStore<double> store;
  auto w = store.add("w", Tensor<double>::from({3}, {1.0, -2.0, 0.5}));
  auto g = w.grad();
  g[0] = 0.3;
  g[1] = -4.0;
  g[2] = 0.0;
  Adam<double> adam(AdamConfig{0.1});
  adam.step(store, {"w"});
  const auto v = w.data();
  // m_hat = g and v_hat = g^2 after one step, so the update is lr * g / (|g| + eps).
  CHECK(v[0] == doctest::Approx(1.0 - 0.1 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(v[1] == doctest::Approx(-2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  CHECK(v[2] == 0.5);
}

TEST_CASE("ablation configs: grid, labels, JSON") {
  const auto grid = default_ablation_grid();
  CHECK(grid.size() == 8);
  const AblationConfig alpha{true, true, 0, TargetVariant::kFull};
  const AblationConfig beta{true, true, 1, TargetVariant::kFull};
  CHECK(std::find(grid.begin(), grid.end(), alpha) != grid.end());
  CHECK(std::find(grid.begin(), grid.end(), beta) != grid.end());
  CHECK(AblationConfig{false, false, 0, TargetVariant::kFull}.label() == "vanilla");
  CHECK(beta.label() == "MWIT+MIE+PT-1L");
  for (const auto& c : grid) CHECK(AblationConfig::from_json(c.to_json()) == c);
  CHECK_THROWS_AS(AblationConfig::from_json({{"pt_layers", 3}}), ConfigError);
  CHECK_THROWS_AS(AblationConfig::from_json({{"mwit", "yes"}}), ConfigError);
  CHECK_THROWS_AS(AblationConfig::from_json({{"colour", true}}), ConfigError);
}

TEST_CASE("stage datasets: captioning first, multi-way pairs only with mwit in stage 2") {
  std::vector<InstructionPair> pairs;
  for (TaskTag t : {TaskTag::kMI2T, TaskTag::kMV2T, TaskTag::kAny2T, TaskTag::kM2TCaption, TaskTag::kI2T,
                    TaskTag::kV2T}) {
    InstructionPair p;
    p.id = task_name(t);
    p.task = t;
    pairs.push_back(p);
  }
  InstructionPair held_out = pairs[0];
  held_out.id = "held";
  held_out.split = Split::kTest;
  pairs.push_back(held_out);
  auto ids = [](const std::vector<InstructionPair>& ps) {
    std::vector<std::string> out;
    for (const auto& p : ps) out.push_back(p.id);
    return out;
  };
  AblationConfig on;
  AblationConfig off = on;
  off.mwit = false;
  const std::vector<std::string> captioning = {"M2T-caption", "I2T", "V2T"};
  CHECK(ids(stage_pairs(pairs, 1, on)) == captioning);
  CHECK(ids(stage_pairs(pairs, 2, off)) == captioning);
  CHECK(ids(stage_pairs(pairs, 2, on)) == std::vector<std::string>{"MI2T", "MV2T", "M2T-caption", "I2T", "V2T"});
}

TEST_CASE("stage 1 leaves the LM bit-unchanged and moves adaptors and fusion") {
  ParameterStore<float> store;
  std::mt19937_64 rng(1);
  ResonanceModel<float> model(store, small_config(), rng);
  const auto data = random_examples(8, rng);
  const auto before = snapshot(store);
  Trainer<float> trainer(model, quick_stage(1, 6), 3);
  trainer.run(data);
  const auto after = snapshot(store);
  const auto trainable = trainer.trainable();
  for (const auto& [name, values] : before) {
    const bool in_set = std::find(trainable.begin(), trainable.end(), name) != trainable.end();
    if (name.rfind("lm.", 0) == 0) {
      CHECK_FALSE(in_set);
      REQUIRE_MESSAGE(after.at(name) == values, name);
    }
    if (!in_set) REQUIRE_MESSAGE(after.at(name) == values, name);
  }
  CHECK(after.at("adaptor.music.weight") != before.at("adaptor.music.weight"));
  CHECK(after.at("fusion.layers.0.attn.w_q.weight") != before.at("fusion.layers.0.attn.w_q.weight"));
}

TEST_CASE("stage 2 leaves base attention and unembedding bit-unchanged") {
  ParameterStore<float> store;
  std::mt19937_64 rng(2);
  ResonanceModel<float> model(store, small_config(), rng);
  CHECK_THROWS_AS(Trainer<float>(model, quick_stage(2, 1), 1), StateError);
  model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  const auto data = random_examples(8, rng);
  const auto before = snapshot(store);
  Trainer<float> trainer(model, quick_stage(2, 6), 4);
  trainer.run(data);
  const auto after = snapshot(store);
  for (const auto& name : model.lm().attention_weight_names()) REQUIRE(after.at(name) == before.at(name));
  CHECK(after.at("lm.unembed.weight") == before.at("lm.unembed.weight"));
  CHECK(after.at("lm.layers.0.ffn.w_in.weight") == before.at("lm.layers.0.ffn.w_in.weight"));
  CHECK(after.at("lm.tok_emb") != before.at("lm.tok_emb"));
  CHECK(after.at("lm.layers.1.attn.w_v.lora_b") != before.at("lm.layers.1.attn.w_v.lora_b"));
  CHECK(after.at("adaptor.image.weight") != before.at("adaptor.image.weight"));
  // The stage-1 set is a subset of the stage-2 set.
  const auto s1 = trainable_set(model, 1);
  const auto s2 = trainable_set(model, 2);
  for (const auto& n : s1) CHECK(std::find(s2.begin(), s2.end(), n) != s2.end());
}

TEST_CASE("same seed gives identical loss curves; another seed reorders batches") {
  auto curve = [](std::uint64_t seed) {
    ParameterStore<float> store;
    std::mt19937_64 rng(5);
    ResonanceModel<float> model(store, small_config(), rng);
    const auto data = random_examples(10, rng);
    Trainer<float> trainer(model, quick_stage(1, 8), seed);
    std::vector<double> losses;
    for (const auto& r : trainer.run(data)) losses.push_back(r.loss);
    return losses;
  };
  const auto a = curve(11);
  CHECK(a.size() == 8);
  CHECK(a == curve(11));
  CHECK(a != curve(12));
}

TEST_CASE("resume continues the loss curve of an uninterrupted run") {
  const auto cfg = small_config();
  auto fresh = [&](ParameterStore<float>& store, std::vector<TrainingExample>& data) {
    std::mt19937_64 rng(6);
    auto model = std::make_unique<ResonanceModel<float>>(store, cfg, rng);
    model->attach_lora(CausalLM<float>::default_lora_patterns(), rng);
    data = random_examples(10, rng);
    return model;
  };
  // Batch 4 over 10 examples: steps cross an epoch boundary mid-run.
  StageConfig full = quick_stage(2, 8);
  std::vector<double> reference;
  {
    ParameterStore<float> store;
    std::vector<TrainingExample> data;
    auto model = fresh(store, data);
    Trainer<float> t(*model, full, 9);
    for (const auto& r : t.run(data)) reference.push_back(r.loss);
  }
  TempDir dir("resume");
  StageConfig half = quick_stage(2, 4);
  std::vector<double> resumed;
  {
    ParameterStore<float> store;
    std::vector<TrainingExample> data;
    auto model = fresh(store, data);
    Trainer<float> t(*model, half, 9);
    for (const auto& r : t.run(data)) resumed.push_back(r.loss);
    t.save(dir.path() / "ckpt");
  }
  {
    ParameterStore<float> store;
    std::vector<TrainingExample> data;
    auto model = fresh(store, data);
    Trainer<float> t(*model, full, 123);
    t.resume(dir.path() / "ckpt");
    CHECK(t.state().step == 4);
    for (const auto& r : t.run(data)) resumed.push_back(r.loss);
  }
  REQUIRE(resumed.size() == reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) CHECK(resumed[i] == doctest::Approx(reference[i]).epsilon(1e-6));

  SUBCASE("mismatched configuration or stage is rejected") {
    ParameterStore<float> store;
    std::mt19937_64 rng(6);
    ResonanceModel<float> wide(store, small_config(32), rng);
    wide.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
    Trainer<float> t(wide, full, 9);
    CHECK_THROWS_AS(t.resume(dir.path() / "ckpt"), CheckpointError);

    ParameterStore<float> store1;
    std::mt19937_64 rng1(6);
    ResonanceModel<float> plain(store1, cfg, rng1);
    Trainer<float> s1(plain, quick_stage(1, 1), 9);
    CHECK_THROWS_AS(s1.resume(dir.path() / "ckpt"), CheckpointError);
  }
}

TEST_CASE("a non-finite loss aborts with the step and example named") {
  ParameterStore<float> store;
  std::mt19937_64 rng(7);
  ResonanceModel<float> model(store, small_config(), rng);
  auto data = random_examples(4, rng);
  data[2].input.media.music->matrix[0] = std::nan("");
  Trainer<float> trainer(model, quick_stage(1, 4), 1);
  try {
    trainer.run(data);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string what = e.what();
    CHECK(what.find("step 1") != std::string::npos);
    CHECK(what.find("ex-2") != std::string::npos);
  } catch (const DataError& e) {
    // Embedding validation may reject the input before the loss is formed.
    CHECK(std::string(e.what()).find("finite") != std::string::npos);
  }
}

TEST_CASE("end-to-end gradient check over both stage trainable sets") {
  for (int stage : {1, 2}) {
    CAPTURE(stage);
    ParameterStore<double> store;
    std::mt19937_64 rng(8);
    ResonanceModel<double> model(store, small_config(), rng);
    if (stage == 2) {
      model.attach_lora(CausalLM<double>::default_lora_patterns(), rng);
      std::normal_distribution<double> n(0.0, 0.3);
      for (const auto& name : model.lm().lora_parameter_names())
        for (auto& x : store.get(name).tensor.data()) x = n(rng);
    }
    const auto data = random_examples(1, rng);
    std::vector<GradCheckInput<double>> inputs;
    for (const auto& name : trainable_set(model, stage)) inputs.push_back({name, store.get(name).tensor});
    const auto r = grad_check<double>([&] { return model.loss(data[0].input, data[0].target); }, inputs, 1e-6);
    INFO("worst: ", r.worst_coordinate);
    CHECK(r.max_rel_error <= 1e-4);
  }
}
