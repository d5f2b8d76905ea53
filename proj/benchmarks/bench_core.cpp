// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "resonance/metrics.hpp"
#include "resonance/model.hpp"
#include "resonance/music_features.hpp"
#include "resonance/ops.hpp"
#include "resonance/synth.hpp"

using namespace resonance;

namespace {

Tensor<float> random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, bool grad) {
  std::normal_distribution<float> n;
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return Tensor<float>::from({rows, cols}, std::move(v), grad);
}

ModelConfig bench_model(std::size_t d) {
  ModelConfig c;
  c.lm.vocab_size = 256;
  c.lm.d_model = d;
  c.lm.n_layers = 2;
  c.lm.n_heads = 4;
  c.lm.max_sequence_length = 256;
  c.d_enc = 128;
  c.fusion_heads = 4;
  c.fusion_max_length = 64;
  return c;
}

ModelInput bench_input(std::mt19937_64& rng, std::size_t query_len) {
  std::normal_distribution<double> n;
  auto set = [&](Modality m, std::size_t count) {
    ClipEmbeddingSet s{m, count, 128, std::vector<double>(count * 128)};
    for (auto& v : s.matrix) v = n(rng);
    return s;
  };
  ModelInput in;
  in.media.music = set(Modality::kMusic, 4);
  in.media.image = set(Modality::kImage, 1);
  in.text = {4, 5};
  in.query.assign(query_len, 10);
  return in;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(n, n, rng, false);
  const auto b = random_matrix(n, n, rng, false);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_ModelLossBackward(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  ParameterStore<float> store;
  std::mt19937_64 rng(2);
  ResonanceModel<float> model(store, bench_model(d), rng);
  model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  const ModelInput in = bench_input(rng, 48);
  const std::vector<TokenId> target(120, 20);
  for (auto _ : state) {
    auto loss = model.loss(in, target);
    loss.backward();
    store.zero_grad();
  }
}
BENCHMARK(BM_ModelLossBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_GreedyGeneration(benchmark::State& state) {
  ParameterStore<float> store;
  std::mt19937_64 rng(3);
  ResonanceModel<float> model(store, bench_model(32), rng);
  const ModelInput in = bench_input(rng, 48);
  GenerationOptions opts;
  opts.max_new = 120;
  opts.eos = -1;
  for (auto _ : state) benchmark::DoNotOptimize(model.generate(in, opts));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 120));
}
BENCHMARK(BM_GreedyGeneration)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  MusicSpec spec;
  spec.bpm = 97.0;
  spec.key_root = 2;
  spec.progression = {0, 3, 4, 0};
  const RawMusic music = synth_music(spec);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(music));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  const std::string ref =
      "A lively bright piece in D major that moves through the D major, G major and A major chords over a steady "
      "click. The tempo sits near 112 BPM.";
  const std::string cand =
      "A lively piece in D major that moves through the G major and A major chords. The tempo sits near 110 BPM.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu(cand, ref));
    benchmark::DoNotOptimize(rouge_l(cand, ref));
  }
}
BENCHMARK(BM_Metrics);

}  // namespace
BENCHMARK_MAIN();
