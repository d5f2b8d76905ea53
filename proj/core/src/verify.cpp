// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/verify.hpp"

#include <chrono>
#include <random>

#include "resonance/tokenizer.hpp"

namespace resonance {

ModelConfig PipelineGradcheckOptions::micro_model() {
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

PipelineGradcheckResult run_pipeline_gradcheck(const PipelineGradcheckOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ParameterStore<double> store;
  std::mt19937_64 rng(options.seed);
  ResonanceModel<double> model(store, options.model, rng);
  model.attach_lora(CausalLM<double>::default_lora_patterns(), rng);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (const auto& name : model.lm().lora_parameter_names())
    for (auto& x : store.get(name).tensor.data()) x = normal(rng);

  const std::size_t d_enc = options.model.d_enc;
  auto clip_set = [&](Modality m, std::size_t n) {
    ClipEmbeddingSet s{m, n, d_enc, std::vector<double>(n * d_enc)};
    for (auto& v : s.matrix) v = normal(rng);
    return s;
  };
  const auto vocab = static_cast<TokenId>(options.model.lm.vocab_size);
  std::uniform_int_distribution<TokenId> token(Tokenizer::kSpecialCount, vocab - 1);
  ModelInput input;
  input.media.music = clip_set(Modality::kMusic, options.clips);
  input.media.video = clip_set(Modality::kVideo, options.clips);
  input.media.image = clip_set(Modality::kImage, 1);
  input.text = {Tokenizer::kMusic, Tokenizer::kVideo, Tokenizer::kImage, token(rng)};
  input.query = {token(rng), token(rng), token(rng)};
  const std::vector<TokenId> target = {token(rng), token(rng), token(rng), token(rng)};

  std::vector<GradCheckInput<double>> inputs;
  for (auto& p : store.all()) inputs.push_back({p.name, p.tensor});
  PipelineGradcheckResult result;
  result.parameters = inputs.size();
  result.check = grad_check<double>([&] { return model.loss(input, target); }, inputs, options.epsilon);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace resonance
