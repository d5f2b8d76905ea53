// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// The multimodal model: frozen clip embeddings -> adaptors -> optional fusion
// transformer over [music | video | image | input text] -> causal LM, with the
// instruction (query) and target embedded directly by the LM.
//
// Sequence layout: fused block, then query tokens and <bos>, then target
// tokens and <eos>. Row i's logits predict the token of row i + 1.

#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "resonance/fusion.hpp"
#include "resonance/text_lm.hpp"

namespace resonance {

struct ModelConfig {
  LMConfig lm;
  std::size_t d_enc = 128;
  /// Fusion transformer depth; 0 disables it.
  std::size_t pt_layers = 1;
  std::size_t fusion_heads = 4;
  std::size_t fusion_max_length = 128;
  /// Multi-sampled embeddings; off pools each modality to one row.
  bool mie = true;
  std::size_t lora_rank = 32;
  double lora_alpha = 32.0;

  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys raise ConfigError.
  static ModelConfig from_json(const nlohmann::json& j);
};

/// kVanilla pools every modality and skips the fusion transformer whatever
/// the configuration says; kConfigured follows mie and pt_layers.
enum class AssemblyMode { kVanilla, kConfigured };

struct ModalityInputs {
  std::optional<ClipEmbeddingSet> music;
  std::optional<ClipEmbeddingSet> video;
  std::optional<ClipEmbeddingSet> image;

  bool empty() const { return !music && !video && !image; }
};

struct ModelInput {
  ModalityInputs media;
  /// Input text e_t (placeholders included); fused with the media.
  std::vector<TokenId> text;
  /// Instruction tokens; bypass the fusion transformer.
  std::vector<TokenId> query;
};

template <typename T>
struct AssembledSequence {
  TokenSequence<T> sequence;
  /// True exactly on target rows (target tokens and the closing <eos>).
  std::vector<bool> supervision;
  /// Token id of each row, -1 for rows of the fused media part.
  std::vector<TokenId> row_tokens;
  std::size_t fused_rows = 0;
  std::size_t query_rows = 0;
  std::size_t target_rows = 0;

  std::size_t length() const { return supervision.size(); }
};

struct TokenAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

template <typename T>
class ResonanceModel {
 public:
  ResonanceModel(ParameterStore<T>& store, const ModelConfig& config, std::mt19937_64& rng);

  const ModelConfig& config() const { return config_; }
  ParameterStore<T>& store() { return *store_; }
  const ParameterStore<T>& store() const { return *store_; }
  CausalLM<T>& lm() { return lm_; }
  const CausalLM<T>& lm() const { return lm_; }
  const ModalityAdaptors<T>& adaptors() const { return adaptors_; }
  const FusionTransformer<T>& fusion() const { return fusion_; }

  /// Adapted (and, when configured, fused) rows of media and input text.
  Tensor<T> fused_block(const ModelInput& input, AssemblyMode mode) const;

  /// Throws DataError when neither media nor input text is present unless
  /// allow_unconditioned is set.
  AssembledSequence<T> assemble(const ModelInput& input, std::span<const TokenId> target, AssemblyMode mode,
                                bool allow_unconditioned = false) const;

  /// Logits for every row of the sequence.
  Tensor<T> logits(const AssembledSequence<T>& seq) const;
  /// Logits of the rows that predict target tokens, in order, and their labels.
  Tensor<T> target_logits(const AssembledSequence<T>& seq, std::vector<TokenId>* labels) const;

  /// Mean cross-entropy over the target tokens and the closing <eos>.
  Tensor<T> loss(const ModelInput& input, std::span<const TokenId> target,
                 AssemblyMode mode = AssemblyMode::kConfigured, bool allow_unconditioned = false) const;
  /// Teacher-forced argmax accuracy over the same positions as loss().
  TokenAccuracy accuracy(const ModelInput& input, std::span<const TokenId> target,
                         AssemblyMode mode = AssemblyMode::kConfigured) const;

  std::vector<TokenId> generate(const ModelInput& input, const GenerationOptions& options,
                                AssemblyMode mode = AssemblyMode::kConfigured) const;

  /// Attaches adapters at the configured rank and alpha.
  std::size_t attach_lora(const std::vector<std::string>& patterns, std::mt19937_64& rng);

  /// Parameter names per group; used to build trainable sets.
  std::vector<std::string> adaptor_parameters() const;
  std::vector<std::string> fusion_parameters() const;

 private:
  ParameterStore<T>* store_;
  ModelConfig config_;
  ModalityAdaptors<T> adaptors_;
  FusionTransformer<T> fusion_;
  CausalLM<T> lm_;
};

extern template class ResonanceModel<float>;
extern template class ResonanceModel<double>;
extern template struct AssembledSequence<float>;
extern template struct AssembledSequence<double>;

}  // namespace resonance
