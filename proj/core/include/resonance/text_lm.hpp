// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Decoder-only causal language model with learned absolute positions, an
// untied output projection and optional LoRA adapters.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "resonance/layers.hpp"

namespace resonance {

struct LMConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 64;
  std::size_t n_layers = 4;
  std::size_t n_heads = 4;
  std::size_t max_sequence_length = 512;
  double dropout = 0.0;

  /// Throws ConfigError when inconsistent.
  void validate() const;
};

enum class SegmentRole : std::uint8_t { kFusedInput, kQuery, kTarget };

/// Input rows of the causal LM, each tagged with its role.
template <typename T>
struct TokenSequence {
  Tensor<T> rows;  // [T x d_model]
  std::vector<SegmentRole> roles;

  /// Roles must align with rows and target rows must be a contiguous suffix.
  void validate() const;
};

struct GenerationOptions {
  std::size_t max_new = 64;
  /// 0 selects greedy decoding.
  double temperature = 0.0;
  std::uint64_t seed = 0;
  TokenId eos = 3;
};

template <typename T>
class CausalLM {
 public:
  CausalLM(ParameterStore<T>& store, const LMConfig& config, std::mt19937_64& rng, std::string prefix = "lm");

  const LMConfig& config() const { return config_; }
  const std::string& prefix() const { return prefix_; }
  const std::string& token_embedding_name() const { return tok_emb_name_; }

  /// Token embeddings without positions, [n x d_model].
  Tensor<T> embed(std::span<const TokenId> ids) const;

  /// Final-norm hidden states for rows placed after the cached positions.
  /// Throws SequenceLengthError past max_sequence_length.
  Tensor<T> hidden(const Tensor<T>& rows, std::vector<LayerCache<T>>* cache = nullptr) const;
  Tensor<T> project(const Tensor<T>& hidden) const;

  /// Logits for every row, [T x vocab].
  Tensor<T> forward_causal(const TokenSequence<T>& seq) const;

  /// Decodes after the prefix rows until eos or max_new tokens. The eos id is
  /// not included in the result. Stops early at max_sequence_length.
  std::vector<TokenId> generate(const Tensor<T>& prefix_rows, const GenerationOptions& options) const;

  /// Attaches adapters to every Linear whose weight name matches one of the
  /// shell-style patterns. Throws ConfigError if a pattern matches nothing.
  /// Returns the number of adapters attached.
  std::size_t attach_lora(const std::vector<std::string>& patterns, std::size_t rank, double alpha,
                          std::mt19937_64& rng);
  void merge_lora();
  bool has_lora() const;
  std::vector<std::string> lora_parameter_names() const;
  /// Weight names of all attention projections.
  std::vector<std::string> attention_weight_names() const;

  static std::vector<std::string> default_lora_patterns(const std::string& prefix = "lm");

 private:
  ParameterStore<T>* store_;
  LMConfig config_;
  std::string prefix_;
  std::string tok_emb_name_;
  Tensor<T> tok_emb_;
  Tensor<T> pos_emb_;
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> ln_final_;
  Tensor<T> unembed_;
  mutable std::mt19937_64 dropout_rng_;
};

extern template class CausalLM<float>;
extern template class CausalLM<double>;
extern template struct TokenSequence<float>;
extern template struct TokenSequence<double>;

}  // namespace resonance
