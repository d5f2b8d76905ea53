// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Building blocks shared by the causal LM and the fusion transformer.

#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "resonance/ops.hpp"
#include "resonance/parameters.hpp"

namespace resonance {

/// Low-rank additive update of a frozen weight W[out x in]:
/// W_eff = W + (alpha / rank) * B * A, with B zero-initialized.
template <typename T>
struct LoRAAdapter {
  std::string target;
  Tensor<T> a;  // [rank x in]
  Tensor<T> b;  // [out x rank]
  std::size_t rank = 0;
  double alpha = 0.0;

  T scaling() const { return static_cast<T>(alpha / static_cast<double>(rank)); }
};

/// y = x W^T + b, plus the LoRA path when attached.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out, double init_std,
         std::mt19937_64& rng, bool bias = true);

  Tensor<T> operator()(const Tensor<T>& x) const;

  const std::string& weight_name() const { return weight_name_; }
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const Tensor<T>& weight() const { return weight_; }

  bool has_lora() const { return lora_.has_value(); }
  const std::optional<LoRAAdapter<T>>& lora() const { return lora_; }
  void attach_lora(ParameterStore<T>& store, std::size_t rank, double alpha, std::mt19937_64& rng);
  /// Folds the adapter into the weight and unregisters A and B.
  void merge_lora(ParameterStore<T>& store);

 private:
  std::string name_;
  std::string weight_name_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Tensor<T> weight_;
  Tensor<T> bias_;
  std::optional<LoRAAdapter<T>> lora_;
};

template <typename T>
struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t dim);
  Tensor<T> operator()(const Tensor<T>& x) const { return layer_norm(x, gamma, beta); }

  Tensor<T> gamma;
  Tensor<T> beta;
};

enum class AttentionMask { kCausal, kBidirectional };

/// Keys and values of earlier positions for incremental causal decoding.
template <typename T>
struct LayerCache {
  Tensor<T> keys;
  Tensor<T> values;
  std::size_t length() const { return keys.defined() ? keys.rows() : 0; }
};

/// Pre-norm block: x + MHA(LN(x)), then h + FFN(LN(h)).
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParameterStore<T>& store, const std::string& prefix, std::size_t d_model, std::size_t n_heads,
                   std::size_t n_layers_total, std::mt19937_64& rng);

  /// With a cache (causal only), x holds the new rows; the cache is extended.
  Tensor<T> forward(const Tensor<T>& x, AttentionMask mask, LayerCache<T>* cache = nullptr,
                    double dropout_p = 0.0, std::mt19937_64* rng = nullptr) const;

  std::vector<Linear<T>*> linears();
  std::vector<const Linear<T>*> linears() const;

 private:
  std::size_t d_model_ = 0;
  std::size_t n_heads_ = 0;
  LayerNorm<T> ln_attn_;
  LayerNorm<T> ln_ffn_;
  Linear<T> w_q_;
  Linear<T> w_k_;
  Linear<T> w_v_;
  Linear<T> w_o_;
  Linear<T> ffn_in_;
  Linear<T> ffn_out_;
};

extern template class Linear<float>;
extern template class Linear<double>;
extern template struct LayerNorm<float>;
extern template struct LayerNorm<double>;
extern template class TransformerBlock<float>;
extern template class TransformerBlock<double>;

}  // namespace resonance
