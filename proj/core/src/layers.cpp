// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/layers.hpp"

#include <cmath>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

template <typename T>
double alpha_over_rank(const LoRAAdapter<T>& a) {
  return a.alpha / static_cast<double>(a.rank);
}

}  // namespace

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                  double init_std, std::mt19937_64& rng, bool bias)
    : name_(name), weight_name_(name + ".weight"), in_(in), out_(out) {
  weight_ = store.add_normal(weight_name_, {out, in}, init_std, rng);
  if (bias) bias_ = store.add_constant(name + ".bias", {out}, T(0));
}

template <typename T>
Tensor<T> Linear<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> y = matmul_nt(x, weight_);
  if (lora_) {
    Tensor<T> low = matmul_nt(matmul_nt(x, lora_->a), lora_->b);
    y = add(y, scale(low, lora_->scaling()));
  }
  if (bias_.defined()) y = add_bias(y, bias_);
  return y;
}

template <typename T>
void Linear<T>::attach_lora(ParameterStore<T>& store, std::size_t rank, double alpha, std::mt19937_64& rng) {
  if (lora_) throw StateError("LoRA adapter already attached to " + weight_name_);
  if (rank == 0) throw ConfigError("LoRA rank must be positive");
  LoRAAdapter<T> adapter;
  adapter.target = weight_name_;
  adapter.rank = rank;
  adapter.alpha = alpha;
  adapter.a = store.add_normal(name_ + ".lora_a", {rank, in_}, 1.0 / std::sqrt(static_cast<double>(in_)), rng);
  adapter.b = store.add_constant(name_ + ".lora_b", {out_, rank}, T(0));
  lora_ = std::move(adapter);
}

template <typename T>
void Linear<T>::merge_lora(ParameterStore<T>& store) {
  if (!lora_) throw StateError("no LoRA adapter attached to " + weight_name_);
  const double s = alpha_over_rank(*lora_);
  auto w = weight_.data();
  auto a = lora_->a.data();
  auto b = lora_->b.data();
  const std::size_t r = lora_->rank;
  for (std::size_t i = 0; i < out_; ++i) {
    for (std::size_t j = 0; j < in_; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < r; ++k) acc += static_cast<double>(b[i * r + k]) * static_cast<double>(a[k * in_ + j]);
      w[i * in_ + j] = static_cast<T>(static_cast<double>(w[i * in_ + j]) + s * acc);
    }
  }
  store.remove(name_ + ".lora_a");
  store.remove(name_ + ".lora_b");
  lora_.reset();
}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterStore<T>& store, const std::string& name, std::size_t dim) {
  gamma = store.add_constant(name + ".gamma", {dim}, T(1));
  beta = store.add_constant(name + ".beta", {dim}, T(0));
}

template <typename T>
TransformerBlock<T>::TransformerBlock(ParameterStore<T>& store, const std::string& prefix, std::size_t d_model,
                                      std::size_t n_heads, std::size_t n_layers_total, std::mt19937_64& rng)
    : d_model_(d_model), n_heads_(n_heads) {
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                      std::to_string(n_heads));
  }
  const double std_in = 1.0 / std::sqrt(static_cast<double>(d_model));
  const double std_out = std_in / std::sqrt(2.0 * static_cast<double>(std::max<std::size_t>(1, n_layers_total)));
  ln_attn_ = LayerNorm<T>(store, prefix + ".ln_attn", d_model);
  w_q_ = Linear<T>(store, prefix + ".attn.w_q", d_model, d_model, std_in, rng);
  w_k_ = Linear<T>(store, prefix + ".attn.w_k", d_model, d_model, std_in, rng);
  w_v_ = Linear<T>(store, prefix + ".attn.w_v", d_model, d_model, std_in, rng);
  w_o_ = Linear<T>(store, prefix + ".attn.w_o", d_model, d_model, std_out, rng);
  ln_ffn_ = LayerNorm<T>(store, prefix + ".ln_ffn", d_model);
  ffn_in_ = Linear<T>(store, prefix + ".ffn.w_in", d_model, 4 * d_model, std_in, rng);
  ffn_out_ = Linear<T>(store, prefix + ".ffn.w_out", 4 * d_model, d_model,
                       std_out / 2.0, rng);
}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(const Tensor<T>& x, AttentionMask mask, LayerCache<T>* cache,
                                       double dropout_p, std::mt19937_64* rng) const {
  if (cache && mask != AttentionMask::kCausal) throw ConfigError("key/value caching requires causal attention");
  const std::size_t past = cache ? cache->length() : 0;
  const Tensor<T> h = ln_attn_(x);
  const Tensor<T> q = w_q_(h);
  Tensor<T> k = w_k_(h);
  Tensor<T> v = w_v_(h);
  if (cache) {
    if (past > 0) {
      k = concat<T>({cache->keys, k}, 0);
      v = concat<T>({cache->values, v}, 0);
    }
    cache->keys = k;
    cache->values = v;
  }
  const std::size_t d_head = d_model_ / n_heads_;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(d_head));
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads_);
  for (std::size_t head = 0; head < n_heads_; ++head) {
    const std::size_t lo = head * d_head, hi = lo + d_head;
    const Tensor<T> qh = n_heads_ == 1 ? q : slice(q, 1, lo, hi);
    const Tensor<T> kh = n_heads_ == 1 ? k : slice(k, 1, lo, hi);
    const Tensor<T> vh = n_heads_ == 1 ? v : slice(v, 1, lo, hi);
    const Tensor<T> scores = scale(matmul_nt(qh, kh), inv_sqrt);
    const Tensor<T> probs = mask == AttentionMask::kCausal ? softmax_causal(scores, past) : softmax(scores, 1);
    heads.push_back(matmul(probs, vh));
  }
  Tensor<T> attn = n_heads_ == 1 ? heads[0] : concat(heads, 1);
  attn = w_o_(attn);
  if (dropout_p > 0.0 && rng) attn = dropout(attn, dropout_p, *rng);
  const Tensor<T> mid = add(x, attn);
  Tensor<T> ff = ffn_out_(gelu(ffn_in_(ln_ffn_(mid))));
  if (dropout_p > 0.0 && rng) ff = dropout(ff, dropout_p, *rng);
  return add(mid, ff);
}

template <typename T>
std::vector<Linear<T>*> TransformerBlock<T>::linears() {
  return {&w_q_, &w_k_, &w_v_, &w_o_, &ffn_in_, &ffn_out_};
}

template <typename T>
std::vector<const Linear<T>*> TransformerBlock<T>::linears() const {
  return {&w_q_, &w_k_, &w_v_, &w_o_, &ffn_in_, &ffn_out_};
}

template class Linear<float>;
template class Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template class TransformerBlock<float>;
template class TransformerBlock<double>;

}  // namespace resonance
