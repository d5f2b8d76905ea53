// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/text_lm.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>

#include "resonance/errors.hpp"

namespace resonance {

void LMConfig::validate() const {
  if (vocab_size < 7) throw ConfigError("vocab_size must include the special tokens");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " must be divisible by n_heads " +
                      std::to_string(n_heads));
  }
  if (max_sequence_length == 0) throw ConfigError("max_sequence_length must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
}

template <typename T>
void TokenSequence<T>::validate() const {
  if (!rows.defined() || rows.rank() != 2) throw ShapeError("token sequence rows must be a matrix");
  if (roles.size() != rows.rows()) {
    throw ShapeError("token sequence has " + std::to_string(rows.rows()) + " rows but " +
                     std::to_string(roles.size()) + " roles");
  }
  bool in_target = false;
  for (auto r : roles) {
    if (r == SegmentRole::kTarget) {
      in_target = true;
    } else if (in_target) {
      throw ShapeError("target rows must form a contiguous suffix of the sequence");
    }
  }
}

template <typename T>
CausalLM<T>::CausalLM(ParameterStore<T>& store, const LMConfig& config, std::mt19937_64& rng, std::string prefix)
    : store_(&store), config_(config), prefix_(std::move(prefix)), dropout_rng_(rng()) {
  config_.validate();
  const auto d = config_.d_model;
  tok_emb_name_ = prefix_ + ".tok_emb";
  tok_emb_ = store.add_normal(tok_emb_name_, {config_.vocab_size, d}, 1.0, rng);
  pos_emb_ = store.add_normal(prefix_ + ".pos_emb", {config_.max_sequence_length, d}, 0.1, rng);
  blocks_.reserve(config_.n_layers);
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    blocks_.emplace_back(store, prefix_ + ".layers." + std::to_string(l), d, config_.n_heads, config_.n_layers, rng);
  }
  ln_final_ = LayerNorm<T>(store, prefix_ + ".ln_final", d);
  unembed_ = store.add_normal(prefix_ + ".unembed.weight", {config_.vocab_size, d},
                              1.0 / std::sqrt(static_cast<double>(d)), rng);
}

template <typename T>
Tensor<T> CausalLM<T>::embed(std::span<const TokenId> ids) const {
  if (ids.empty()) return Tensor<T>::zeros({0, config_.d_model});
  return embedding_lookup(tok_emb_, ids);
}

template <typename T>
Tensor<T> CausalLM<T>::hidden(const Tensor<T>& rows, std::vector<LayerCache<T>>* cache) const {
  if (rows.rank() != 2 || rows.cols() != config_.d_model) {
    throw ShapeError("LM input rows " + shape_str(rows.shape()) + " do not have width " +
                     std::to_string(config_.d_model));
  }
  const std::size_t past = (cache && !cache->empty()) ? (*cache)[0].length() : 0;
  const std::size_t n = rows.rows();
  if (n == 0) throw ShapeError("LM input has no rows");
  if (past + n > config_.max_sequence_length) {
    throw SequenceLengthError("sequence of " + std::to_string(past + n) + " positions exceeds max_sequence_length " +
                              std::to_string(config_.max_sequence_length));
  }
  if (cache && cache->size() != blocks_.size()) cache->resize(blocks_.size());
  Tensor<T> x = add(rows, slice(pos_emb_, 0, past, past + n));
  std::mt19937_64* rng = config_.dropout > 0.0 ? &dropout_rng_ : nullptr;
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    x = blocks_[l].forward(x, AttentionMask::kCausal, cache ? &(*cache)[l] : nullptr, config_.dropout, rng);
  }
  return ln_final_(x);
}

template <typename T>
Tensor<T> CausalLM<T>::project(const Tensor<T>& h) const {
  return matmul_nt(h, unembed_);
}

template <typename T>
Tensor<T> CausalLM<T>::forward_causal(const TokenSequence<T>& seq) const {
  seq.validate();
  return project(hidden(seq.rows));
}

template <typename T>
std::vector<TokenId> CausalLM<T>::generate(const Tensor<T>& prefix_rows, const GenerationOptions& options) const {
  std::vector<TokenId> out;
  if (options.max_new == 0) return out;
  NoGradGuard no_grad;
  std::vector<LayerCache<T>> cache;
  Tensor<T> h = hidden(prefix_rows, &cache);
  std::size_t length = prefix_rows.rows();
  std::mt19937_64 rng(options.seed);
  while (out.size() < options.max_new) {
    const Tensor<T> logits = project(slice(h, 0, h.rows() - 1, h.rows()));
    const auto row = logits.data();
    TokenId next = 0;
    if (options.temperature <= 0.0) {
      next = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    } else {
      std::vector<double> weights(row.size());
      const double mx = static_cast<double>(*std::max_element(row.begin(), row.end()));
      for (std::size_t v = 0; v < row.size(); ++v) {
        weights[v] = std::exp((static_cast<double>(row[v]) - mx) / options.temperature);
      }
      std::discrete_distribution<TokenId> pick(weights.begin(), weights.end());
      next = pick(rng);
    }
    if (next == options.eos) break;
    out.push_back(next);
    if (length + 1 > config_.max_sequence_length) break;
    const TokenId ids[1] = {next};
    h = hidden(embed(ids), &cache);
    ++length;
  }
  return out;
}

template <typename T>
std::size_t CausalLM<T>::attach_lora(const std::vector<std::string>& patterns, std::size_t rank, double alpha,
                                     std::mt19937_64& rng) {
  std::vector<Linear<T>*> targets;
  for (const auto& pattern : patterns) {
    bool matched = false;
    for (auto& block : blocks_) {
      for (Linear<T>* lin : block.linears()) {
        if (fnmatch(pattern.c_str(), lin->weight_name().c_str(), 0) != 0) continue;
        matched = true;
        if (std::find(targets.begin(), targets.end(), lin) == targets.end()) targets.push_back(lin);
      }
    }
    if (!matched) throw ConfigError("LoRA target pattern '" + pattern + "' matches no weight");
  }
  for (Linear<T>* lin : targets) lin->attach_lora(*store_, rank, alpha, rng);
  return targets.size();
}

template <typename T>
void CausalLM<T>::merge_lora() {
  if (!has_lora()) throw StateError("merge_lora: no adapters attached (already merged?)");
  for (auto& block : blocks_) {
    for (Linear<T>* lin : block.linears()) {
      if (lin->has_lora()) lin->merge_lora(*store_);
    }
  }
}

template <typename T>
bool CausalLM<T>::has_lora() const {
  for (const auto& block : blocks_) {
    for (const Linear<T>* lin : block.linears()) {
      if (lin->has_lora()) return true;
    }
  }
  return false;
}

template <typename T>
std::vector<std::string> CausalLM<T>::lora_parameter_names() const {
  std::vector<std::string> names;
  for (const auto& block : blocks_) {
    for (const Linear<T>* lin : block.linears()) {
      if (!lin->has_lora()) continue;
      const auto& w = lin->weight_name();
      const auto base = w.substr(0, w.size() - std::string(".weight").size());
      names.push_back(base + ".lora_a");
      names.push_back(base + ".lora_b");
    }
  }
  return names;
}

template <typename T>
std::vector<std::string> CausalLM<T>::attention_weight_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    for (const char* w : {"w_q", "w_k", "w_v", "w_o"}) {
      names.push_back(prefix_ + ".layers." + std::to_string(l) + ".attn." + w + ".weight");
    }
  }
  return names;
}

template <typename T>
std::vector<std::string> CausalLM<T>::default_lora_patterns(const std::string& prefix) {
  return {prefix + ".layers.*.attn.w_[qkvo].weight"};
}

template struct TokenSequence<float>;
template struct TokenSequence<double>;
template class CausalLM<float>;
template class CausalLM<double>;

}  // namespace resonance
