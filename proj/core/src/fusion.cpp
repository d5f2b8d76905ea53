// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/fusion.hpp"

#include <cmath>

#include "resonance/errors.hpp"

namespace resonance {

FusedSegment segment_of(Modality m) {
  switch (m) {
    case Modality::kMusic: return FusedSegment::kMusic;
    case Modality::kVideo: return FusedSegment::kVideo;
    case Modality::kImage: return FusedSegment::kImage;
  }
  return FusedSegment::kText;
}

template <typename T>
Tensor<T> embedding_tensor(const ClipEmbeddingSet& set) {
  set.validate();
  std::vector<T> v(set.matrix.begin(), set.matrix.end());
  return Tensor<T>::from({set.count, set.dim}, std::move(v));
}

template <typename T>
Tensor<T> embedding_tensor(std::span<const double> row) {
  std::vector<T> v(row.begin(), row.end());
  return Tensor<T>::from({1, row.size()}, std::move(v));
}

template <typename T>
ModalityAdaptors<T>::ModalityAdaptors(ParameterStore<T>& store, std::size_t d_enc, std::size_t d_model,
                                      std::mt19937_64& rng, std::vector<Modality> modalities,
                                      const std::string& prefix) {
  for (Modality m : modalities) {
    auto& slot = linears_[static_cast<std::size_t>(m)];
    if (slot) throw ConfigError("adaptor for " + modality_name(m) + " registered twice");
    slot.emplace(store, prefix + "." + modality_name(m), d_enc, d_model, 1.0, rng);
  }
}

template <typename T>
const Linear<T>& ModalityAdaptors<T>::linear(Modality m) const {
  const auto& slot = linears_[static_cast<std::size_t>(m)];
  if (!slot) throw ConfigError("no adaptor registered for modality " + modality_name(m));
  return *slot;
}

template <typename T>
Tensor<T> ModalityAdaptors<T>::adapt(Modality m, const Tensor<T>& rows) const {
  const Linear<T>& lin = linear(m);
  if (rows.rank() != 2 || rows.cols() != lin.in_features()) {
    throw ShapeError("adaptor for " + modality_name(m) + " expects width " + std::to_string(lin.in_features()) +
                     ", got " + shape_str(rows.shape()));
  }
  return lin(rows);
}

template <typename T>
FusionTransformer<T>::FusionTransformer(ParameterStore<T>& store, std::size_t d_model, std::size_t n_layers,
                                        std::size_t n_heads, std::size_t max_length, std::mt19937_64& rng,
                                        const std::string& prefix)
    : d_model_(d_model), max_length_(max_length) {
  if (max_length == 0) throw ConfigError("fusion max length must be positive");
  if (n_layers == 0) return;
  pos_emb_ = store.add_normal(prefix + ".pos_emb", {max_length, d_model}, 0.1, rng);
  seg_emb_ = store.add_normal(prefix + ".seg_emb", {kFusedSegmentTypes, d_model}, 0.1, rng);
  for (std::size_t l = 0; l < n_layers; ++l) {
    blocks_.emplace_back(store, prefix + ".layers." + std::to_string(l), d_model, n_heads, n_layers, rng);
  }
  ln_out_ = LayerNorm<T>(store, prefix + ".ln_out", d_model);
}

template <typename T>
Tensor<T> FusionTransformer<T>::fuse(const Tensor<T>& rows, std::span<const FusedSegment> segments) const {
  if (rows.rank() != 2) throw ShapeError("fusion input must be a matrix, got " + shape_str(rows.shape()));
  if (segments.size() != rows.rows()) {
    throw ShapeError("fusion input has " + std::to_string(rows.rows()) + " rows but " +
                     std::to_string(segments.size()) + " segment tags");
  }
  if (rows.rows() > max_length_) {
    throw SequenceLengthError("fused block of " + std::to_string(rows.rows()) + " rows exceeds fusion max length " +
                              std::to_string(max_length_));
  }
  if (blocks_.empty() || rows.rows() == 0) return rows;
  if (rows.cols() != d_model_) throw ShapeError("fusion input width does not match d_model");
  std::vector<TokenId> seg_ids;
  seg_ids.reserve(segments.size());
  for (auto s : segments) seg_ids.push_back(static_cast<TokenId>(s));
  Tensor<T> x = add(rows, slice(pos_emb_, 0, 0, rows.rows()));
  x = add(x, embedding_lookup(seg_emb_, std::span<const TokenId>(seg_ids)));
  for (const auto& block : blocks_) x = block.forward(x, AttentionMask::kBidirectional);
  return ln_out_(x);
}

template Tensor<float> embedding_tensor<float>(const ClipEmbeddingSet&);
template Tensor<double> embedding_tensor<double>(const ClipEmbeddingSet&);
template Tensor<float> embedding_tensor<float>(std::span<const double>);
template Tensor<double> embedding_tensor<double>(std::span<const double>);
template class ModalityAdaptors<float>;
template class ModalityAdaptors<double>;
template class FusionTransformer<float>;
template class FusionTransformer<double>;

}  // namespace resonance
