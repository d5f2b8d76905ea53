// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Per-modality linear adaptors and the bidirectional fusion transformer that
// mixes adapted modality rows with input-text embeddings before the LM.

#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "resonance/encoders.hpp"
#include "resonance/layers.hpp"

namespace resonance {

/// Segment type of a row inside the fused block, in block order.
enum class FusedSegment : std::uint8_t { kMusic = 0, kVideo = 1, kImage = 2, kText = 3 };
inline constexpr std::size_t kFusedSegmentTypes = 4;

FusedSegment segment_of(Modality m);

template <typename T>
Tensor<T> embedding_tensor(const ClipEmbeddingSet& set);
template <typename T>
Tensor<T> embedding_tensor(std::span<const double> row);

/// Linear maps d_enc -> d_model, one per registered modality, named
/// "<prefix>.<modality>.weight" / ".bias".
template <typename T>
class ModalityAdaptors {
 public:
  ModalityAdaptors() = default;
  ModalityAdaptors(ParameterStore<T>& store, std::size_t d_enc, std::size_t d_model, std::mt19937_64& rng,
                   std::vector<Modality> modalities = {Modality::kMusic, Modality::kVideo, Modality::kImage},
                   const std::string& prefix = "adaptor");

  /// [N x d_enc] -> [N x d_model]. Throws ConfigError for an unregistered
  /// modality and ShapeError for a width mismatch.
  Tensor<T> adapt(Modality m, const Tensor<T>& rows) const;
  Tensor<T> adapt(const ClipEmbeddingSet& set) const { return adapt(set.modality, embedding_tensor<T>(set)); }

  bool has(Modality m) const { return linears_[static_cast<std::size_t>(m)].has_value(); }
  const Linear<T>& linear(Modality m) const;

 private:
  std::array<std::optional<Linear<T>>, 3> linears_;
};

/// Pre-norm bidirectional transformer over the fused block. Learned position
/// and segment-type embeddings are added to the input when n_layers > 0;
/// n_layers == 0 returns the input tensor itself.
template <typename T>
class FusionTransformer {
 public:
  FusionTransformer() = default;
  FusionTransformer(ParameterStore<T>& store, std::size_t d_model, std::size_t n_layers, std::size_t n_heads,
                    std::size_t max_length, std::mt19937_64& rng, const std::string& prefix = "fusion");

  std::size_t layers() const { return blocks_.size(); }
  std::size_t max_length() const { return max_length_; }

  /// Length-preserving. Throws SequenceLengthError past max_length and
  /// ShapeError when segments and rows disagree.
  Tensor<T> fuse(const Tensor<T>& rows, std::span<const FusedSegment> segments) const;

 private:
  std::size_t d_model_ = 0;
  std::size_t max_length_ = 0;
  Tensor<T> pos_emb_;
  Tensor<T> seg_emb_;
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> ln_out_;
};

extern template class ModalityAdaptors<float>;
extern template class ModalityAdaptors<double>;
extern template class FusionTransformer<float>;
extern template class FusionTransformer<double>;

}  // namespace resonance
