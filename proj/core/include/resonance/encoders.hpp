// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Frozen stand-in encoders producing multi-sampled clip embeddings.
//
// Music features are log-mel means and deviations plus mean chroma; images use
// a 4x4 color grid and per-channel histograms; videos average frame features.
// Each modality computes its fixed feature vector, standardizes it,
// appends a constant 1, applies a seeded Gaussian projection to d_enc, then
// tanh and L2 normalization. Nothing here is trainable.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resonance/media.hpp"

namespace resonance {

enum class Modality { kMusic, kImage, kVideo };

std::string modality_name(Modality m);

/// N x d_enc, row-major.
struct ClipEmbeddingSet {
  Modality modality = Modality::kMusic;
  std::size_t count = 0;
  std::size_t dim = 0;
  std::vector<double> matrix;

  std::span<const double> row(std::size_t i) const { return {matrix.data() + i * dim, dim}; }
  /// Throws DataError unless count >= 1, the buffer matches and rows are finite.
  void validate() const;
};

struct ClipWindow {
  std::size_t start = 0;
  std::size_t length = 0;
};

/// n windows of `window` items (0 selects total / n) over `total` items.
/// Window k starts at min(k * total / n, total - window); an input shorter
/// than the window yields n copies of the whole input, padded by the caller.
/// Throws DataError on empty input or n == 0.
std::vector<ClipWindow> clip_windows(std::size_t total, std::size_t n, std::size_t window = 0);

/// Music windows; shorter input is zero-padded to the window length.
std::vector<RawMusic> sample_clips(const RawMusic& music, std::size_t n, double window_seconds = 0.0);
/// Video windows over frames; shorter input repeats its last frame.
std::vector<RawVideo> sample_clips(const RawVideo& video, std::size_t n, std::size_t window_frames = 0);
/// 1: the full image; 4: the 2x2 tiles; 5: the tiles followed by the full image.
std::vector<RawImage> image_clips(const RawImage& image, std::size_t n);

struct EncoderConfig {
  std::size_t d_enc = 128;
  std::size_t n_music = 4;
  std::size_t n_video = 4;
  std::size_t n_image = 1;
  std::uint64_t seed = 0x5eed;
};

class StandInEncoder {
 public:
  explicit StandInEncoder(EncoderConfig config = {});

  const EncoderConfig& config() const { return config_; }

  /// Unit-norm rows; deterministic in (clip, modality, seed). Throw DataError
  /// on invalid or non-finite input.
  std::vector<double> encode(const RawMusic& clip) const;
  std::vector<double> encode(const RawImage& clip) const;
  std::vector<double> encode(const RawVideo& clip) const;

  /// Samples the configured number of clips and encodes each.
  ClipEmbeddingSet encode_set(const RawMusic& music) const;
  ClipEmbeddingSet encode_set(const RawImage& image) const;
  ClipEmbeddingSet encode_set(const RawVideo& video) const;

  static std::vector<double> music_features(const RawMusic& clip);
  static std::vector<double> image_features(const RawImage& clip);
  static std::vector<double> video_features(const RawVideo& clip);

 private:
  std::vector<double> project(Modality m, std::vector<double> features) const;

  EncoderConfig config_;
  std::vector<std::vector<double>> projections_;  // one per modality, d_enc x (features + 1)
};

/// Mean of the rows scaled to unit norm; a single row is returned unchanged.
std::vector<double> pool(const ClipEmbeddingSet& set);

}  // namespace resonance
