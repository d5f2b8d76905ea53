// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/encoders.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "resonance/errors.hpp"
#include "resonance/music_features.hpp"

namespace resonance {

namespace {

constexpr std::size_t kMelBands = 32;
constexpr std::size_t kMusicFeatureDim = 2 * kMelBands + 12;
constexpr std::size_t kGrid = 4;
constexpr std::size_t kHistBins = 8;
constexpr std::size_t kImageFeatureDim = kGrid * kGrid * 3 + kHistBins * 3;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters over the bins of a frame-point spectrum.
std::vector<std::vector<double>> mel_filters(std::size_t frame, double sample_rate) {
  const std::size_t bins = frame / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(kMelBands + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = mel_to_hz(top * static_cast<double>(i) / (kMelBands + 1));
  std::vector<std::vector<double>> filters(kMelBands, std::vector<double>(bins, 0.0));
  for (std::size_t m = 0; m < kMelBands; ++m) {
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate / static_cast<double>(frame);
      if (f > edges[m] && f <= edges[m + 1]) filters[m][b] = (f - edges[m]) / (edges[m + 1] - edges[m]);
      else if (f > edges[m + 1] && f < edges[m + 2]) filters[m][b] = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
    }
  }
  return filters;
}

std::uint64_t modality_salt(Modality m) {
  switch (m) {
    case Modality::kMusic: return 0x6d75736963ULL;
    case Modality::kImage: return 0x696d616765ULL;
    case Modality::kVideo: return 0x766964656fULL;
  }
  return 0;
}

std::size_t feature_dim(Modality m) { return m == Modality::kMusic ? kMusicFeatureDim : kImageFeatureDim; }

// Z-scores v[begin, end) in place; a constant block becomes zeros.
void standardize(std::vector<double>& v, std::size_t begin, std::size_t end) {
  const auto n = static_cast<double>(end - begin);
  double mu = 0.0, var = 0.0;
  for (std::size_t i = begin; i < end; ++i) mu += v[i];
  mu /= n;
  for (std::size_t i = begin; i < end; ++i) var += (v[i] - mu) * (v[i] - mu);
  const double sd = std::sqrt(var / n);
  for (std::size_t i = begin; i < end; ++i) v[i] = sd > 1e-12 ? (v[i] - mu) / sd : 0.0;
}

void require_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string("non-finite ") + what + " features");
}

}  // namespace

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::kMusic: return "music";
    case Modality::kImage: return "image";
    case Modality::kVideo: return "video";
  }
  return "unknown";
}

void ClipEmbeddingSet::validate() const {
  if (count == 0) throw DataError("clip embedding set is empty");
  if (matrix.size() != count * dim) throw DataError("clip embedding matrix does not match count x dim");
  for (double v : matrix)
    if (!std::isfinite(v)) throw DataError("clip embedding contains non-finite values");
}

std::vector<ClipWindow> clip_windows(std::size_t total, std::size_t n, std::size_t window) {
  if (total == 0) throw DataError("cannot sample clips from empty input");
  if (n == 0) throw DataError("clip count must be at least 1");
  if (window == 0) window = std::max<std::size_t>(1, total / n);
  std::vector<ClipWindow> out;
  if (total < window) {
    out.assign(n, {0, total});
    return out;
  }
  for (std::size_t k = 0; k < n; ++k) out.push_back({std::min(k * total / n, total - window), window});
  return out;
}

std::vector<RawMusic> sample_clips(const RawMusic& music, std::size_t n, double window_seconds) {
  music.validate();
  const auto window = static_cast<std::size_t>(std::llround(window_seconds * music.sample_rate));
  std::vector<RawMusic> clips;
  const auto windows = clip_windows(music.samples.size(), n, window);
  const std::size_t padded = std::max(window, windows.front().length);
  for (const auto& w : windows) {
    RawMusic clip;
    clip.sample_rate = music.sample_rate;
    clip.samples.assign(music.samples.begin() + static_cast<std::ptrdiff_t>(w.start),
                        music.samples.begin() + static_cast<std::ptrdiff_t>(w.start + w.length));
    clip.samples.resize(padded, 0.0f);
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<RawVideo> sample_clips(const RawVideo& video, std::size_t n, std::size_t window_frames) {
  video.validate();
  std::vector<RawVideo> clips;
  const auto windows = clip_windows(video.frames.size(), n, window_frames);
  const std::size_t padded = std::max(window_frames, windows.front().length);
  for (const auto& w : windows) {
    RawVideo clip;
    clip.fps = video.fps;
    clip.frames.assign(video.frames.begin() + static_cast<std::ptrdiff_t>(w.start),
                       video.frames.begin() + static_cast<std::ptrdiff_t>(w.start + w.length));
    while (clip.frames.size() < padded) clip.frames.push_back(clip.frames.back());
    clips.push_back(std::move(clip));
  }
  return clips;
}

std::vector<RawImage> image_clips(const RawImage& image, std::size_t n) {
  image.validate();
  if (n != 1 && n != 4 && n != 5) throw ConfigError("image clip count must be 1, 4 or 5");
  if (n == 1) return {image};
  const std::size_t h = image.height / 2, w = image.width / 2;
  if (h < 8 || w < 8) throw DataError("image too small for 2x2 tiling");
  std::vector<RawImage> out = {image.crop(0, 0, h, w), image.crop(0, w, h, w), image.crop(h, 0, h, w),
                               image.crop(h, w, h, w)};
  if (n == 5) out.push_back(image);
  return out;
}

StandInEncoder::StandInEncoder(EncoderConfig config) : config_(config) {
  if (config_.d_enc == 0) throw ConfigError("d_enc must be positive");
  for (Modality m : {Modality::kMusic, Modality::kImage, Modality::kVideo}) {
    const std::size_t in = feature_dim(m) + 1;
    std::mt19937_64 rng(config_.seed ^ modality_salt(m));
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(in)));
    std::vector<double> w(config_.d_enc * in);
    for (auto& v : w) v = dist(rng);
    projections_.push_back(std::move(w));
  }
}

std::vector<double> StandInEncoder::music_features(const RawMusic& clip) {
  clip.validate();
  RawMusic padded = clip;
  if (padded.samples.size() < kDefaultFrame) padded.samples.resize(kDefaultFrame, 0.0f);
  const Spectrogram spec = spectrogram(padded);
  static thread_local std::vector<std::vector<double>> filters;
  static thread_local double filter_rate = 0.0;
  if (filter_rate != spec.sample_rate) {
    filters = mel_filters(spec.frame, spec.sample_rate);
    filter_rate = spec.sample_rate;
  }
  std::vector<double> mean(kMelBands, 0.0), sq(kMelBands, 0.0);
  for (const auto& frame : spec.magnitude) {
    for (std::size_t m = 0; m < kMelBands; ++m) {
      double e = 0.0;
      for (std::size_t b = 0; b < frame.size(); ++b) e += filters[m][b] * frame[b] * frame[b];
      const double l = std::log(1e-6 + e);
      mean[m] += l;
      sq[m] += l * l;
    }
  }
  const auto frames = static_cast<double>(spec.frames());
  std::vector<double> out;
  out.reserve(kMusicFeatureDim);
  for (std::size_t m = 0; m < kMelBands; ++m) out.push_back(mean[m] / frames);
  for (std::size_t m = 0; m < kMelBands; ++m) {
    const double mu = mean[m] / frames;
    out.push_back(std::sqrt(std::max(0.0, sq[m] / frames - mu * mu)));
  }
  std::array<double, 12> chroma{};
  for (const auto& frame : chromagram(spec))
    for (std::size_t p = 0; p < 12; ++p) chroma[p] += frame[p] / frames;
  out.insert(out.end(), chroma.begin(), chroma.end());
  standardize(out, 0, kMelBands);
  standardize(out, kMelBands, 2 * kMelBands);
  standardize(out, 2 * kMelBands, kMusicFeatureDim);
  return out;
}

std::vector<double> StandInEncoder::image_features(const RawImage& clip) {
  clip.validate();
  std::vector<double> out(kImageFeatureDim, 0.0);
  std::vector<double> cell_count(kGrid * kGrid, 0.0);
  const double pixels = static_cast<double>(clip.height * clip.width);
  for (std::size_t y = 0; y < clip.height; ++y) {
    const std::size_t gy = y * kGrid / clip.height;
    for (std::size_t x = 0; x < clip.width; ++x) {
      const std::size_t cell = gy * kGrid + x * kGrid / clip.width;
      cell_count[cell] += 1.0;
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(clip.at(y, x, c)), 0.0, 1.0);
        out[cell * 3 + c] += v;
        const auto bin = std::min(kHistBins - 1, static_cast<std::size_t>(v * kHistBins));
        out[kGrid * kGrid * 3 + c * kHistBins + bin] += 1.0 / pixels;
      }
    }
  }
  for (std::size_t cell = 0; cell < kGrid * kGrid; ++cell)
    for (std::size_t c = 0; c < 3; ++c) out[cell * 3 + c] /= cell_count[cell];
  return out;
}

std::vector<double> StandInEncoder::video_features(const RawVideo& clip) {
  clip.validate();
  std::vector<double> out(kImageFeatureDim, 0.0);
  for (const auto& f : clip.frames) {
    const auto x = image_features(f);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
  }
  for (auto& v : out) v /= static_cast<double>(clip.frames.size());
  return out;
}

std::vector<double> StandInEncoder::project(Modality m, std::vector<double> f) const {
  require_finite(f, modality_name(m).c_str());
  standardize(f, 0, f.size());
  f.push_back(1.0);
  const auto& w = projections_[static_cast<std::size_t>(m)];
  const std::size_t in = f.size();
  std::vector<double> y(config_.d_enc);
  double norm = 0.0;
  for (std::size_t i = 0; i < config_.d_enc; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j) acc += w[i * in + j] * f[j];
    y[i] = std::tanh(acc);
    norm += y[i] * y[i];
  }
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw DataError("degenerate " + modality_name(m) + " embedding");
  for (auto& v : y) v /= norm;
  return y;
}

std::vector<double> StandInEncoder::encode(const RawMusic& clip) const {
  return project(Modality::kMusic, music_features(clip));
}
std::vector<double> StandInEncoder::encode(const RawImage& clip) const {
  return project(Modality::kImage, image_features(clip));
}
std::vector<double> StandInEncoder::encode(const RawVideo& clip) const {
  return project(Modality::kVideo, video_features(clip));
}

namespace {

template <typename Clip>
ClipEmbeddingSet stack(const StandInEncoder& enc, Modality m, const std::vector<Clip>& clips) {
  ClipEmbeddingSet set;
  set.modality = m;
  set.count = clips.size();
  set.dim = enc.config().d_enc;
  for (const auto& c : clips) {
    const auto row = enc.encode(c);
    set.matrix.insert(set.matrix.end(), row.begin(), row.end());
  }
  return set;
}

}  // namespace

ClipEmbeddingSet StandInEncoder::encode_set(const RawMusic& music) const {
  return stack(*this, Modality::kMusic, sample_clips(music, config_.n_music));
}
ClipEmbeddingSet StandInEncoder::encode_set(const RawImage& image) const {
  return stack(*this, Modality::kImage, image_clips(image, config_.n_image));
}
ClipEmbeddingSet StandInEncoder::encode_set(const RawVideo& video) const {
  return stack(*this, Modality::kVideo, sample_clips(video, config_.n_video));
}

std::vector<double> pool(const ClipEmbeddingSet& set) {
  set.validate();
  if (set.count == 1) return std::vector<double>(set.matrix.begin(), set.matrix.end());
  std::vector<double> mean(set.dim, 0.0);
  for (std::size_t r = 0; r < set.count; ++r)
    for (std::size_t c = 0; c < set.dim; ++c) mean[c] += set.matrix[r * set.dim + c];
  double norm = 0.0;
  for (auto& v : mean) {
    v /= static_cast<double>(set.count);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (auto& v : mean) v /= norm;
  return mean;
}

}  // namespace resonance
