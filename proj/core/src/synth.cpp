// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "resonance/errors.hpp"

namespace resonance {

double pitch_frequency(int pitch_class, int semitones) {
  const int midi = 60 + pitch_class + semitones;
  return 440.0 * std::pow(2.0, (midi - 69) / 12.0);
}

std::array<int, 3> triad_pitches(int chord_index) {
  if (chord_index < 0 || chord_index >= 24) throw DataError("triad index out of range");
  const int root = chord_index % 12;
  return {root, root + (chord_index < 12 ? 4 : 3), root + 7};
}

RawMusic synth_chords(const std::vector<TimedChord>& chords, double sample_rate, double amplitude) {
  RawMusic out;
  out.sample_rate = sample_rate;
  for (const auto& c : chords) {
    const auto n = static_cast<std::size_t>(std::llround(c.seconds * sample_rate));
    const std::size_t offset = out.samples.size();
    out.samples.resize(offset + n, 0.0f);
    for (int p : triad_pitches(c.chord)) {
      const double f = pitch_frequency(p);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(offset + i) / sample_rate;
        out.samples[offset + i] += static_cast<float>(amplitude * std::sin(2.0 * std::numbers::pi * f * t));
      }
    }
  }
  return out;
}

RawMusic synth_scale(int tonic, bool minor, double note_seconds, double sample_rate, int transpose) {
  static constexpr std::array<int, 8> kMajor = {0, 2, 4, 5, 7, 9, 11, 12};
  static constexpr std::array<int, 8> kMinor = {0, 2, 3, 5, 7, 8, 10, 12};
  const auto& steps = minor ? kMinor : kMajor;
  RawMusic out;
  out.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(note_seconds * sample_rate));
  for (int step : steps) {
    const double f = pitch_frequency(tonic, step + transpose);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / sample_rate;
      out.samples.push_back(static_cast<float>(0.3 * std::sin(2.0 * std::numbers::pi * f * t)));
    }
  }
  return out;
}

RawMusic synth_clicks(double bpm, double seconds, double sample_rate, std::uint64_t seed, int accent_every,
                      double accent, double level) {
  RawMusic out;
  out.sample_rate = sample_rate;
  out.samples.assign(static_cast<std::size_t>(std::llround(seconds * sample_rate)), 0.0f);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const double period = 60.0 / bpm;
  const auto burst = static_cast<std::size_t>(0.015 * sample_rate);
  const double decay = 0.004 * sample_rate;
  for (int beat = 0;; ++beat) {
    const auto start = static_cast<std::size_t>(std::llround(beat * period * sample_rate));
    if (start >= out.samples.size()) break;
    const double gain = level * ((accent_every > 0 && beat % accent_every == 0) ? accent : 1.0);
    for (std::size_t i = 0; i < burst && start + i < out.samples.size(); ++i) {
      out.samples[start + i] += static_cast<float>(gain * std::exp(-static_cast<double>(i) / decay) * noise(rng));
    }
  }
  return out;
}

RawMusic mix(const RawMusic& a, const RawMusic& b) {
  if (a.sample_rate != b.sample_rate) throw DataError("cannot mix signals with different sample rates");
  RawMusic out = a.samples.size() >= b.samples.size() ? a : b;
  const RawMusic& other = a.samples.size() >= b.samples.size() ? b : a;
  for (std::size_t i = 0; i < other.samples.size(); ++i) out.samples[i] += other.samples[i];
  return out;
}

std::vector<std::vector<int>> key_progressions(int key_root, bool minor) {
  auto maj = [&](int degree) { return (key_root + degree) % 12; };
  auto min = [&](int degree) { return 12 + (key_root + degree) % 12; };
  if (minor) return {{min(0), min(5), min(7), min(0)}, {min(0), maj(8), min(5), min(7)}};
  return {{maj(0), maj(5), maj(7), maj(0)}, {maj(0), min(9), maj(5), maj(7)}};
}

RawMusic synth_music(const MusicSpec& spec) {
  if (spec.progression.empty()) throw DataError("music spec has an empty progression");
  const double bar = 4.0 * 60.0 / spec.bpm;
  std::vector<TimedChord> chords;
  const auto total = static_cast<std::size_t>(std::llround(spec.seconds * spec.sample_rate));
  std::size_t emitted = 0;
  // Bar boundaries are rounded to whole samples so they coincide with clicks.
  for (std::size_t b = 0; emitted < total; ++b) {
    const auto end = std::min(total, static_cast<std::size_t>(std::llround((b + 1) * bar * spec.sample_rate)));
    chords.push_back({spec.progression[b % spec.progression.size()], static_cast<double>(end - emitted) / spec.sample_rate});
    emitted = end;
  }
  RawMusic tones = synth_chords(chords, spec.sample_rate, 0.15);
  tones.samples.resize(total, 0.0f);
  return mix(tones, synth_clicks(spec.bpm, spec.seconds, spec.sample_rate, spec.seed));
}

const std::vector<Color>& palette() {
  static const std::vector<Color> colors = {
      {"red", {0.9f, 0.1f, 0.1f}},    {"blue", {0.1f, 0.2f, 0.9f}},  {"green", {0.1f, 0.8f, 0.2f}},
      {"yellow", {0.95f, 0.9f, 0.1f}}, {"purple", {0.6f, 0.1f, 0.7f}}, {"white", {0.95f, 0.95f, 0.95f}},
      {"black", {0.05f, 0.05f, 0.05f}}, {"orange", {0.95f, 0.55f, 0.1f}}};
  return colors;
}

std::string shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
  }
  return "shape";
}

std::string motion_phrase(Motion m) {
  switch (m) {
    case Motion::kLeftToRight: return "from left to right";
    case Motion::kRightToLeft: return "from right to left";
    case Motion::kTopToBottom: return "from top to bottom";
    case Motion::kBottomToTop: return "from bottom to top";
  }
  return "";
}

RawVideo synth_video(const VideoSpec& spec) {
  const auto& colors = palette();
  if (spec.shape_color >= colors.size() || spec.background_color >= colors.size()) {
    throw DataError("video color index out of range");
  }
  if (spec.size < 8) throw DataError("video frames must be at least 8x8");
  RawVideo video;
  video.fps = spec.fps;
  const auto frames = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.seconds * spec.fps)));
  const double n = static_cast<double>(spec.size);
  const double radius = n / 5.0;
  const auto& fg = colors[spec.shape_color].rgb;
  const auto& bg = colors[spec.background_color].rgb;
  for (std::size_t f = 0; f < frames; ++f) {
    const double progress = frames > 1 ? static_cast<double>(f) / static_cast<double>(frames - 1) : 0.5;
    const double travel = radius + progress * (n - 2.0 * radius);
    double cx = n / 2.0, cy = n / 2.0;
    switch (spec.motion) {
      case Motion::kLeftToRight: cx = travel; break;
      case Motion::kRightToLeft: cx = n - travel; break;
      case Motion::kTopToBottom: cy = travel; break;
      case Motion::kBottomToTop: cy = n - travel; break;
    }
    RawImage img;
    img.height = img.width = spec.size;
    img.pixels.resize(spec.size * spec.size * 3);
    for (std::size_t y = 0; y < spec.size; ++y) {
      for (std::size_t x = 0; x < spec.size; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        bool inside = false;
        switch (spec.shape) {
          case ShapeKind::kCircle: inside = dx * dx + dy * dy <= radius * radius; break;
          case ShapeKind::kSquare: inside = std::abs(dx) <= radius && std::abs(dy) <= radius; break;
          case ShapeKind::kTriangle: inside = dy <= radius && dy >= -radius && std::abs(dx) <= (dy + radius) / 2.0; break;
        }
        for (std::size_t c = 0; c < 3; ++c) img.pixels[(y * spec.size + x) * 3 + c] = inside ? fg[c] : bg[c];
      }
    }
    video.frames.push_back(std::move(img));
  }
  return video;
}

}  // namespace resonance
