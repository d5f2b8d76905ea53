// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic media: chord progressions over a click track, tone
// sequences, and videos of a colored shape moving over a flat background.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "resonance/media.hpp"

namespace resonance {

/// Frequency of a pitch class in octave 4 (C4 = 261.63 Hz), shifted by
/// `semitones`.
double pitch_frequency(int pitch_class, int semitones = 0);

/// Root pitch classes of a triad index (0-11 major, 12-23 minor).
std::array<int, 3> triad_pitches(int chord_index);

struct TimedChord {
  int chord = 0;  // 0-11 major roots, 12-23 minor roots
  double seconds = 1.0;
};

/// Equal-amplitude sine triads in octave 4, one after the other.
RawMusic synth_chords(const std::vector<TimedChord>& chords, double sample_rate, double amplitude = 0.2);

/// Ascending scale tonic to tonic an octave up (8 notes).
RawMusic synth_scale(int tonic, bool minor, double note_seconds, double sample_rate, int transpose = 0);

/// Decaying noise bursts every beat; every `accent_every`-th burst starting
/// with the first is scaled by `accent`.
RawMusic synth_clicks(double bpm, double seconds, double sample_rate, std::uint64_t seed, int accent_every = 4,
                      double accent = 1.3, double level = 0.5);

/// Sample-wise sum; the result has the longer length.
RawMusic mix(const RawMusic& a, const RawMusic& b);

struct MusicSpec {
  double bpm = 120.0;
  int key_root = 0;
  bool minor = false;
  /// Chords in scale-degree space; one per bar, cycled.
  std::vector<int> progression;
  double seconds = 8.0;
  double sample_rate = 8000.0;
  std::uint64_t seed = 0;
};

/// Progressions (as absolute chord indices) available for a key.
std::vector<std::vector<int>> key_progressions(int key_root, bool minor);

/// One chord per 4-beat bar over an accented click track.
RawMusic synth_music(const MusicSpec& spec);

struct Color {
  std::string name;
  std::array<float, 3> rgb;
};

const std::vector<Color>& palette();

enum class ShapeKind { kCircle, kSquare, kTriangle };
enum class Motion { kLeftToRight, kRightToLeft, kTopToBottom, kBottomToTop };

std::string shape_name(ShapeKind s);
std::string motion_phrase(Motion m);

struct VideoSpec {
  ShapeKind shape = ShapeKind::kCircle;
  std::size_t shape_color = 0;
  std::size_t background_color = 1;
  Motion motion = Motion::kLeftToRight;
  std::size_t size = 16;
  double fps = 2.0;
  double seconds = 8.0;
};

RawVideo synth_video(const VideoSpec& spec);

}  // namespace resonance
