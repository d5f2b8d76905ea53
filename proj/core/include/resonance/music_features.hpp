// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Low-level music descriptors (tempo, chords, downbeats, key) computed from a
// mono waveform, and their nested-list text serialization.
//
// Frames are centered: frame t covers samples [t*hop - frame/2, t*hop + frame/2)
// of the zero-padded signal, so an N-sample input has 1 + N/hop frames.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resonance/media.hpp"

namespace resonance {

inline constexpr double kDeskSampleRate = 8000.0;
inline constexpr std::size_t kDefaultFrame = 1024;
inline constexpr std::size_t kDefaultHop = 256;
inline constexpr double kMinTempoBpm = 40.0;
inline constexpr double kMaxTempoBpm = 200.0;
inline constexpr double kChordThreshold = 0.5;

/// Hann-windowed magnitude spectra, one row of frame/2 + 1 bins per frame.
struct Spectrogram {
  std::size_t frame = 0;
  std::size_t hop = 0;
  double sample_rate = 0.0;
  std::vector<std::vector<double>> magnitude;

  std::size_t frames() const { return magnitude.size(); }
};

/// Throws DataError when the input is shorter than one frame or hop >= frame.
Spectrogram spectrogram(const RawMusic& music, std::size_t frame = kDefaultFrame, std::size_t hop = kDefaultHop);

/// Half-wave rectified log-magnitude flux against the frame frame/hop steps
/// earlier (the nearest non-overlapping predecessor).
std::vector<double> onset_envelope(const Spectrogram& spec);
std::vector<double> onset_envelope(const RawMusic& music, std::size_t frame = kDefaultFrame,
                                   std::size_t hop = kDefaultHop);

struct TempoCandidate {
  double bpm = 0.0;
  double strength = 0.0;
  bool operator==(const TempoCandidate&) const = default;
};

struct TempoEstimate {
  /// Sorted by strength, descending; strengths sum to 1.
  std::vector<TempoCandidate> candidates;
  bool low_confidence = false;
};

/// Autocorrelation tempo estimate. Peaks are located in the 40-200 BPM lag
/// band, refined by parabolic interpolation and by a least-squares fit over
/// their multiples. A peak's score is its normalized height minus the largest
/// autocorrelation found at its in-band integer sub-multiples, which demotes
/// slower metrical levels. A flat envelope yields one 120 BPM candidate with
/// the low-confidence flag. Throws DataError when the envelope spans less than
/// four beats at 60 BPM.
TempoEstimate estimate_tempo(const std::vector<double>& envelope, std::size_t hop, double sample_rate,
                             std::size_t k = 3);

using ChromaFrame = std::array<double, 12>;

/// Pitch-class energy (C = 0) of bins between 100 Hz and 2 kHz, each frame
/// scaled to a maximum of 1. Silent frames stay zero.
std::vector<ChromaFrame> chromagram(const Spectrogram& spec);
std::vector<ChromaFrame> chromagram(const RawMusic& music, std::size_t frame = kDefaultFrame,
                                    std::size_t hop = kDefaultHop);

struct ChordSegment {
  double start = 0.0;
  double end = 0.0;
  std::string label;
  bool operator==(const ChordSegment&) const = default;
};

/// "C:maj", "C#:min", ... "N". Index 0-11 major roots C..B, 12-23 minor, 24 N.
std::string chord_label(int index);
/// Inverse of chord_label; nullopt for unknown text.
std::optional<int> chord_index(std::string_view label);

/// Cosine match against 24 binary triad templates per frame, 'N' below
/// kChordThreshold, then a Viterbi pass that charges switch_penalty per label
/// change. Frame t spans [t*hop, (t+1)*hop) / sample_rate; the final end is
/// clamped to duration when given.
std::vector<ChordSegment> detect_chords(const std::vector<ChromaFrame>& chroma, std::size_t hop, double sample_rate,
                                        std::optional<double> duration = std::nullopt, double switch_penalty = 1.0);

/// Probabilities ordered C..B major, then C..B minor.
struct KeyDistribution {
  std::array<double, 24> probabilities{};
  std::size_t argmax() const;
  bool operator==(const KeyDistribution&) const = default;
};

/// "C major", "A minor", ...
std::string key_name(std::size_t index);

/// Krumhansl-Schmuckler profile correlation, softmax over the 24 scores.
/// Zero chroma gives the uniform distribution.
KeyDistribution estimate_key(const std::vector<ChromaFrame>& chroma);

struct Downbeat {
  double time = 0.0;
  /// 1..meter; 1 marks a downbeat.
  int position = 1;
  bool operator==(const Downbeat&) const = default;
};

struct DownbeatTrack {
  std::vector<Downbeat> beats;
  bool low_confidence = false;
};

/// Beat grid at the top tempo with the phase that maximizes envelope energy,
/// then the bar phase whose beats carry the most energy on average.
/// A low-confidence tempo gives an empty, flagged track.
DownbeatTrack track_downbeats(const std::vector<double>& envelope, const TempoEstimate& tempo, std::size_t hop,
                              double sample_rate, int meter = 4);

/// The textual payload of one track.
struct MusicFeatures {
  std::vector<TempoCandidate> tempo;
  std::vector<ChordSegment> chords;
  std::vector<Downbeat> downbeats;
  KeyDistribution key;
  bool operator==(const MusicFeatures&) const = default;
};

struct FeatureExtraction {
  MusicFeatures features;
  bool tempo_low_confidence = false;
  bool downbeats_low_confidence = false;
};

FeatureExtraction extract_features(const RawMusic& music, std::size_t frame = kDefaultFrame,
                                   std::size_t hop = kDefaultHop);

/// Shortest round-trip decimal, fixed notation for decimal exponents in
/// [-4, 16) and "1e-05" style otherwise; integral values keep ".0".
std::string format_real(double value);

/// Four lines: "Tempo: [[bpm, strength], ...]", "Chords: [[start, end, 'label'], ...]",
/// "Downbeats: [[time, position], ...]", "Key: [[p0, ..., p23]]". Empty lists render "[]".
std::string textualize_features(const MusicFeatures& features);
/// Exact inverse of textualize_features. Throws DataError on malformed text.
MusicFeatures parse_features(std::string_view text);

}  // namespace resonance
