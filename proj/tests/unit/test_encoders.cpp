// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "resonance/encoders.hpp"
#include "resonance/errors.hpp"
#include "resonance/synth.hpp"

using namespace resonance;

namespace {

RawMusic ramp(double seconds, double sr) {
  RawMusic m;
  m.sample_rate = sr;
  m.samples.resize(static_cast<std::size_t>(seconds * sr));
  for (std::size_t i = 0; i < m.samples.size(); ++i) m.samples[i] = static_cast<float>(i) / static_cast<float>(sr);
  return m;
}

double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

double cosine(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (norm(a) * norm(b));
}

}  // namespace

TEST_CASE("music clips of 10 s in four 2.5 s windows start at quarter offsets") {
  const RawMusic music = ramp(10.0, 100.0);
  const auto clips = sample_clips(music, 4, 2.5);
  REQUIRE(clips.size() == 4);
  const double expected[] = {0.0, 2.5, 5.0, 7.5};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(clips[k].samples.size() == 250);
    CHECK(clips[k].samples.front() == doctest::Approx(expected[k]));
  }
}

TEST_CASE("a single window covers the whole input") {
  const RawMusic music = ramp(3.0, 100.0);
  const auto clips = sample_clips(music, 1);
  REQUIRE(clips.size() == 1);
  CHECK(clips[0].samples == music.samples);
  const auto windows = clip_windows(300, 1);
  CHECK(windows[0].start == 0);
  CHECK(windows[0].length == 300);
}

TEST_CASE("input shorter than a window yields identical padded copies") {
  const RawMusic music = ramp(1.0, 100.0);
  const auto clips = sample_clips(music, 4, 2.5);
  REQUIRE(clips.size() == 4);
  for (const auto& c : clips) {
    CHECK(c.samples.size() == 250);
    CHECK(c.samples == clips[0].samples);
    CHECK(c.samples[99] == music.samples[99]);
    CHECK(c.samples[200] == 0.0f);
  }
}

TEST_CASE("last window is clamped to the end") {
  const auto windows = clip_windows(10, 3, 4);
  REQUIRE(windows.size() == 3);
  CHECK(windows[0].start == 0);
  CHECK(windows[1].start == 3);
  CHECK(windows[2].start == 6);
  for (const auto& w : windows) CHECK(w.start + w.length <= 10);
}

TEST_CASE("empty input and zero clips are rejected") {
  CHECK_THROWS_AS(clip_windows(0, 4), DataError);
  CHECK_THROWS_AS(clip_windows(10, 0), DataError);
  RawMusic empty;
  empty.sample_rate = 8000.0;
  CHECK_THROWS_AS(sample_clips(empty, 2), DataError);
}

TEST_CASE("video clips repeat the last frame when short") {
  VideoSpec spec;
  spec.seconds = 1.0;
  const RawVideo video = synth_video(spec);
  const auto clips = sample_clips(video, 4, 3);
  REQUIRE(clips.size() == 4);
  for (const auto& c : clips) {
    REQUIRE(c.frames.size() == 3);
    CHECK(c.frames[2].pixels == video.frames.back().pixels);
  }
}

TEST_CASE("image clips tile the frame") {
  RawImage image;
  image.height = 16;
  image.width = 16;
  image.pixels.resize(16 * 16 * 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i) image.pixels[i] = static_cast<float>(i % 7) / 7.0f;
  CHECK(image_clips(image, 1).size() == 1);
  const auto tiles = image_clips(image, 4);
  REQUIRE(tiles.size() == 4);
  CHECK(tiles[3].height == 8);
  CHECK(tiles[3].at(0, 0, 0) == image.at(8, 8, 0));
  const auto five = image_clips(image, 5);
  REQUIRE(five.size() == 5);
  CHECK(five[4].pixels == image.pixels);
  CHECK_THROWS_AS(image_clips(image, 3), ConfigError);
}

TEST_CASE("encoding is deterministic and unit norm") {
  const StandInEncoder enc;
  const RawMusic music = synth_chords({{0, 2.0}}, 8000.0);
  const auto a = enc.encode(music);
  const auto b = enc.encode(music);
  CHECK(a == b);
  CHECK(a.size() == 128);
  CHECK(std::abs(norm(a) - 1.0) <= 1e-6);
  const RawVideo video = synth_video({});
  CHECK(std::abs(norm(enc.encode(video)) - 1.0) <= 1e-6);
  CHECK(std::abs(norm(enc.encode(video.frames[0])) - 1.0) <= 1e-6);
}

TEST_CASE("the seed changes the projection") {
  EncoderConfig other;
  other.seed = 99;
  const RawMusic music = synth_chords({{4, 2.0}}, 8000.0);
  CHECK(StandInEncoder().encode(music) != StandInEncoder(other).encode(music));
}

TEST_CASE("distinct synthetic chords do not collide") {
  const StandInEncoder enc;
  std::vector<std::vector<double>> rows;
  for (int c = 0; c < 24; ++c) rows.push_back(enc.encode(synth_chords({{c, 2.0}}, 8000.0)));
  double worst = -1.0;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) worst = std::max(worst, cosine(rows[i], rows[j]));
  CHECK(worst < 0.999);
}

TEST_CASE("non-finite input is rejected") {
  const StandInEncoder enc;
  RawMusic music = synth_chords({{0, 1.0}}, 8000.0);
  music.samples[10] = std::nanf("");
  CHECK_THROWS_AS(enc.encode(music), DataError);
}

TEST_CASE("encode_set honours the configured clip counts") {
  const StandInEncoder enc;
  const auto set = enc.encode_set(synth_chords({{0, 2.0}, {7, 2.0}}, 8000.0));
  CHECK(set.modality == Modality::kMusic);
  CHECK(set.count == 4);
  CHECK(set.dim == 128);
  CHECK_NOTHROW(set.validate());
  const auto video = enc.encode_set(synth_video({}));
  CHECK(video.count == 4);
  CHECK(enc.encode_set(synth_video({}).frames[0]).count == 1);
}

TEST_CASE("pool: identical rows, a single row, orthogonal rows") {
  ClipEmbeddingSet same{Modality::kMusic, 3, 2, {0.6, 0.8, 0.6, 0.8, 0.6, 0.8}};
  const auto p = pool(same);
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));

  ClipEmbeddingSet one{Modality::kImage, 1, 3, {0.1, -0.2, 0.3}};
  CHECK(pool(one) == one.matrix);

  ClipEmbeddingSet ortho{Modality::kVideo, 2, 2, {1.0, 0.0, 0.0, 1.0}};
  const auto q = pool(ortho);
  CHECK(std::abs(norm(q) - 1.0) <= 1e-12);
  CHECK(cosine(q, ortho.row(0)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cosine(q, ortho.row(1)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}
