// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Raw media containers and their on-disk layouts.
//
// Music: <name>.f32 holds little-endian binary32 mono samples; <name>.json
// holds {"sample_rate": <Hz>, "samples": <count>}.
//
// Images and videos: a float grid file.
//   bytes 0-3   magic "RFG1"
//   bytes 4-23  uint32 LE frames, height, width, channels, then float32 fps
//   then frames*height*width*channels binary32 LE values, frame-major,
//   row-major, channel-interleaved. An image is a one-frame grid with fps 0.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace resonance {

struct RawMusic {
  std::vector<float> samples;
  double sample_rate = 0.0;

  double duration() const { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
  /// Throws DataError on a non-positive rate or non-finite samples.
  void validate() const;
};

struct RawImage {
  std::size_t height = 0;
  std::size_t width = 0;
  /// H x W x 3, values in [0, 1].
  std::vector<float> pixels;

  float at(std::size_t y, std::size_t x, std::size_t c) const { return pixels[(y * width + x) * 3 + c]; }
  /// Throws DataError unless H, W >= 8, sizes agree and values are finite.
  void validate() const;
  /// Sub-rectangle [y0, y0 + h) x [x0, x0 + w).
  RawImage crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const;
};

struct RawVideo {
  std::vector<RawImage> frames;
  double fps = 0.0;

  /// Throws DataError on an empty video, mixed frame shapes or fps <= 0.
  void validate() const;
};

void write_music(const std::filesystem::path& stem, const RawMusic& music);
RawMusic read_music(const std::filesystem::path& stem);

void write_image(const std::filesystem::path& path, const RawImage& image);
RawImage read_image(const std::filesystem::path& path);
void write_video(const std::filesystem::path& path, const RawVideo& video);
RawVideo read_video(const std::filesystem::path& path);

}  // namespace resonance
