// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/media.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

static_assert(std::endian::native == std::endian::little, "media IO assumes a little-endian host");

constexpr char kGridMagic[4] = {'R', 'F', 'G', '1'};

bool all_finite(std::span<const float> v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void write_floats(std::ofstream& out, std::span<const float> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

void read_floats(std::ifstream& in, std::vector<float>& v, const std::filesystem::path& path) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!in) throw DataError("truncated media file " + path.string());
}

struct GridHeader {
  std::uint32_t frames, height, width, channels;
  float fps;
};

void write_grid(const std::filesystem::path& path, const std::vector<RawImage>& frames, double fps) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  GridHeader h{static_cast<std::uint32_t>(frames.size()), static_cast<std::uint32_t>(frames.front().height),
               static_cast<std::uint32_t>(frames.front().width), 3u, static_cast<float>(fps)};
  out.write(kGridMagic, 4);
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  for (const auto& f : frames) write_floats(out, f.pixels);
  if (!out) throw DataError("short write to " + path.string());
}

std::vector<RawImage> read_grid(const std::filesystem::path& path, double& fps) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[4];
  GridHeader h{};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || std::memcmp(magic, kGridMagic, 4) != 0) throw DataError("not a float grid file: " + path.string());
  if (h.channels != 3 || h.frames == 0) throw DataError("unsupported grid layout in " + path.string());
  std::vector<RawImage> frames(h.frames);
  for (auto& f : frames) {
    f.height = h.height;
    f.width = h.width;
    f.pixels.resize(std::size_t(h.height) * h.width * 3);
    read_floats(in, f.pixels, path);
  }
  fps = h.fps;
  return frames;
}

}  // namespace

void RawMusic::validate() const {
  if (!(sample_rate > 0.0)) throw DataError("music sample rate must be positive");
  if (!all_finite(samples)) throw DataError("music contains non-finite samples");
}

void RawImage::validate() const {
  if (height < 8 || width < 8) {
    throw DataError("image " + std::to_string(height) + "x" + std::to_string(width) + " is smaller than 8x8");
  }
  if (pixels.size() != height * width * 3) throw DataError("image pixel buffer does not match its extents");
  if (!all_finite(pixels)) throw DataError("image contains non-finite pixels");
}

RawImage RawImage::crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const {
  if (y0 + h > height || x0 + w > width) throw DataError("crop window exceeds image bounds");
  RawImage out;
  out.height = h;
  out.width = w;
  out.pixels.reserve(h * w * 3);
  for (std::size_t y = y0; y < y0 + h; ++y) {
    const float* row = pixels.data() + (y * width + x0) * 3;
    out.pixels.insert(out.pixels.end(), row, row + w * 3);
  }
  return out;
}

void RawVideo::validate() const {
  if (frames.empty()) throw DataError("video has no frames");
  if (!(fps > 0.0)) throw DataError("video fps must be positive");
  for (const auto& f : frames) {
    f.validate();
    if (f.height != frames.front().height || f.width != frames.front().width) {
      throw DataError("video frames differ in shape");
    }
  }
}

void write_music(const std::filesystem::path& stem, const RawMusic& music) {
  auto raw = stem;
  raw += ".f32";
  std::ofstream out(raw, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + raw.string());
  write_floats(out, music.samples);
  if (!out) throw DataError("short write to " + raw.string());
  auto side = stem;
  side += ".json";
  std::ofstream meta(side, std::ios::trunc);
  meta << nlohmann::json{{"sample_rate", music.sample_rate}, {"samples", music.samples.size()}}.dump() << '\n';
  if (!meta) throw DataError("cannot write " + side.string());
}

RawMusic read_music(const std::filesystem::path& stem) {
  auto side = stem;
  side += ".json";
  std::ifstream meta(side);
  if (!meta) throw DataError("missing music sidecar " + side.string());
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed music sidecar " + side.string() + ": " + e.what());
  }
  RawMusic music;
  music.sample_rate = j.value("sample_rate", 0.0);
  music.samples.resize(j.value("samples", std::size_t{0}));
  auto raw = stem;
  raw += ".f32";
  std::ifstream in(raw, std::ios::binary);
  if (!in) throw DataError("missing music samples " + raw.string());
  read_floats(in, music.samples, raw);
  music.validate();
  return music;
}

void write_image(const std::filesystem::path& path, const RawImage& image) {
  image.validate();
  write_grid(path, {image}, 0.0);
}

RawImage read_image(const std::filesystem::path& path) {
  double fps = 0;
  auto frames = read_grid(path, fps);
  if (frames.size() != 1) throw DataError("image file holds " + std::to_string(frames.size()) + " frames");
  frames.front().validate();
  return std::move(frames.front());
}

void write_video(const std::filesystem::path& path, const RawVideo& video) {
  video.validate();
  write_grid(path, video.frames, video.fps);
}

RawVideo read_video(const std::filesystem::path& path) {
  RawVideo v;
  v.frames = read_grid(path, v.fps);
  v.validate();
  return v;
}

}  // namespace resonance
