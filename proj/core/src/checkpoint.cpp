// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

namespace resonance {

namespace fs = std::filesystem;

static_assert(sizeof(float) == 4);

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

const CheckpointTensor* Checkpoint::find(const std::string& name, const std::string& group) const {
  for (const auto& t : tensors) {
    if (t.name == name && t.group == group) return &t;
  }
  return nullptr;
}

void write_checkpoint(const fs::path& dir, const Checkpoint& checkpoint) {
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = "resonance-checkpoint";
  manifest["version"] = 1;
  manifest["dtype"] = "float32";
  manifest["byte_order"] = "little";
  manifest["buffer"] = kTensorBuffer;
  manifest["metadata"] = checkpoint.metadata;
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream buf(dir / kTensorBuffer, std::ios::binary | std::ios::trunc);
  if (!buf) throw CheckpointError("cannot write " + (dir / kTensorBuffer).string());
  std::uint64_t offset = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : checkpoint.tensors) {
    if (!seen.insert({t.group, t.name}).second) throw CheckpointError("duplicate checkpoint tensor: " + t.name);
    if (numel(t.shape) != t.values.size()) {
      throw CheckpointError("checkpoint tensor " + t.name + " has " + std::to_string(t.values.size()) +
                            " values for shape " + shape_str(t.shape));
    }
    manifest["tensors"].push_back({{"name", t.name},
                                   {"group", t.group},
                                   {"shape", t.shape},
                                   {"offset", offset},
                                   {"trainable", t.trainable}});
    for (float f : t.values) {
      const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(f));
      buf.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    offset += t.values.size() * sizeof(float);
  }
  if (!buf) throw CheckpointError("short write to " + (dir / kTensorBuffer).string());
  std::ofstream man(dir / kManifestFile, std::ios::trunc);
  man << manifest.dump(2) << "\n";
  if (!man) throw CheckpointError("cannot write " + (dir / kManifestFile).string());
}

Checkpoint read_checkpoint(const fs::path& dir) {
  std::ifstream man(dir / kManifestFile);
  if (!man) throw CheckpointError("missing checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    man >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "resonance-checkpoint" || manifest.value("dtype", "") != "float32") {
    throw CheckpointError("unsupported checkpoint format in " + dir.string());
  }
  std::ifstream buf(dir / manifest.value("buffer", std::string(kTensorBuffer)), std::ios::binary);
  if (!buf) throw CheckpointError("missing checkpoint buffer in " + dir.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(buf)), std::istreambuf_iterator<char>());

  Checkpoint out;
  out.metadata = manifest.value("metadata", nlohmann::json::object());
  for (const auto& entry : manifest.at("tensors")) {
    CheckpointTensor t;
    t.name = entry.at("name").get<std::string>();
    t.group = entry.value("group", "parameter");
    t.shape = entry.at("shape").get<Shape>();
    t.trainable = entry.value("trainable", true);
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto n = numel(t.shape);
    if (offset + n * sizeof(float) > bytes.size()) {
      throw CheckpointError("checkpoint tensor " + t.name + " extends past the end of the buffer");
    }
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + offset + i * sizeof bits, sizeof bits);
      t.values[i] = std::bit_cast<float>(to_le(bits));
    }
    out.tensors.push_back(std::move(t));
  }
  return out;
}

template <typename T>
void capture_parameters(const ParameterStore<T>& store, Checkpoint& checkpoint) {
  for (const auto& p : store.all()) {
    CheckpointTensor t;
    t.name = p.name;
    t.shape = p.tensor.shape();
    t.trainable = p.trainable;
    t.values.reserve(p.tensor.numel());
    for (T v : p.tensor.data()) t.values.push_back(static_cast<float>(v));
    checkpoint.tensors.push_back(std::move(t));
  }
}

template <typename T>
void restore_parameters(ParameterStore<T>& store, const Checkpoint& checkpoint) {
  std::set<std::string> known;
  for (auto& p : store.all()) {
    known.insert(p.name);
    const CheckpointTensor* t = checkpoint.find(p.name);
    if (!t) throw CheckpointError("checkpoint lacks parameter " + p.name);
    if (t->shape != p.tensor.shape()) {
      throw CheckpointError("parameter " + p.name + " has shape " + shape_str(p.tensor.shape()) +
                            " but checkpoint stores " + shape_str(t->shape));
    }
  }
  for (const auto& t : checkpoint.tensors) {
    if (t.group == "parameter" && !known.count(t.name)) {
      throw CheckpointError("checkpoint parameter " + t.name + " has no counterpart in the model");
    }
  }
  for (auto& p : store.all()) {
    const CheckpointTensor* t = checkpoint.find(p.name);
    auto dst = p.tensor.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(t->values[i]);
  }
}

template void capture_parameters<float>(const ParameterStore<float>&, Checkpoint&);
template void capture_parameters<double>(const ParameterStore<double>&, Checkpoint&);
template void restore_parameters<float>(ParameterStore<float>&, const Checkpoint&);
template void restore_parameters<double>(ParameterStore<double>&, const Checkpoint&);

}  // namespace resonance
