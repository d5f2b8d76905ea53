// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint layout: <dir>/manifest.json lists every tensor (name, group,
// shape, byte offset) and <dir>/tensors.bin holds the values back to back as
// little-endian IEEE-754 binary32.

#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "resonance/parameters.hpp"

namespace resonance {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointTensor {
  std::string name;
  /// "parameter" or "optimizer".
  std::string group = "parameter";
  Shape shape;
  std::vector<float> values;
  bool trainable = true;
};

struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(const std::string& name, const std::string& group = "parameter") const;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kTensorBuffer = "tensors.bin";

void write_checkpoint(const std::filesystem::path& dir, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& dir);

template <typename T>
void capture_parameters(const ParameterStore<T>& store, Checkpoint& checkpoint);

/// Loads every store parameter by name. Missing names, surplus parameter
/// entries and shape mismatches raise CheckpointError naming the parameter.
/// Trainable flags are left as configured by the caller.
template <typename T>
void restore_parameters(ParameterStore<T>& store, const Checkpoint& checkpoint);

}  // namespace resonance
