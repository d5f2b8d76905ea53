// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run manifests written next to every artifact, and git-style content
// hashes of datasets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace resonance {

/// SHA-1 of "blob <size>\0<content>", as git hashes a file.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

/// Hash of a file, or of a directory as the SHA-1 over sorted
/// "<relative path> <blob hash>\n" lines of every regular file below it.
/// The top-level manifest.json is skipped.
std::string content_hash(const std::filesystem::path& path);

/// Seconds since the epoch: SOURCE_DATE_EPOCH when set, else the wall clock.
std::int64_t manifest_time();
std::string iso8601_utc(std::int64_t seconds);

struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  /// Content hash per dataset input, keyed by path.
  nlohmann::json dataset_hashes = nlohmann::json::object();
  std::int64_t started = 0;
  std::int64_t finished = 0;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  /// Writes <dir>/manifest.json.
  void write(const std::filesystem::path& dir) const;
  static RunManifest read(const std::filesystem::path& dir);
};

inline constexpr const char* kRunManifestFile = "manifest.json";
inline constexpr const char* kResonanceVersion = "0.1.0";

}  // namespace resonance
