// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Music4way records, instruction pairs and their JSONL storage, plus the
// synthetic raw-media corpus used at desk scale.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "resonance/encoders.hpp"
#include "resonance/media.hpp"
#include "resonance/synth.hpp"

namespace resonance {

enum class Split { kTrain, kTest };

std::string split_name(Split s);
Split parse_split(const std::string& s);

/// Seeded FNV-1a hash of the id mapped to [0, 1); ids below test_fraction
/// go to the test split.
Split assign_split(const std::string& id, double test_fraction, std::uint64_t seed);

struct Captions {
  std::string music;
  std::string image;
  std::string video;
  bool operator==(const Captions&) const = default;
};

struct Music4wayRecord {
  std::string id;
  /// Paths relative to the corpus root; music is a stem (.f32 + .json).
  std::string music_path;
  std::string video_path;
  std::string image_path;
  std::size_t frame_index = 0;
  Captions captions;
  std::string feature_text;
  std::optional<std::string> unified_caption;
  /// Which unifier produced unified_caption: "template" or "remote".
  std::string unifier;
  Split split = Split::kTrain;

  /// Throws DataError on empty captions, unparsable feature text or missing
  /// paths.
  void validate() const;
  bool operator==(const Music4wayRecord&) const = default;
};

enum class TaskTag { kMI2T, kMV2T, kAny2T, kM2TCaption, kI2T, kV2T, kT2T };

std::string task_name(TaskTag t);
TaskTag parse_task(const std::string& s);

struct MediaSlot {
  Modality modality = Modality::kMusic;
  std::string path;
  bool operator==(const MediaSlot&) const = default;
};

enum class TargetVariant { kFull, kNoVisualCaptions, kNoMusicFeatures };

std::string variant_name(TargetVariant v);
/// Accepts "full", "no-vc"/"no_vc" and "no-mf"/"no_mf".
TargetVariant parse_variant(const std::string& s);

struct InstructionPair {
  std::string id;
  std::string record_id;
  TaskTag task = TaskTag::kMI2T;
  /// Media in the order their placeholders appear in input_text.
  std::vector<MediaSlot> inputs;
  std::string input_text;
  std::string instruction;
  std::string target;
  /// "template", "remote" or "ground-truth".
  std::string target_source;
  TargetVariant variant = TargetVariant::kFull;
  Split split = Split::kTrain;

  /// Placeholders in input_text must match inputs one-to-one and in order,
  /// and the modality set must fit the task. Throws DataError.
  void validate() const;
  bool operator==(const InstructionPair&) const = default;
};

/// Modalities of the exact placeholders in text, in order of appearance.
std::vector<Modality> placeholder_sequence(std::string_view text);
std::string placeholder(Modality m);

nlohmann::json to_json(const Music4wayRecord& r);
nlohmann::json to_json(const InstructionPair& p);
Music4wayRecord record_from_json(const nlohmann::json& j);
InstructionPair pair_from_json(const nlohmann::json& j);

/// One JSON object per line. Throws DataError when the file cannot be written.
void write_records(const std::filesystem::path& path, const std::vector<Music4wayRecord>& records);
void write_pairs(const std::filesystem::path& path, const std::vector<InstructionPair>& pairs);
/// Throws DataError naming the line on malformed input or a duplicate id.
std::vector<Music4wayRecord> read_records(const std::filesystem::path& path);
std::vector<InstructionPair> read_pairs(const std::filesystem::path& path);

/// Drawn generation parameters of one synthetic music/video pair.
struct SynthDraw {
  std::string id;
  std::uint64_t seed = 0;
  MusicSpec music;
  VideoSpec video;
  std::size_t progression_index = 0;
};

struct RawTriple {
  SynthDraw draw;
  RawMusic music;
  RawVideo video;
  Captions captions;
};

/// Deterministic per seed; the draw of item i depends only on (seed, i).
std::vector<SynthDraw> draw_corpus(std::uint64_t seed, std::size_t count);
RawTriple synth_raw(const SynthDraw& draw);
std::vector<RawTriple> synth_raw(std::uint64_t seed, std::size_t count);

/// Captions that describe the drawn parameters without numerals.
Captions ground_truth_captions(const SynthDraw& draw);

struct BuiltRecord {
  Music4wayRecord record;
  RawImage image;
};

/// Picks the aligned image frame uniformly with `seed` and extracts the
/// textual music features. Paths are left empty. Throws DataError on an
/// empty video.
BuiltRecord build_record(const std::string& id, const RawMusic& music, const RawVideo& video,
                         const Captions& captions, std::uint64_t seed);

struct CorpusOptions {
  std::uint64_t seed = 0;
  std::size_t count = 2000;
  double test_fraction = 0.05;
};

/// Synthesizes `count` records under root/media and returns them in id order.
std::vector<Music4wayRecord> synthesize_corpus(const std::filesystem::path& root, const CorpusOptions& options);

/// Encodes the media of a record lazily and caches the sets by path.
class EmbeddingCache {
 public:
  EmbeddingCache(std::filesystem::path root, EncoderConfig config = {});

  const ClipEmbeddingSet& get(const MediaSlot& slot);
  const StandInEncoder& encoder() const { return encoder_; }
  std::size_t size() const { return cache_.size(); }

 private:
  std::filesystem::path root_;
  StandInEncoder encoder_;
  std::map<std::string, ClipEmbeddingSet> cache_;
};

}  // namespace resonance
