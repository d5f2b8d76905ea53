// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "resonance/errors.hpp"
#include "resonance/music_features.hpp"
#include "resonance/tokenizer.hpp"

namespace resonance {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
    out += names[i];
  }
  return out;
}

std::string tempo_word(double bpm) {
  if (bpm < 80.0) return "slow";
  if (bpm < 110.0) return "relaxed";
  if (bpm < 140.0) return "lively";
  return "fast";
}

template <typename T>
void write_lines(const std::filesystem::path& path, const std::vector<T>& items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& item : items) out << to_json(item).dump() << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

template <typename T, typename Parse>
std::vector<T> read_lines(const std::filesystem::path& path, Parse parse) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<T> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    T item;
    try {
      item = parse(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!ids.insert(item.id).second) throw DataError(where + ": duplicate id '" + item.id + "'");
    out.push_back(std::move(item));
  }
  return out;
}

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object()) throw DataError("expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

Modality parse_modality(const std::string& s) {
  if (s == "music") return Modality::kMusic;
  if (s == "image") return Modality::kImage;
  if (s == "video") return Modality::kVideo;
  throw DataError("unknown modality '" + s + "'");
}

}  // namespace

std::string split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  throw DataError("unknown split '" + s + "'");
}

Split assign_split(const std::string& id, double test_fraction, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : id) mix(static_cast<unsigned char>(c));
  const double u = static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
  return u < test_fraction ? Split::kTest : Split::kTrain;
}

void Music4wayRecord::validate() const {
  if (id.empty()) throw DataError("record has an empty id");
  if (music_path.empty() || video_path.empty() || image_path.empty()) {
    throw DataError("record " + id + " is missing a media path");
  }
  if (captions.music.empty() || captions.image.empty() || captions.video.empty()) {
    throw DataError("record " + id + " has an empty caption");
  }
  parse_features(feature_text);
  if (unified_caption && unified_caption->empty()) throw DataError("record " + id + " has an empty unified caption");
}

std::string task_name(TaskTag t) {
  switch (t) {
    case TaskTag::kMI2T: return "MI2T";
    case TaskTag::kMV2T: return "MV2T";
    case TaskTag::kAny2T: return "Any2T";
    case TaskTag::kM2TCaption: return "M2T-caption";
    case TaskTag::kI2T: return "I2T";
    case TaskTag::kV2T: return "V2T";
    case TaskTag::kT2T: return "T2T";
  }
  return "unknown";
}

TaskTag parse_task(const std::string& s) {
  for (TaskTag t : {TaskTag::kMI2T, TaskTag::kMV2T, TaskTag::kAny2T, TaskTag::kM2TCaption, TaskTag::kI2T,
                    TaskTag::kV2T, TaskTag::kT2T}) {
    if (task_name(t) == s) return t;
  }
  throw DataError("unknown task tag '" + s + "'");
}

std::string variant_name(TargetVariant v) {
  switch (v) {
    case TargetVariant::kFull: return "full";
    case TargetVariant::kNoVisualCaptions: return "no-vc";
    case TargetVariant::kNoMusicFeatures: return "no-mf";
  }
  return "full";
}

TargetVariant parse_variant(const std::string& s) {
  if (s == "full") return TargetVariant::kFull;
  if (s == "no-vc" || s == "no_vc") return TargetVariant::kNoVisualCaptions;
  if (s == "no-mf" || s == "no_mf") return TargetVariant::kNoMusicFeatures;
  throw ConfigError("unknown target variant '" + s + "' (expected full, no-vc or no-mf)");
}

std::string placeholder(Modality m) {
  switch (m) {
    case Modality::kMusic: return std::string(kMusicPlaceholder);
    case Modality::kImage: return std::string(kImagePlaceholder);
    case Modality::kVideo: return std::string(kVideoPlaceholder);
  }
  return {};
}

std::vector<Modality> placeholder_sequence(std::string_view text) {
  std::vector<Modality> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    for (Modality m : {Modality::kMusic, Modality::kImage, Modality::kVideo}) {
      const std::string ph = placeholder(m);
      if (text.compare(i, ph.size(), ph) == 0) {
        out.push_back(m);
        i += ph.size() - 1;
        break;
      }
    }
  }
  return out;
}

void InstructionPair::validate() const {
  if (id.empty()) throw DataError("instruction pair has an empty id");
  if (instruction.empty()) throw DataError("pair " + id + " has an empty instruction");
  if (target.empty()) throw DataError("pair " + id + " has an empty target");
  const auto seen = placeholder_sequence(input_text);
  if (seen.size() != inputs.size()) {
    throw DataError("pair " + id + ": " + std::to_string(seen.size()) + " placeholders for " +
                    std::to_string(inputs.size()) + " media inputs");
  }
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (seen[i] != inputs[i].modality) throw DataError("pair " + id + ": placeholder order does not match inputs");
    if (inputs[i].path.empty()) throw DataError("pair " + id + ": media input without a path");
    ++counts[static_cast<std::size_t>(inputs[i].modality)];
  }
  const std::size_t music = counts[static_cast<std::size_t>(Modality::kMusic)];
  const std::size_t image = counts[static_cast<std::size_t>(Modality::kImage)];
  const std::size_t video = counts[static_cast<std::size_t>(Modality::kVideo)];
  bool ok = false;
  switch (task) {
    case TaskTag::kMI2T: ok = music == 1 && image == 1 && video == 0; break;
    case TaskTag::kMV2T: ok = music == 1 && video == 1 && image == 0; break;
    case TaskTag::kAny2T: ok = music == 1 && image <= 1 && video <= 1 && image + video >= 1; break;
    case TaskTag::kM2TCaption: ok = music == 1 && image + video == 0; break;
    case TaskTag::kI2T: ok = image == 1 && music + video == 0; break;
    case TaskTag::kV2T: ok = video == 1 && music + image == 0; break;
    case TaskTag::kT2T: ok = inputs.empty(); break;
  }
  if (!ok) throw DataError("pair " + id + ": media inputs do not fit task " + task_name(task));
}

nlohmann::json to_json(const Music4wayRecord& r) {
  nlohmann::json j = {{"id", r.id},
                      {"music", r.music_path},
                      {"video", r.video_path},
                      {"image", r.image_path},
                      {"frame_index", r.frame_index},
                      {"captions", {{"music", r.captions.music}, {"image", r.captions.image}, {"video", r.captions.video}}},
                      {"feature_text", r.feature_text},
                      {"unified_caption", nullptr},
                      {"unifier", r.unifier},
                      {"split", split_name(r.split)}};
  if (r.unified_caption) j["unified_caption"] = *r.unified_caption;
  return j;
}

Music4wayRecord record_from_json(const nlohmann::json& j) {
  Music4wayRecord r;
  r.id = field(j, "id").get<std::string>();
  r.music_path = field(j, "music").get<std::string>();
  r.video_path = field(j, "video").get<std::string>();
  r.image_path = field(j, "image").get<std::string>();
  r.frame_index = field(j, "frame_index").get<std::size_t>();
  const auto& c = field(j, "captions");
  r.captions = {field(c, "music").get<std::string>(), field(c, "image").get<std::string>(),
                field(c, "video").get<std::string>()};
  r.feature_text = field(j, "feature_text").get<std::string>();
  const auto& u = field(j, "unified_caption");
  if (!u.is_null()) r.unified_caption = u.get<std::string>();
  r.unifier = field(j, "unifier").get<std::string>();
  r.split = parse_split(field(j, "split").get<std::string>());
  return r;
}

nlohmann::json to_json(const InstructionPair& p) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& s : p.inputs) inputs.push_back({{"modality", modality_name(s.modality)}, {"path", s.path}});
  return {{"id", p.id},
          {"record_id", p.record_id},
          {"task", task_name(p.task)},
          {"inputs", inputs},
          {"input", p.input_text},
          {"instruction", p.instruction},
          {"output", p.target},
          {"target_source", p.target_source},
          {"variant", variant_name(p.variant)},
          {"split", split_name(p.split)}};
}

InstructionPair pair_from_json(const nlohmann::json& j) {
  InstructionPair p;
  p.id = field(j, "id").get<std::string>();
  p.record_id = field(j, "record_id").get<std::string>();
  p.task = parse_task(field(j, "task").get<std::string>());
  for (const auto& s : field(j, "inputs")) {
    p.inputs.push_back({parse_modality(field(s, "modality").get<std::string>()), field(s, "path").get<std::string>()});
  }
  p.input_text = field(j, "input").get<std::string>();
  p.instruction = field(j, "instruction").get<std::string>();
  p.target = field(j, "output").get<std::string>();
  p.target_source = field(j, "target_source").get<std::string>();
  try {
    p.variant = parse_variant(field(j, "variant").get<std::string>());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  p.split = parse_split(field(j, "split").get<std::string>());
  p.validate();
  return p;
}

void write_records(const std::filesystem::path& path, const std::vector<Music4wayRecord>& records) {
  write_lines(path, records);
}

void write_pairs(const std::filesystem::path& path, const std::vector<InstructionPair>& pairs) {
  write_lines(path, pairs);
}

std::vector<Music4wayRecord> read_records(const std::filesystem::path& path) {
  return read_lines<Music4wayRecord>(path, [](const nlohmann::json& j) {
    auto r = record_from_json(j);
    r.validate();
    return r;
  });
}

std::vector<InstructionPair> read_pairs(const std::filesystem::path& path) {
  return read_lines<InstructionPair>(path, pair_from_json);
}

std::vector<SynthDraw> draw_corpus(std::uint64_t seed, std::size_t count) {
  if (count == 0) throw ConfigError("corpus count must be at least 1");
  std::vector<SynthDraw> out;
  out.reserve(count);
  const auto n_colors = palette().size();
  for (std::size_t i = 0; i < count; ++i) {
    SynthDraw d;
    char id[32];
    std::snprintf(id, sizeof id, "m4w-%05zu", i);
    d.id = id;
    d.seed = splitmix64(seed ^ splitmix64(i + 1));
    std::mt19937_64 rng(d.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    d.music.bpm = 60.0 + static_cast<double>(pick(1201)) / 10.0;
    d.music.key_root = static_cast<int>(pick(12));
    d.music.minor = pick(2) == 1;
    d.progression_index = pick(2);
    d.music.progression = key_progressions(d.music.key_root, d.music.minor)[d.progression_index];
    d.music.seed = rng();
    d.video.shape = static_cast<ShapeKind>(pick(3));
    d.video.shape_color = pick(n_colors);
    d.video.background_color = (d.video.shape_color + 1 + pick(n_colors - 1)) % n_colors;
    d.video.motion = static_cast<Motion>(pick(4));
    out.push_back(std::move(d));
  }
  return out;
}

Captions ground_truth_captions(const SynthDraw& d) {
  std::vector<std::string> chords;
  for (int c : d.music.progression) {
    const std::string name = key_name(static_cast<std::size_t>(c));
    if (std::find(chords.begin(), chords.end(), name) == chords.end()) chords.push_back(name);
  }
  const int key_index = d.music.key_root + (d.music.minor ? 12 : 0);
  const std::string color = palette()[d.video.shape_color].name;
  const std::string background = palette()[d.video.background_color].name;
  const std::string shape = shape_name(d.video.shape);
  Captions c;
  c.music = "A " + tempo_word(d.music.bpm) + " " + (d.music.minor ? "somber" : "bright") + " piece in " +
            key_name(static_cast<std::size_t>(key_index)) + " that moves through the " + join_names(chords) +
            " chords over a steady click.";
  c.image = "The image shows a " + color + " " + shape + " on a " + background + " background.";
  c.video = "A " + color + " " + shape + " moves " + motion_phrase(d.video.motion) + " across a " + background +
            " background.";
  return c;
}

RawTriple synth_raw(const SynthDraw& draw) {
  RawTriple t;
  t.draw = draw;
  t.music = synth_music(draw.music);
  t.video = synth_video(draw.video);
  t.captions = ground_truth_captions(draw);
  return t;
}

std::vector<RawTriple> synth_raw(std::uint64_t seed, std::size_t count) {
  std::vector<RawTriple> out;
  for (const auto& d : draw_corpus(seed, count)) out.push_back(synth_raw(d));
  return out;
}

BuiltRecord build_record(const std::string& id, const RawMusic& music, const RawVideo& video,
                         const Captions& captions, std::uint64_t seed) {
  if (video.frames.empty()) throw DataError("record " + id + ": video has no frames");
  video.validate();
  music.validate();
  BuiltRecord out;
  std::mt19937_64 rng(seed);
  out.record.id = id;
  out.record.frame_index = static_cast<std::size_t>(rng() % video.frames.size());
  out.image = video.frames[out.record.frame_index];
  out.record.captions = captions;
  out.record.feature_text = textualize_features(extract_features(music).features);
  return out;
}

std::vector<Music4wayRecord> synthesize_corpus(const std::filesystem::path& root, const CorpusOptions& options) {
  if (options.test_fraction < 0.0 || options.test_fraction >= 1.0) {
    throw ConfigError("test_fraction must lie in [0, 1)");
  }
  std::filesystem::create_directories(root / "media");
  std::vector<Music4wayRecord> records;
  for (const auto& draw : draw_corpus(options.seed, options.count)) {
    const RawTriple raw = synth_raw(draw);
    BuiltRecord built = build_record(draw.id, raw.music, raw.video, raw.captions, splitmix64(draw.seed));
    Music4wayRecord& r = built.record;
    r.music_path = "media/" + draw.id + ".music";
    r.video_path = "media/" + draw.id + ".video.rfg";
    r.image_path = "media/" + draw.id + ".image.rfg";
    write_music(root / r.music_path, raw.music);
    write_video(root / r.video_path, raw.video);
    write_image(root / r.image_path, built.image);
    r.split = assign_split(r.id, options.test_fraction, options.seed);
    records.push_back(std::move(r));
  }
  return records;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path root, EncoderConfig config)
    : root_(std::move(root)), encoder_(config) {}

const ClipEmbeddingSet& EmbeddingCache::get(const MediaSlot& slot) {
  const std::string key = modality_name(slot.modality) + ":" + slot.path;
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const auto path = root_ / slot.path;
  ClipEmbeddingSet set;
  switch (slot.modality) {
    case Modality::kMusic: set = encoder_.encode_set(read_music(path)); break;
    case Modality::kImage: set = encoder_.encode_set(read_image(path)); break;
    case Modality::kVideo: set = encoder_.encode_set(read_video(path)); break;
  }
  return cache_.emplace(key, std::move(set)).first->second;
}

}  // namespace resonance
