// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/unifier.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <thread>

#include "resonance/errors.hpp"
#include "resonance/music_features.hpp"
#include "resonance/prompts.hpp"

namespace resonance {

namespace {

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

bool is_minor_key(const MusicFeatures& f) { return f.key.argmax() >= 12; }

std::vector<std::string> feature_sentences(const MusicFeatures& f) {
  std::vector<std::string> out;
  if (!f.tempo.empty()) {
    out.push_back("The tempo sits near " + std::to_string(std::llround(f.tempo.front().bpm)) + " BPM.");
  }
  std::vector<std::string> labels;
  for (const auto& c : f.chords)
    if (std::find(labels.begin(), labels.end(), c.label) == labels.end()) labels.push_back(c.label);
  if (!labels.empty()) out.push_back("The chord labels are " + join_list(labels) + ".");
  out.push_back("The key is " + key_name(f.key.argmax()) + ".");
  for (const auto& b : f.downbeats) {
    if (b.position == 1.0) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "Downbeats land on every fourth beat, first at %.2f seconds.", b.time);
      out.emplace_back(buf);
      break;
    }
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, const std::string& id) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void append_audit(const std::filesystem::path& log, const nlohmann::json& entry) {
  if (log.empty()) return;
  std::ofstream out(log, std::ios::app);
  if (!out) throw ConfigError("cannot open audit log " + log.string());
  out << entry.dump() << '\n';
}

}  // namespace

UnifiedParts template_parts(const Music4wayRecord& record) {
  const MusicFeatures f = parse_features(record.feature_text);
  const std::string mood = is_minor_key(f) ? "somber" : "bright";
  UnifiedParts p;
  p.visual = {record.captions.video, record.captions.image};
  p.music = record.captions.music;
  p.features = feature_sentences(f);
  p.closing = "Together the sound and the picture share a " + mood + " mood.";
  p.closing_music_only = "The music keeps a " + mood + " mood throughout.";
  return p;
}

std::string compose_unified(const UnifiedParts& parts, TargetVariant variant) {
  std::vector<std::string> s;
  const bool visual = variant != TargetVariant::kNoVisualCaptions;
  if (visual) s.insert(s.end(), parts.visual.begin(), parts.visual.end());
  s.push_back(parts.music);
  if (variant != TargetVariant::kNoMusicFeatures) s.insert(s.end(), parts.features.begin(), parts.features.end());
  s.push_back(visual ? parts.closing : parts.closing_music_only);
  return join_sentences(s);
}

std::string caption_block(const Music4wayRecord& record) {
  std::string out = "- Video Caption: " + record.captions.video + "\n- Image Caption: " + record.captions.image +
                    "\n- Music Caption: " + record.captions.music + "\n- Music Features:";
  std::size_t start = 0;
  while (start <= record.feature_text.size()) {
    const std::size_t end = record.feature_text.find('\n', start);
    out += "\n------ " + record.feature_text.substr(start, end == std::string::npos ? end : end - start);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::string unify_prompt(const Music4wayRecord& record) {
  return caption_block(record) + "\n" + std::string(prompts::kUnifyInstruction);
}

std::string any2t_prompt(const Music4wayRecord& record) {
  if (!record.unified_caption) throw DataError("record " + record.id + " has no unified caption");
  return std::string(prompts::kAny2TPreamble) + "\n\n" + caption_block(record) +
         "\n- Unified Caption: " + *record.unified_caption;
}

Any2TTriplet parse_triplet(const std::string& reply) {
  const auto find = [&](const std::string& key) {
    const std::regex re("(^|\\n)\\s*\\**" + key + "\\**\\s*:", std::regex::icase);
    std::smatch m;
    if (!std::regex_search(reply, m, re)) throw DataError("reply lacks an '" + key + ":' section");
    return std::pair<std::size_t, std::size_t>(static_cast<std::size_t>(m.position(0)),
                                               static_cast<std::size_t>(m.position(0) + m.length(0)));
  };
  const auto in = find("Input");
  const auto ins = find("Instruction");
  const auto out = find("Output");
  if (!(in.first < ins.first && ins.first < out.first)) throw DataError("reply sections are out of order");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  Any2TTriplet t{trim(reply.substr(in.second, ins.first - in.second)),
                 trim(reply.substr(ins.second, out.first - ins.second)), trim(reply.substr(out.second))};
  if (t.input.empty() || t.instruction.empty() || t.output.empty()) throw DataError("reply has an empty section");
  return t;
}

std::vector<Modality> validate_any2t_input(std::string_view input) {
  static const std::regex tag("<\\s*[A-Za-z]+[^<>]{0,20}>");
  static const std::regex media("music|image|video|audio|img|picture|photo|clip|song", std::regex::icase);
  const std::string text(input);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), tag); it != std::sregex_iterator(); ++it) {
    const std::string t = it->str();
    if (t == "<Music>" || t == "<Image>" || t == "<Video>") continue;
    if (std::regex_search(t, media)) throw DataError("misspelled placeholder " + t);
  }
  const auto seq = placeholder_sequence(input);
  std::size_t counts[3] = {0, 0, 0};
  for (Modality m : seq) ++counts[static_cast<std::size_t>(m)];
  const std::size_t music = counts[static_cast<std::size_t>(Modality::kMusic)];
  const std::size_t image = counts[static_cast<std::size_t>(Modality::kImage)];
  const std::size_t video = counts[static_cast<std::size_t>(Modality::kVideo)];
  if (music != 1) throw DataError("input must contain <Music> exactly once");
  if (image > 1 || video > 1) throw DataError("input repeats a visual placeholder");
  if (image + video == 0) throw DataError("input needs <Image> or <Video> besides <Music>");
  return seq;
}

std::string TemplateUnifier::unify(const Music4wayRecord& record) {
  return compose_unified(template_parts(record));
}

Any2TTriplet TemplateUnifier::any2t(const Music4wayRecord& record, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, record.id));
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  std::vector<Modality> mods;
  switch (pick(3)) {
    case 0: mods = {Modality::kMusic, Modality::kImage}; break;
    case 1: mods = {Modality::kMusic, Modality::kVideo}; break;
    default: mods = {Modality::kMusic, Modality::kImage, Modality::kVideo}; break;
  }
  for (std::size_t i = mods.size(); i > 1; --i) std::swap(mods[i - 1], mods[pick(i)]);
  std::vector<std::string> phrases;
  for (Modality m : mods) {
    switch (m) {
      case Modality::kMusic: phrases.push_back("the music of <Music>"); break;
      case Modality::kImage: phrases.push_back("the image <Image>"); break;
      case Modality::kVideo: phrases.push_back("the video <Video>"); break;
    }
  }
  const std::string list = join_list(phrases);
  Any2TTriplet t;
  switch (pick(4)) {
    case 0: t.input = "Consider " + list + "."; break;
    case 1: t.input = "Here are " + list + "."; break;
    case 2: t.input = "Take " + list + " together."; break;
    default: t.input = capitalize(list) + " are presented side by side."; break;
  }
  const bool has_image = std::find(mods.begin(), mods.end(), Modality::kImage) != mods.end();
  const bool has_video = std::find(mods.begin(), mods.end(), Modality::kVideo) != mods.end();
  const std::string visual = has_image && has_video ? "image and video" : has_image ? "image" : "video";
  switch (pick(4)) {
    case 0: t.instruction = "How does the mood of the music match the " + visual + "?"; break;
    case 1: t.instruction = "Describe how the tempo and harmony of the music relate to what the " + visual + " shows."; break;
    case 2: t.instruction = "What key is the music in, and how does it fit the " + visual + "?"; break;
    default: t.instruction = "Explain how the music and the " + visual + " work together."; break;
  }
  const UnifiedParts parts = template_parts(record);
  std::vector<std::string> s = {parts.music};
  s.insert(s.end(), parts.features.begin(), parts.features.end());
  if (has_video) s.push_back(record.captions.video);
  if (has_image) s.push_back(record.captions.image);
  s.push_back(parts.closing);
  t.output = join_sentences(s);
  return t;
}

RemoteUnifier::RemoteUnifier(RemoteConfig config) : config_(std::move(config)) {
  static const std::regex url("^(https?://[^/]+)(/.*)?$");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) {
    throw ConfigError("remote unifier endpoint must be an http(s) URL, got '" + config_.endpoint + "'");
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("environment variable " + config_.api_key_env + " is not set for the remote unifier");
  }
  api_key_ = key;
  if (config_.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
}

std::string RemoteUnifier::chat(const std::string& system, const std::string& user) {
  nlohmann::json messages = nlohmann::json::array();
  if (!system.empty()) messages.push_back({{"role", "system"}, {"content", system}});
  messages.push_back({{"role", "user"}, {"content", user}});
  nlohmann::json request = {{"messages", messages}, {"temperature", 0}};
  if (!config_.model.empty()) request["model"] = config_.model;
  const std::string body = request.dump();

  httplib::Client client(base_);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  const httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

  int last_status = 0;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(config_.backoff * (attempt - 1));
    auto res = client.Post(path_, headers, body, "application/json");
    nlohmann::json audit = {{"endpoint", config_.endpoint}, {"attempt", attempt}, {"request", request}};
    if (!res) {
      last_error = httplib::to_string(res.error());
      audit["error"] = last_error;
      append_audit(config_.audit_log, audit);
      continue;
    }
    last_status = res->status;
    audit["status"] = res->status;
    audit["response"] = res->body;
    append_audit(config_.audit_log, audit);
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw TransportError("unifier endpoint returned HTTP " + std::to_string(res->status), attempt, res->status);
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed unifier response: ") + e.what(), attempt, res->status);
    }
  }
  throw TransportError("unifier request failed after " + std::to_string(config_.max_attempts) +
                           " attempts: " + last_error,
                       config_.max_attempts, last_status);
}

std::string RemoteUnifier::unify(const Music4wayRecord& record) {
  return chat("", unify_prompt(record));
}

Any2TTriplet RemoteUnifier::any2t(const Music4wayRecord& record, std::uint64_t) {
  return parse_triplet(chat(std::string(prompts::kAny2TSystem), any2t_prompt(record)));
}

namespace {

InstructionPair multiway_pair(const Music4wayRecord& record, TaskTag task) {
  if (!record.unified_caption) throw DataError("record " + record.id + " has no unified caption");
  InstructionPair p;
  p.record_id = record.id;
  p.task = task;
  p.instruction = std::string(prompts::kMultiwayInstruction);
  p.target = *record.unified_caption;
  p.target_source = record.unifier;
  p.split = record.split;
  if (task == TaskTag::kMI2T) {
    p.id = record.id + "-mi2t";
    p.inputs = {{Modality::kMusic, record.music_path}, {Modality::kImage, record.image_path}};
    p.input_text = "<Music> <Image>";
  } else {
    p.id = record.id + "-mv2t";
    p.inputs = {{Modality::kMusic, record.music_path}, {Modality::kVideo, record.video_path}};
    p.input_text = "<Music> <Video>";
  }
  p.validate();
  return p;
}

std::string media_path(const Music4wayRecord& r, Modality m) {
  switch (m) {
    case Modality::kMusic: return r.music_path;
    case Modality::kImage: return r.image_path;
    case Modality::kVideo: return r.video_path;
  }
  return {};
}

}  // namespace

InstructionPair make_mi2t(const Music4wayRecord& record) { return multiway_pair(record, TaskTag::kMI2T); }
InstructionPair make_mv2t(const Music4wayRecord& record) { return multiway_pair(record, TaskTag::kMV2T); }

InstructionPair make_any2t(const Music4wayRecord& record, UnifierClient& client, std::uint64_t seed) {
  if (!record.unified_caption) throw DataError("record " + record.id + " has no unified caption");
  const Any2TTriplet t = client.any2t(record, seed);
  InstructionPair p;
  p.id = record.id + "-any2t";
  p.record_id = record.id;
  p.task = TaskTag::kAny2T;
  for (Modality m : validate_any2t_input(t.input)) p.inputs.push_back({m, media_path(record, m)});
  p.input_text = t.input;
  p.instruction = t.instruction;
  p.target = t.output;
  p.target_source = client.name();
  p.split = record.split;
  p.validate();
  return p;
}

std::vector<InstructionPair> make_captioning(const Music4wayRecord& record) {
  struct Spec {
    TaskTag task;
    Modality modality;
    const char* suffix;
    const char* instruction;
    const std::string* target;
  };
  const Spec specs[] = {
      {TaskTag::kM2TCaption, Modality::kMusic, "-m2t", "Describe the music.", &record.captions.music},
      {TaskTag::kI2T, Modality::kImage, "-i2t", "Describe the image.", &record.captions.image},
      {TaskTag::kV2T, Modality::kVideo, "-v2t", "Describe the video.", &record.captions.video},
  };
  std::vector<InstructionPair> out;
  for (const auto& s : specs) {
    InstructionPair p;
    p.id = record.id + s.suffix;
    p.record_id = record.id;
    p.task = s.task;
    p.inputs = {{s.modality, media_path(record, s.modality)}};
    p.input_text = placeholder(s.modality);
    p.instruction = s.instruction;
    p.target = *s.target;
    p.target_source = "ground-truth";
    p.split = record.split;
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

InstructionPair make_target_variant(const InstructionPair& pair, const Music4wayRecord& record,
                                    TargetVariant variant) {
  if (variant == TargetVariant::kFull) return pair;
  if (pair.task != TaskTag::kMI2T && pair.task != TaskTag::kMV2T) {
    throw UnsupportedError("target variants apply to MI2T and MV2T pairs, not " + task_name(pair.task));
  }
  if (pair.target_source != "template") {
    throw UnsupportedError("pair " + pair.id + " was built by the " + pair.target_source +
                           " unifier and cannot be recomposed");
  }
  if (pair.record_id != record.id) throw DataError("pair " + pair.id + " does not belong to record " + record.id);
  InstructionPair out = pair;
  out.target = compose_unified(template_parts(record), variant);
  out.variant = variant;
  return out;
}

BuildReport build_instructions(std::vector<Music4wayRecord>& records, UnifierClient& client,
                               const BuildOptions& options) {
  BuildReport report;
  for (auto& record : records) {
    if (!record.unified_caption) {
      record.unified_caption = client.unify(record);
      record.unifier = client.name();
    }
    const TargetVariant variant = record.split == Split::kTrain ? options.variant : TargetVariant::kFull;
    if (options.mi2t) report.pairs.push_back(make_target_variant(make_mi2t(record), record, variant));
    if (options.mv2t) report.pairs.push_back(make_target_variant(make_mv2t(record), record, variant));
    if (options.captioning) {
      for (auto& p : make_captioning(record)) report.pairs.push_back(std::move(p));
    }
    if (options.any2t && record.split == Split::kTest) {
      try {
        report.pairs.push_back(make_any2t(record, client, options.seed));
      } catch (const DataError& e) {
        report.skipped.emplace_back(record.id, e.what());
      }
    }
  }
  return report;
}

}  // namespace resonance
