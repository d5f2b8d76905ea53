// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   acceptance [--only 1,5,10] [--keep DIR]

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "resonance/dataset.hpp"
#include "resonance/metrics.hpp"
#include "resonance/music_features.hpp"
#include "resonance/synth.hpp"
#include "resonance/text_lm.hpp"
#include "resonance/training.hpp"
#include "resonance/unifier.hpp"
#include "resonance/verify.hpp"

namespace fs = std::filesystem;
using namespace resonance;
using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

namespace {

const char* const kVerbatimInstruction =
    "Analyze the music by considering both its auditory and visual components. Describe the music in detail, "
    "incorporating its tempo, chords, downbeats, and key, while also reflecting on how these musical features align "
    "with the video or a key image from the video.";

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

/// Scratch directory under the system temp dir, or under --keep when given.
class Scratch {
 public:
  Scratch(const fs::path& keep, const std::string& tag) : keep_(!keep.empty()) {
    if (keep_) {
      path_ = keep / tag;
    } else {
      std::random_device rd;
      path_ = fs::temp_directory_path() / ("resonance_acceptance_" + tag + "_" + std::to_string(rd()));
    }
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    if (!keep_) fs::remove_all(path_, ec);
  }
  Scratch(const Scratch&) = delete;
  Scratch& operator=(const Scratch&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  bool keep_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "resonance");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) lines.push_back(line);
  return lines;
}

ClipEmbeddingSet random_set(Modality m, std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  ClipEmbeddingSet s{m, n, dim, std::vector<double>(n * dim)};
  for (auto& v : s.matrix) v = dist(rng);
  return s;
}

template <typename T>
Tensor<T> random_rows(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  std::vector<T> v(rows * cols);
  for (auto& x : v) x = static_cast<T>(dist(rng));
  return Tensor<T>::from({rows, cols}, std::move(v));
}

ModelConfig micro_config() {
  ModelConfig c;
  c.lm.vocab_size = 24;
  c.lm.d_model = 16;
  c.lm.n_layers = 2;
  c.lm.n_heads = 2;
  c.lm.max_sequence_length = 48;
  c.d_enc = 12;
  c.pt_layers = 1;
  c.fusion_heads = 2;
  c.fusion_max_length = 24;
  c.lora_rank = 2;
  c.lora_alpha = 4.0;
  return c;
}

std::vector<TokenId> random_ids(std::size_t n, TokenId vocab, std::mt19937_64& rng) {
  std::uniform_int_distribution<TokenId> dist(Tokenizer::kSpecialCount, vocab - 1);
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = dist(rng);
  return ids;
}

// 1 -------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto r = run_pipeline_gradcheck();
  const bool ok = r.check.max_rel_error <= 1e-4 && r.seconds < 60.0;
  return {ok, "max rel. err " + fmt(r.check.max_rel_error) + " over " + std::to_string(r.check.coordinates) +
                  " coordinates of " + std::to_string(r.parameters) + " tensors in " + fmt(r.seconds) + " s"};
}

// 2 -------------------------------------------------------------------------

Outcome vanilla_reduction() {
  std::size_t identical = 0, trials = 0;
  for (bool mie : {false, true}) {
    ModelConfig c = micro_config();
    c.mie = mie;
    c.pt_layers = 0;
    for (std::uint64_t trial = 0; trial < 100; ++trial, ++trials) {
      ParameterStore<float> store;
      std::mt19937_64 rng(7000 + trial + (mie ? 500 : 0));
      ResonanceModel<float> model(store, c, rng);
      ModelInput in;
      in.media.music = random_set(Modality::kMusic, 1, c.d_enc, rng);
      if (trial % 3 != 1) in.media.video = random_set(Modality::kVideo, 1, c.d_enc, rng);
      if (trial % 3 != 2) in.media.image = random_set(Modality::kImage, 1, c.d_enc, rng);
      in.text = {Tokenizer::kMusic};
      if (in.media.video) in.text.push_back(Tokenizer::kVideo);
      if (in.media.image) in.text.push_back(Tokenizer::kImage);
      in.query = random_ids(1 + trial % 5, 24, rng);
      const auto target = random_ids(1 + trial % 4, 24, rng);
      const Tensor<float> a = model.logits(model.assemble(in, target, AssemblyMode::kConfigured));
      const Tensor<float> b = model.logits(model.assemble(in, target, AssemblyMode::kVanilla));
      bool same = a.shape() == b.shape();
      for (std::size_t i = 0; same && i < a.numel(); ++i) same = a.data()[i] == b.data()[i];
      identical += same;
    }
  }
  return {identical == trials, std::to_string(identical) + "/" + std::to_string(trials) +
                                   " bit-identical (100 with MIE off, 100 with MIE on, PT 0, one clip each)"};
}

// 3 -------------------------------------------------------------------------

Outcome attention_contracts() {
  std::size_t causal_ok = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    ParameterStore<float> store;
    std::mt19937_64 rng(8000 + trial);
    LMConfig c;
    c.vocab_size = 24;
    c.d_model = 16;
    c.n_layers = 2;
    c.n_heads = 2;
    c.max_sequence_length = 32;
    CausalLM<float> lm(store, c, rng);
    const std::size_t n = 2 + trial % 15;
    const Tensor<float> rows = random_rows<float>(n, 16, rng);
    const std::size_t t = trial % (n - 1);
    std::vector<float> changed(rows.data().begin(), rows.data().end());
    std::normal_distribution<float> dist(0.0f, 3.0f);
    for (std::size_t i = (t + 1) * 16; i < changed.size(); ++i) changed[i] += dist(rng);
    const Tensor<float> base = lm.project(lm.hidden(rows));
    const Tensor<float> pert = lm.project(lm.hidden(Tensor<float>::from({n, 16}, changed)));
    bool prefix_same = true, later_differs = false;
    for (std::size_t r = 0; r <= t; ++r)
      for (std::size_t v = 0; v < 24; ++v) prefix_same = prefix_same && base.at(r, v) == pert.at(r, v);
    for (std::size_t v = 0; v < 24; ++v) later_differs = later_differs || base.at(t + 1, v) != pert.at(t + 1, v);
    causal_ok += prefix_same && later_differs;
  }

  std::size_t fired = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    ParameterStore<float> store;
    std::mt19937_64 rng(9000 + trial);
    FusionTransformer<float> fusion(store, 16, 1, 2, 32, rng);
    const std::size_t n = 2 + trial % 20;
    std::vector<FusedSegment> seg(n, FusedSegment::kText);
    std::fill(seg.begin(), seg.begin() + static_cast<long>(n / 2), FusedSegment::kMusic);
    const Tensor<float> x = random_rows<float>(n, 16, rng);
    const Tensor<float> base = fusion.fuse(x, seg);
    std::vector<float> changed(x.data().begin(), x.data().end());
    std::normal_distribution<float> dist;
    for (std::size_t c = 0; c < 16; ++c) changed[(n - 1) * 16 + c] += dist(rng);
    const Tensor<float> pert = fusion.fuse(Tensor<float>::from({n, 16}, changed), seg);
    double delta = 0;
    for (std::size_t c = 0; c < 16; ++c) delta += std::abs(double(base.at(0, c)) - double(pert.at(0, c)));
    fired += delta > 1e-6;
  }
  return {causal_ok == 100 && fired >= 99, "causal prefix exact in " + std::to_string(causal_ok) +
                                               "/100; fusion first-row response in " + std::to_string(fired) + "/100"};
}

// 4 -------------------------------------------------------------------------

Outcome lora_algebra() {
  ParameterStore<float> store;
  std::mt19937_64 rng(4);
  LMConfig cfg;
  cfg.vocab_size = 40;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.max_sequence_length = 32;
  CausalLM<float> lm(store, cfg, rng);
  const std::vector<TokenId> ids = {2, 8, 4, 13, 19, 3, 27, 33};
  auto logits = [&] { return lm.project(lm.hidden(lm.embed(ids))); };
  const Tensor<float> before = logits();
  store.set_trainable_all(false);
  lm.attach_lora(CausalLM<float>::default_lora_patterns(), 32, 32.0, rng);
  const Tensor<float> attached = logits();
  bool identity = true;
  for (std::size_t i = 0; i < before.numel(); ++i) identity = identity && before.data()[i] == attached.data()[i];

  const std::vector<TokenId> labels = {8, 4, 13, 19, 3, 27, 33, 0};
  const std::vector<bool> mask = {true, true, true, true, true, true, true, false};
  std::vector<std::string> lora = lm.lora_parameter_names();
  for (auto& p : store.all()) p.tensor.set_requires_grad(p.trainable);
  Adam<float> adam;
  for (int step = 0; step < 10; ++step) {
    store.zero_grad();
    cross_entropy(logits(), std::span<const TokenId>(labels), mask).backward();
    adam.step(store, lora);
  }
  const Tensor<float> adapted = logits();
  double drift = 0;
  for (std::size_t i = 0; i < before.numel(); ++i)
    drift = std::max(drift, std::abs(double(adapted.data()[i]) - double(before.data()[i])));
  lm.merge_lora();
  const Tensor<float> merged = logits();
  double diff = 0;
  for (std::size_t i = 0; i < merged.numel(); ++i)
    diff = std::max(diff, std::abs(double(merged.data()[i]) - double(adapted.data()[i])));
  const bool ok = identity && drift > 1e-3 && diff <= 1e-6;
  return {ok, std::string("attach identity ") + (identity ? "exact" : "broken") + "; after 10 steps drift " +
                  fmt(drift) + ", merge max abs diff " + fmt(diff)};
}

// 5 -------------------------------------------------------------------------

Outcome overfit(const fs::path& keep) {
  const auto t0 = Clock::now();
  Scratch dir(keep, "overfit");
  auto records = synthesize_corpus(dir.path(), {1, 32, 0.0});
  TemplateUnifier unifier;
  BuildOptions bo;
  bo.mv2t = false;
  bo.any2t = false;
  bo.captioning = false;
  const auto report = build_instructions(records, unifier, bo);
  std::vector<std::string> texts;
  for (const auto& p : report.pairs) {
    texts.push_back(p.input_text);
    texts.push_back(p.instruction);
    texts.push_back(p.target);
  }
  const Tokenizer tok = Tokenizer::build(texts, 4096);
  EmbeddingCache cache(dir.path());
  std::vector<TrainingExample> data;
  for (const auto& p : report.pairs) data.push_back(make_example(p, tok, cache));
  if (data.size() != 32) return {false, "expected 32 MI2T pairs, built " + std::to_string(data.size())};

  ModelConfig mc;
  mc.lm.vocab_size = tok.size();
  mc.lm.d_model = 64;
  mc.lm.n_layers = 2;
  mc.lm.n_heads = 4;
  mc.lm.max_sequence_length = 256;
  mc.d_enc = cache.encoder().config().d_enc;
  mc.fusion_max_length = 64;
  ParameterStore<float> store;
  std::mt19937_64 rng(1);
  ResonanceModel<float> model(store, mc, rng);
  model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  StageConfig sc = StageConfig::defaults(2);
  sc.lr = 5e-3;
  sc.batch_size = 32;
  sc.epochs = 500;
  sc.max_steps = 500;
  Trainer<float> trainer(model, sc, 1);
  double acc = 0.0;
  std::size_t reached = 0;
  trainer.run(data, [&](const StepRecord& r) {
    if (r.step % 25 != 0) return false;
    acc = target_accuracy(model, data);
    if (acc >= 0.99) reached = r.step;
    return acc >= 0.99;
  });
  if (!reached) acc = target_accuracy(model, data);
  const double secs = seconds_since(t0);
  const bool ok = reached > 0 && reached <= 500 && secs < 300.0;
  return {ok, "accuracy " + fmt(acc, 4) + (reached ? " at step " + std::to_string(reached) : " after 500 steps") +
                  ", " + fmt(secs) + " s"};
}

// 6 -------------------------------------------------------------------------

template <typename T>
std::map<std::string, std::vector<T>> snapshot(const ParameterStore<T>& store) {
  std::map<std::string, std::vector<T>> out;
  for (const auto& p : store.all()) out[p.name].assign(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

Outcome trainable_sets() {
  const ModelConfig c = micro_config();
  std::mt19937_64 rng(6);
  std::vector<TrainingExample> data;
  for (std::size_t i = 0; i < 12; ++i) {
    TrainingExample ex;
    ex.id = "ex-" + std::to_string(i);
    ex.input.media.music = random_set(Modality::kMusic, 3, c.d_enc, rng);
    ex.input.media.video = random_set(Modality::kVideo, 3, c.d_enc, rng);
    ex.input.text = {Tokenizer::kMusic, Tokenizer::kVideo};
    ex.input.query = random_ids(3, 24, rng);
    ex.target = random_ids(4, 24, rng);
    data.push_back(std::move(ex));
  }
  ParameterStore<float> store;
  ResonanceModel<float> model(store, c, rng);
  auto stage_config = [](int stage) {
    StageConfig s = StageConfig::defaults(stage);
    s.lr = 1e-2;
    s.batch_size = 4;
    s.max_steps = 6;
    return s;
  };
  std::vector<std::string> problems;
  auto starts_with = [](const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; };

  const auto init = snapshot(store);
  {
    Trainer<float> t(model, stage_config(1), 1);
    t.run(data);
  }
  const auto after1 = snapshot(store);
  std::size_t lm_tensors = 0, moved1 = 0;
  for (const auto& [name, values] : init) {
    const bool changed = after1.at(name) != values;
    if (starts_with(name, "lm.")) {
      ++lm_tensors;
      if (changed) problems.push_back("stage 1 moved " + name);
    } else {
      moved1 += changed;
    }
  }
  if (moved1 == 0) problems.push_back("stage 1 moved nothing");

  model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  const auto before2 = snapshot(store);
  {
    Trainer<float> t(model, stage_config(2), 2);
    t.run(data);
  }
  const auto after2 = snapshot(store);
  std::size_t frozen = 0;
  bool lora_moved = false, emb_moved = false;
  for (const auto& [name, values] : before2) {
    const bool changed = after2.at(name) != values;
    const bool lora = name.find(".lora_") != std::string::npos;
    if (lora) {
      lora_moved = lora_moved || changed;
    } else if (name == model.lm().token_embedding_name()) {
      emb_moved = changed;
    } else if (starts_with(name, "lm.")) {
      ++frozen;
      if (changed) problems.push_back("stage 2 moved " + name);
    }
  }
  if (!lora_moved) problems.push_back("stage 2 left every LoRA factor unchanged");
  if (!emb_moved) problems.push_back("stage 2 left the token embedding unchanged");
  std::string detail = "stage 1: " + std::to_string(lm_tensors) + " LM tensors frozen, " + std::to_string(moved1) +
                       " adaptor/fusion tensors moved; stage 2: " + std::to_string(frozen) +
                       " base LM tensors frozen";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

// 7 -------------------------------------------------------------------------

Outcome music_features() {
  std::vector<std::string> problems;
  const double sr = kDeskSampleRate;
  const double frame_s = kDefaultHop / sr;

  std::size_t tempo_ok = 0, roundtrip_ok = 0;
  std::mt19937_64 rng(17);
  for (int i = 0; i < 20; ++i) {
    MusicSpec spec;
    spec.bpm = 60.0 + 120.0 * i / 19.0;
    spec.key_root = static_cast<int>(rng() % 12);
    spec.minor = rng() % 2;
    const auto progressions = key_progressions(spec.key_root, spec.minor);
    spec.progression = progressions[rng() % progressions.size()];
    spec.seed = 100 + i;
    spec.sample_rate = sr;
    const auto f = extract_features(synth_music(spec)).features;
    tempo_ok += !f.tempo.empty() && std::abs(f.tempo.front().bpm - spec.bpm) <= 2.0;
    const std::string text = textualize_features(f);
    const MusicFeatures back = parse_features(text);
    roundtrip_ok += back == f && textualize_features(back) == text;
  }
  if (tempo_ok < 18) problems.push_back("tempo");
  if (roundtrip_ok < 20) problems.push_back("textualization round trip");

  std::size_t key_ok = 0;
  for (int k = 0; k < 24; ++k) {
    const bool minor = k >= 12;
    const auto dist = estimate_key(chromagram(synth_scale(k % 12, minor, 0.5, sr)));
    key_ok += dist.argmax() == static_cast<std::size_t>(k);
  }
  if (key_ok < 22) problems.push_back("key");

  std::size_t frames = 0, frames_ok = 0, boundaries = 0, boundaries_ok = 0;
  for (int p = 0; p < 10; ++p) {
    std::vector<TimedChord> chords;
    int prev = -1;
    for (int j = 0; j < 4; ++j) {
      int c;
      do c = static_cast<int>(rng() % 24);
      while (c == prev);
      prev = c;
      chords.push_back({c, 0.8 + 0.1 * static_cast<double>(rng() % 12)});
    }
    double duration = 0;
    std::vector<double> truth_bounds;
    for (const auto& c : chords) {
      duration += c.seconds;
      truth_bounds.push_back(duration);
    }
    truth_bounds.pop_back();
    const auto segs = detect_chords(chromagram(synth_chords(chords, sr)), kDefaultHop, sr, duration);
    auto truth_at = [&](double t) {
      double end = 0;
      for (const auto& c : chords) {
        end += c.seconds;
        if (t < end) return chord_label(c.chord);
      }
      return chord_label(chords.back().chord);
    };
    auto detected_at = [&](double t) {
      for (const auto& s : segs)
        if (t >= s.start && t < s.end) return s.label;
      return segs.empty() ? std::string() : segs.back().label;
    };
    const auto n = static_cast<std::size_t>(duration / frame_s);
    for (std::size_t f = 0; f < n; ++f) {
      const double t = (static_cast<double>(f) + 0.5) * frame_s;
      ++frames;
      frames_ok += truth_at(t) == detected_at(t);
    }
    for (double b : truth_bounds) {
      ++boundaries;
      bool matched = false;
      for (std::size_t s = 1; s < segs.size(); ++s) matched = matched || std::abs(segs[s].start - b) <= frame_s + 1e-9;
      boundaries_ok += matched;
    }
    if (segs.size() != chords.size()) problems.push_back("progression " + std::to_string(p) + " has " +
                                                         std::to_string(segs.size()) + " segments");
  }
  const double frame_acc = static_cast<double>(frames_ok) / static_cast<double>(frames);
  if (frame_acc < 0.9) problems.push_back("chord frame accuracy");
  if (boundaries_ok != boundaries) problems.push_back("chord boundaries");

  std::string detail = "tempo " + std::to_string(tempo_ok) + "/20 within 2 BPM; key " + std::to_string(key_ok) +
                       "/24; chord frames " + fmt(100.0 * frame_acc, 4) + "%, boundaries " +
                       std::to_string(boundaries_ok) + "/" + std::to_string(boundaries) + " within 1 frame; " +
                       std::to_string(roundtrip_ok) + "/20 exact round trips";
  for (const auto& p : problems) detail += "; failed: " + p;
  return {problems.empty(), detail};
}

// 8 -------------------------------------------------------------------------

using Tokens = std::vector<std::string>;

std::size_t brute_force_lcs(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    const auto bits = static_cast<std::size_t>(std::popcount(mask));
    if (bits <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      ++j;
    }
    if (ok) best = bits;
  }
  return best;
}

double definition_bleu(const Tokens& c, const Tokens& r, std::size_t max_n) {
  if (c.empty()) return 0.0;
  const std::size_t order = std::min(max_n, c.size());
  auto occurrences = [](const Tokens& t, const Tokens& gram) {
    std::size_t k = 0;
    for (std::size_t i = 0; i + gram.size() <= t.size(); ++i)
      if (std::equal(gram.begin(), gram.end(), t.begin() + static_cast<long>(i))) ++k;
    return k;
  };
  double product = 1.0;
  for (std::size_t n = 1; n <= order; ++n) {
    std::size_t matched = 0;
    for (std::size_t i = 0; i + n <= c.size(); ++i) {
      const Tokens gram(c.begin() + static_cast<long>(i), c.begin() + static_cast<long>(i + n));
      bool first = true;
      for (std::size_t k = 0; k < i && first; ++k)
        if (std::equal(gram.begin(), gram.end(), c.begin() + static_cast<long>(k))) first = false;
      if (first) matched += std::min(occurrences(c, gram), occurrences(r, gram));
    }
    if (matched == 0) return 0.0;
    product *= static_cast<double>(matched) / static_cast<double>(c.size() - n + 1);
  }
  const double bp = c.size() > r.size() ? 1.0 : std::exp(1.0 - double(r.size()) / double(c.size()));
  return bp * std::pow(product, 1.0 / static_cast<double>(order));
}

Tokens random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t vocab) {
  Tokens t(rng() % (max_len + 1));
  for (auto& w : t) w = std::string(1, static_cast<char>('a' + rng() % vocab));
  return t;
}

Outcome metric_oracles() {
  std::mt19937_64 rng(8);
  std::size_t lcs_ok = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Tokens a = random_tokens(rng, 14, 4);
    const Tokens b = random_tokens(rng, 14, 4);
    const std::size_t lcs = brute_force_lcs(a, b);
    bool ok = lcs_length(a, b) == lcs;
    const auto r = rouge_l(a, b);
    if (!a.empty() || !b.empty()) {
      const double p = a.empty() ? 0.0 : double(lcs) / double(a.size());
      const double rc = b.empty() ? 0.0 : double(lcs) / double(b.size());
      const double f = p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0;
      ok = ok && r.precision == p && r.recall == rc && r.f1 == f;
    }
    lcs_ok += ok;
  }
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Tokens a = random_tokens(rng, 14, 3);
    const Tokens b = random_tokens(rng, 14, 3);
    for (std::size_t n : {1, 2, 3, 4}) worst = std::max(worst, std::abs(bleu(a, b, n).value - definition_bleu(a, b, n)));
  }
  std::size_t identity_ok = 0, identity_total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Tokens a = random_tokens(rng, 20, 6);
    if (a.empty()) a = {"x"};
    for (std::size_t n : {1, 4}) {
      ++identity_total;
      identity_ok += bleu(a, a, n).value == 1.0;
    }
    const auto r = rouge_l(a, a);
    ++identity_total;
    identity_ok += r.precision == 1.0 && r.recall == 1.0 && r.f1 == 1.0;
  }
  const bool ok = lcs_ok == 1000 && worst <= 1e-12 && identity_ok == identity_total;
  return {ok, "ROUGE-L exact on " + std::to_string(lcs_ok) + "/1000; BLEU max diff " + fmt(worst) + "; identity " +
                  std::to_string(identity_ok) + "/" + std::to_string(identity_total)};
}

// 9 -------------------------------------------------------------------------

bool has_digit(const std::string& s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Placeholder rules checked from the text alone: every <...> token is one of
// the three exact spellings, each at most once, music always present, and at
// least one visual modality.
bool placeholder_rules_hold(const InstructionPair& p) {
  static const std::map<std::string, Modality> kSpellings = {
      {"<Music>", Modality::kMusic}, {"<Image>", Modality::kImage}, {"<Video>", Modality::kVideo}};
  std::vector<Modality> seen;
  const std::string& s = p.input_text;
  for (std::size_t i = s.find('<'); i != std::string::npos; i = s.find('<', i + 1)) {
    const std::size_t close = s.find('>', i);
    if (close == std::string::npos) return false;
    const auto it = kSpellings.find(s.substr(i, close - i + 1));
    if (it == kSpellings.end()) return false;
    if (std::find(seen.begin(), seen.end(), it->second) != seen.end()) return false;
    seen.push_back(it->second);
  }
  if (std::find(seen.begin(), seen.end(), Modality::kMusic) == seen.end() || seen.size() < 2) return false;
  if (p.inputs.size() != seen.size()) return false;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (p.inputs[i].modality != seen[i]) return false;
  return true;
}

std::vector<std::string> sentences(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    cur += ch;
    if (ch == '.') {
      const auto b = cur.find_first_not_of(' ');
      if (b != std::string::npos) out.push_back(cur.substr(b));
      cur.clear();
    }
  }
  return out;
}

Outcome dataset_contracts(const fs::path& keep) {
  Scratch dir(keep, "dataset");
  std::vector<std::string> problems;
  const auto raw_records = synthesize_corpus(dir.path(), {5, 60, 0.5});
  TemplateUnifier unifier;

  auto records = raw_records;
  const auto full = build_instructions(records, unifier, BuildOptions{});
  std::map<std::string, int> mi, mv;
  std::size_t any = 0, any_ok = 0, verbatim = 0, multiway = 0;
  for (const auto& p : full.pairs) {
    if (p.task == TaskTag::kMI2T) ++mi[p.record_id];
    if (p.task == TaskTag::kMV2T) ++mv[p.record_id];
    if (p.task == TaskTag::kMI2T || p.task == TaskTag::kMV2T) {
      ++multiway;
      verbatim += p.instruction == kVerbatimInstruction;
    }
    if (p.task == TaskTag::kAny2T) {
      ++any;
      any_ok += placeholder_rules_hold(p);
    }
  }
  std::size_t one_each = 0;
  for (const auto& r : records) one_each += mi[r.id] == 1 && mv[r.id] == 1;
  if (one_each != records.size()) problems.push_back("MI2T/MV2T multiplicity");
  if (verbatim != multiway) problems.push_back("instruction text");
  if (any == 0 || any_ok != any) problems.push_back("Any2T placeholders");

  write_pairs(dir.path() / "pairs.jsonl", full.pairs);
  write_records(dir.path() / "records.out.jsonl", records);
  const bool roundtrip =
      read_pairs(dir.path() / "pairs.jsonl") == full.pairs && read_records(dir.path() / "records.out.jsonl") == records;
  if (!roundtrip) problems.push_back("JSONL round trip");

  std::map<std::string, Music4wayRecord> by_id;
  for (const auto& r : records) by_id[r.id] = r;
  std::size_t no_mf = 0, no_mf_ok = 0, no_vc = 0, no_vc_ok = 0;
  for (TargetVariant v : {TargetVariant::kNoMusicFeatures, TargetVariant::kNoVisualCaptions}) {
    auto copy = raw_records;
    BuildOptions opt;
    opt.variant = v;
    opt.any2t = false;
    opt.captioning = false;
    for (const auto& p : build_instructions(copy, unifier, opt).pairs) {
      if (p.variant != v) continue;
      if (v == TargetVariant::kNoMusicFeatures) {
        ++no_mf;
        no_mf_ok += !has_digit(p.target) && p.target.find("BPM") == std::string::npos;
      } else {
        ++no_vc;
        const auto& r = by_id.at(p.record_id);
        bool clean = true;
        for (const auto& visual : {r.captions.image, r.captions.video})
          for (const auto& s : sentences(visual)) clean = clean && p.target.find(s) == std::string::npos;
        no_vc_ok += clean;
      }
    }
  }
  if (no_mf == 0 || no_mf_ok != no_mf) problems.push_back("no-mf targets");
  if (no_vc == 0 || no_vc_ok != no_vc) problems.push_back("no-vc targets");

  std::string detail = std::to_string(one_each) + "/" + std::to_string(records.size()) +
                       " records with one MI2T and one MV2T; verbatim instruction " + std::to_string(verbatim) + "/" +
                       std::to_string(multiway) + "; Any2T rules " + std::to_string(any_ok) + "/" +
                       std::to_string(any) + "; JSONL " + (roundtrip ? "lossless" : "lossy") + "; no-mf " +
                       std::to_string(no_mf_ok) + "/" + std::to_string(no_mf) + ", no-vc " +
                       std::to_string(no_vc_ok) + "/" + std::to_string(no_vc);
  for (const auto& p : problems) detail += "; failed: " + p;
  return {problems.empty(), detail};
}

// 10 ------------------------------------------------------------------------

Outcome ablation_grid(const fs::path& keep) {
  const auto t0 = Clock::now();
  Scratch dir(keep, "grid");
  const auto corpus = dir.path() / "corpus";
  const auto out = dir.path() / "grid";
  const auto synth = run_cli({"synth-data", "--seed", "1", "--count", "2000", "--out", corpus.string()});
  if (synth.code != cli::kOk) return {false, "synth-data exited " + std::to_string(synth.code) + ": " + synth.err};
  const auto grid = run_cli({"ablate", "--corpus", corpus.string(), "--seeds", "1,2,3", "--out", out.string()});
  const double secs = seconds_since(t0);
  if (grid.code != cli::kOk) return {false, "ablate exited " + std::to_string(grid.code) + ": " + grid.err};

  std::size_t cells = 0, cell_errors = 0;
  std::set<std::string> labels;
  for (const auto& line : read_lines(out / "cells.jsonl")) {
    const json j = json::parse(line);
    ++cells;
    cell_errors += j.contains("error");
    labels.insert(j["label"].get<std::string>());
  }
  const auto csv = read_lines(out / "grid.csv");
  std::ifstream md_in(out / "grid.md");
  const std::string md((std::istreambuf_iterator<char>(md_in)), std::istreambuf_iterator<char>());
  std::size_t md_rows = 0;
  std::istringstream md_lines(md);
  for (std::string l; std::getline(md_lines, l);) md_rows += l.rfind("| ", 0) == 0;
  const bool alpha = md.find("| MWIT+MIE | alpha |") != std::string::npos;
  const bool beta = md.find("| MWIT+MIE+PT-1L | beta |") != std::string::npos;
  const bool ok = cells == 24 && cell_errors == 0 && labels.size() == 8 && csv.size() == 9 && md_rows == 1 + 8 &&
                  alpha && beta && secs < 7200.0;
  return {ok, std::to_string(cells) + " cells (" + std::to_string(cell_errors) + " failed), " +
                  std::to_string(csv.size() - (csv.empty() ? 0 : 1)) + " table rows, alpha " + (alpha ? "yes" : "no") +
                  ", beta " + (beta ? "yes" : "no") + ", " + fmt(secs / 60.0) + " min"};
}

// 11 ------------------------------------------------------------------------

Outcome sanity_mode(const fs::path& keep) {
  Scratch dir(keep, "sanity");
  const auto corpus = dir.path() / "corpus";
  const auto data = dir.path() / "data";
  const auto s1 = dir.path() / "stage1";
  const auto s2 = dir.path() / "stage2";
  const auto ev = dir.path() / "eval";
  auto step = [](const std::string& what, const CliResult& r) {
    return r.code == cli::kOk ? std::string() : what + " exited " + std::to_string(r.code) + ": " + r.err;
  };
  std::string err = step("synth-data", run_cli({"synth-data", "--seed", "11", "--count", "120", "--test-fraction",
                                                "0.1", "--out", corpus.string()}));
  if (err.empty()) err = step("build-instructions", run_cli({"build-instructions", "--in", corpus.string(), "--out",
                                                             data.string()}));
  const json cfg = {{"model",
                     {{"d_model", 32}, {"n_layers", 2}, {"n_heads", 4}, {"max_sequence_length", 256},
                      {"fusion_max_length", 64}, {"fusion_heads", 4}}},
                    {"stage1", {{"lr", 1e-3}, {"max_steps", 150}}},
                    {"stage2", {{"lr", 1e-3}, {"max_steps", 150}}}};
  {
    std::ofstream f(dir.path() / "train.json");
    f << cfg.dump(2);
  }
  const std::string cfg_path = (dir.path() / "train.json").string();
  if (err.empty())
    err = step("train stage 1", run_cli({"train", "--config", cfg_path, "--data", data.string(), "--stage", "1",
                                         "--out", s1.string()}));
  if (err.empty())
    err = step("train stage 2", run_cli({"train", "--config", cfg_path, "--data", data.string(), "--stage", "2",
                                         "--init", s1.string(), "--out", s2.string()}));
  if (err.empty())
    err = step("eval", run_cli({"eval", "--checkpoint", s2.string(), "--data", data.string(), "--sanity",
                                "text-only", "--out", ev.string()}));
  if (!err.empty()) return {false, err};

  std::vector<std::string> problems;
  std::string counts;
  for (const char* bench : {"mi2t", "mv2t", "any2t"}) {
    std::size_t expected = 0;
    for (const auto& p : read_pairs(data / (std::string(bench) + ".jsonl"))) expected += p.split == Split::kTest;
    const auto full = read_lines(ev / (std::string(bench) + ".full.jsonl"));
    const auto text = read_lines(ev / (std::string(bench) + ".text-only.jsonl"));
    bool paired = expected > 0 && full.size() == expected && text.size() == expected;
    std::size_t scored = 0;
    for (std::size_t i = 0; paired && i < full.size(); ++i) {
      const json a = json::parse(full[i]);
      const json b = json::parse(text[i]);
      paired = a["id"] == b["id"] && a["mode"] == "full" && b["mode"] == "text-only";
      scored += a.contains("metrics") && b.contains("metrics");
    }
    if (!paired || scored != expected) problems.push_back(bench);
    counts += (counts.empty() ? "" : ", ") + std::string(bench) + " " + std::to_string(scored) + "/" +
              std::to_string(expected);
  }
  const auto agg = read_lines(ev / "aggregate.csv");
  if (agg.size() != 1 + 6) problems.push_back("aggregate.csv rows");
  std::string detail = "paired full/text-only reports scored: " + counts;
  for (const auto& p : problems) detail += "; failed: " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path keep;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    } else if (arg == "--keep" && i + 1 < argc) {
      keep = fs::absolute(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only 1,2,...] [--keep DIR]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"vanilla reduction", vanilla_reduction},
      {"attention contracts", attention_contracts},
      {"LoRA algebra", lora_algebra},
      {"overfit oracle", [&] { return overfit(keep); }},
      {"trainable sets", trainable_sets},
      {"music features", music_features},
      {"metric oracles", metric_oracles},
      {"dataset contracts", [&] { return dataset_contracts(keep); }},
      {"ablation grid", [&] { return ablation_grid(keep); }},
      {"text-only sanity check", [&] { return sanity_mode(keep); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(number)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << number << "  " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(t0)) << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
