// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "resonance/ablation.hpp"
#include "resonance/checkpoint.hpp"
#include "resonance/errors.hpp"
#include "resonance/manifest.hpp"
#include "resonance/metrics.hpp"
#include "resonance/training.hpp"
#include "resonance/unifier.hpp"
#include "resonance/verify.hpp"

namespace resonance::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> kOnOff = {"on", "off"};
const std::vector<std::string> kVariants = {"full", "no-vc", "no-mf", "no_vc", "no_mf"};
const char* kVocabFile = "vocab.txt";
const char* kRecordsFile = "records.jsonl";
const char* kCheckpointDir = "checkpoint";

/// Pair files of a dataset directory, by kind.
const std::map<std::string, std::string>& pair_files() {
  static const std::map<std::string, std::string> kFiles = {
      {"mi2t", "mi2t.jsonl"}, {"mv2t", "mv2t.jsonl"}, {"any2t", "any2t.jsonl"}, {"m2t", "captioning.jsonl"}};
  return kFiles;
}

std::string kind_of(TaskTag t) {
  switch (t) {
    case TaskTag::kMI2T: return "mi2t";
    case TaskTag::kMV2T: return "mv2t";
    case TaskTag::kAny2T: return "any2t";
    default: return "m2t";
  }
}

TaskTag benchmark_task(const std::string& kind) {
  if (kind == "mi2t") return TaskTag::kMI2T;
  if (kind == "mv2t") return TaskTag::kMV2T;
  if (kind == "any2t") return TaskTag::kAny2T;
  return TaskTag::kM2TCaption;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");
  return j;
}

/// Rejects config keys outside `allowed`.
void check_keys(const json& cfg, const std::vector<std::string>& allowed, const std::string& command) {
  for (const auto& [key, value] : cfg.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + command + " config");
    }
  }
}

/// Flag value when given, else the config value, else the default.
template <typename T>
T resolve(const CLI::Option* flag, const T& flag_value, const json& cfg, const std::string& key, const T& fallback) {
  if (flag && flag->count() > 0) return flag_value;
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return fallback;
}

bool on_off(const std::string& v) { return v == "on"; }

void prepare_output(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw StateError("output path " + dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!force) throw StateError("output directory " + dir.string() + " is not empty; pass --force to overwrite");
      fs::remove_all(dir);
    }
  }
  fs::create_directories(dir);
}

void require_dir(const fs::path& dir, const std::string& what) {
  if (!fs::is_directory(dir)) throw DataError(what + " directory " + dir.string() + " does not exist");
}

struct Dataset {
  fs::path media_root;
  Tokenizer tokenizer;
  std::vector<InstructionPair> pairs;
};

Dataset load_dataset(const fs::path& dir) {
  require_dir(dir, "dataset");
  const RunManifest m = RunManifest::read(dir);
  if (!m.config.contains("media_root")) throw DataError(dir.string() + " is not a build-instructions output");
  Dataset d;
  d.media_root = m.config.at("media_root").get<std::string>();
  d.tokenizer = Tokenizer::load(dir / kVocabFile);
  for (const auto& [kind, file] : pair_files()) {
    if (!fs::exists(dir / file)) continue;
    for (auto& p : read_pairs(dir / file)) d.pairs.push_back(std::move(p));
  }
  if (d.pairs.empty()) throw DataError("dataset " + dir.string() + " holds no instruction pairs");
  return d;
}

std::vector<std::string> relative_outputs(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename() != kRunManifestFile) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Loaded {
  std::unique_ptr<ParameterStore<float>> store;
  std::unique_ptr<ResonanceModel<float>> model;
  json metadata;
};

/// Rebuilds the model recorded in a checkpoint and loads its parameters.
Loaded load_model(const fs::path& checkpoint_dir, std::uint64_t seed) {
  const Checkpoint cp = read_checkpoint(checkpoint_dir);
  if (!cp.metadata.contains("model")) throw CheckpointError(checkpoint_dir.string() + " lacks a model config");
  Loaded l;
  l.metadata = cp.metadata;
  l.store = std::make_unique<ParameterStore<float>>();
  std::mt19937_64 rng(seed);
  l.model = std::make_unique<ResonanceModel<float>>(*l.store, ModelConfig::from_json(cp.metadata.at("model")), rng);
  if (cp.metadata.value("lora", false)) l.model->attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  restore_parameters(*l.store, cp);
  return l;
}

// synth-data ---------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t count = 2000;
  double test_fraction = 0.05;
  std::string out;
  bool force = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* count_opt = nullptr;
  CLI::Option* fraction_opt = nullptr;
};

int synth_data(const SynthArgs& a, std::ostream& out) {
  const std::int64_t started = manifest_time();
  const json cfg = load_config(a.config);
  check_keys(cfg, {"seed", "count", "test_fraction"}, "synth-data");
  CorpusOptions o;
  o.seed = resolve<std::uint64_t>(a.seed_opt, a.seed, cfg, "seed", 0);
  o.count = resolve<std::size_t>(a.count_opt, a.count, cfg, "count", 2000);
  o.test_fraction = resolve<double>(a.fraction_opt, a.test_fraction, cfg, "test_fraction", 0.05);
  if (o.count == 0) throw ConfigError("--count must be at least 1");
  if (!(o.test_fraction >= 0.0 && o.test_fraction < 1.0)) throw ConfigError("--test-fraction must lie in [0, 1)");
  const fs::path dir = a.out;
  prepare_output(dir, a.force);
  const auto records = synthesize_corpus(dir, o);
  write_records(dir / kRecordsFile, records);
  std::size_t test = 0;
  for (const auto& r : records) test += r.split == Split::kTest;

  RunManifest m;
  m.command = "synth-data";
  m.config = {{"seed", o.seed}, {"count", o.count}, {"test_fraction", o.test_fraction}};
  m.seed = o.seed;
  m.outputs = relative_outputs(dir);
  m.dataset_hashes[kRecordsFile] = content_hash(dir / kRecordsFile);
  m.dataset_hashes["media"] = content_hash(dir / "media");
  m.started = started;
  m.finished = manifest_time();
  m.write(dir);
  out << "synthesized " << records.size() << " records (" << test << " test) in " << dir.string() << '\n';
  return kOk;
}

// build-instructions -------------------------------------------------------

struct BuildArgs {
  std::string config;
  std::string in;
  std::string out;
  std::vector<std::string> kinds;
  std::string unifier = "template";
  std::string endpoint;
  std::string remote_model;
  std::string variant = "full";
  std::uint64_t seed = 0;
  bool force = false;
  CLI::Option* kinds_opt = nullptr;
  CLI::Option* unifier_opt = nullptr;
  CLI::Option* endpoint_opt = nullptr;
  CLI::Option* model_opt = nullptr;
  CLI::Option* variant_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* in_opt = nullptr;
};

int build_instructions_cmd(const BuildArgs& a, std::ostream& out) {
  const std::int64_t started = manifest_time();
  const json cfg = load_config(a.config);
  check_keys(cfg, {"in", "kinds", "unifier", "endpoint", "model", "target_variant", "seed"}, "build-instructions");
  const fs::path in = resolve<std::string>(a.in_opt, a.in, cfg, "in", "");
  if (in.empty()) throw ConfigError("--in is required");
  require_dir(in, "corpus");
  auto kinds = resolve<std::vector<std::string>>(a.kinds_opt, a.kinds, cfg, "kinds", {"all"});
  if (std::find(kinds.begin(), kinds.end(), "all") != kinds.end()) kinds = {"mi2t", "mv2t", "any2t", "m2t"};
  for (const auto& k : kinds)
    if (!pair_files().count(k)) throw ConfigError("unknown instruction kind '" + k + "'");
  const std::string unifier_kind = resolve<std::string>(a.unifier_opt, a.unifier, cfg, "unifier", "template");
  const std::string endpoint = resolve<std::string>(a.endpoint_opt, a.endpoint, cfg, "endpoint", "");
  const std::string remote_model = resolve<std::string>(a.model_opt, a.remote_model, cfg, "model", "");
  const TargetVariant variant = parse_variant(resolve<std::string>(a.variant_opt, a.variant, cfg, "target_variant", "full"));
  const std::uint64_t seed = resolve<std::uint64_t>(a.seed_opt, a.seed, cfg, "seed", 0);

  std::unique_ptr<UnifierClient> client;
  const fs::path dir = a.out;
  if (unifier_kind == "template") {
    client = std::make_unique<TemplateUnifier>();
  } else if (unifier_kind == "remote") {
    if (endpoint.empty()) throw ConfigError("--unifier remote requires --endpoint");
    RemoteConfig rc;
    rc.endpoint = endpoint;
    rc.model = remote_model;
    rc.audit_log = dir / "unifier_audit.jsonl";
    client = std::make_unique<RemoteUnifier>(rc);
  } else {
    throw ConfigError("unknown unifier '" + unifier_kind + "'");
  }
  auto records = read_records(in / kRecordsFile);
  prepare_output(dir, a.force);

  BuildOptions bo;
  auto wants = [&](const char* k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
  bo.mi2t = wants("mi2t");
  bo.mv2t = wants("mv2t");
  bo.any2t = wants("any2t");
  bo.captioning = wants("m2t");
  bo.variant = variant;
  bo.seed = seed;
  const BuildReport report = build_instructions(records, *client, bo);

  write_records(dir / kRecordsFile, records);
  std::map<std::string, std::vector<InstructionPair>> grouped;
  for (const auto& k : kinds) grouped[k];
  for (const auto& p : report.pairs) grouped[kind_of(p.task)].push_back(p);
  std::vector<std::string> corpus;
  for (const auto& [kind, pairs] : grouped) {
    write_pairs(dir / pair_files().at(kind), pairs);
    for (const auto& p : pairs) {
      corpus.push_back(p.input_text);
      corpus.push_back(p.instruction);
      corpus.push_back(p.target);
    }
  }
  Tokenizer::build(corpus, 8192).save(dir / kVocabFile);
  {
    std::ofstream skipped(dir / "skipped.jsonl");
    for (const auto& [id, reason] : report.skipped) skipped << json{{"record", id}, {"reason", reason}}.dump() << '\n';
  }

  RunManifest m;
  m.command = "build-instructions";
  m.config = {{"in", in.string()},
              {"media_root", fs::canonical(in).string()},
              {"kinds", kinds},
              {"unifier", unifier_kind},
              {"endpoint", endpoint},
              {"model", remote_model},
              {"target_variant", variant_name(variant)},
              {"seed", seed}};
  m.seed = seed;
  m.inputs = {(in / kRecordsFile).string()};
  m.outputs = relative_outputs(dir);
  m.dataset_hashes[(in / kRecordsFile).string()] = content_hash(in / kRecordsFile);
  for (const auto& [kind, pairs] : grouped) m.dataset_hashes[pair_files().at(kind)] = content_hash(dir / pair_files().at(kind));
  m.started = started;
  m.finished = manifest_time();
  m.write(dir);
  for (const auto& [kind, pairs] : grouped) out << kind << ": " << pairs.size() << " pairs\n";
  if (!report.skipped.empty()) out << "skipped " << report.skipped.size() << " records (see skipped.jsonl)\n";
  return kOk;
}

// train --------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  int stage = 1;
  std::string init;
  bool from_scratch = false;
  std::string resume;
  std::string mwit = "on";
  std::string mie = "on";
  std::size_t pt_layers = 1;
  std::string variant = "full";
  std::size_t epochs = 0;
  std::size_t max_steps = 0;
  double lr = 1e-4;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  bool force = false;
  CLI::Option *data_opt = nullptr, *stage_opt = nullptr, *mwit_opt = nullptr, *mie_opt = nullptr,
              *pt_opt = nullptr, *variant_opt = nullptr, *epochs_opt = nullptr, *steps_opt = nullptr,
              *lr_opt = nullptr, *batch_opt = nullptr, *seed_opt = nullptr;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  const std::int64_t started = manifest_time();
  const json cfg = load_config(a.config);
  check_keys(cfg, {"data", "stage", "seed", "model", "stage1", "stage2", "ablation"}, "train");
  const int stage = resolve<int>(a.stage_opt, a.stage, cfg, "stage", 1);
  if (stage != 1 && stage != 2) throw ConfigError("--stage must be 1 or 2");
  const std::uint64_t seed = resolve<std::uint64_t>(a.seed_opt, a.seed, cfg, "seed", 0);
  const fs::path data_dir = resolve<std::string>(a.data_opt, a.data, cfg, "data", "");
  if (data_dir.empty()) throw ConfigError("--data is required");

  AblationConfig ablation = AblationConfig::from_json(cfg.value("ablation", json::object()));
  if (a.mwit_opt->count()) ablation.mwit = on_off(a.mwit);
  if (a.mie_opt->count()) ablation.mie = on_off(a.mie);
  if (a.pt_opt->count()) ablation.pt_layers = a.pt_layers;
  if (a.variant_opt->count()) ablation.variant = parse_variant(a.variant);
  ablation = AblationConfig::from_json(ablation.to_json());

  StageConfig sc = StageConfig::defaults(stage);
  const std::string stage_key = "stage" + std::to_string(stage);
  if (cfg.contains(stage_key)) {
    const json& s = cfg.at(stage_key);
    check_keys(s, {"epochs", "lr", "batch_size", "max_steps"}, stage_key);
    sc.epochs = s.value("epochs", sc.epochs);
    sc.lr = s.value("lr", sc.lr);
    sc.batch_size = s.value("batch_size", sc.batch_size);
    if (s.contains("max_steps")) sc.max_steps = s.at("max_steps").get<std::size_t>();
  }
  if (a.epochs_opt->count()) sc.epochs = a.epochs;
  if (a.steps_opt->count()) sc.max_steps = a.max_steps;
  if (a.lr_opt->count()) sc.lr = a.lr;
  if (a.batch_opt->count()) sc.batch_size = a.batch_size;
  sc.validate();

  const bool resuming = !a.resume.empty();
  const bool initialised = !a.init.empty();
  if (stage == 2 && !resuming && !initialised && !a.from_scratch) {
    throw StateError("stage 2 needs a stage-1 checkpoint (--init DIR) or --from-scratch");
  }
  if (stage == 1 && initialised) throw ConfigError("--init applies to stage 2 only");

  Dataset data = load_dataset(data_dir);
  for (const auto& p : data.pairs) {
    const bool multiway = p.task == TaskTag::kMI2T || p.task == TaskTag::kMV2T;
    if (multiway && p.split == Split::kTrain && p.variant != ablation.variant) {
      throw ConfigError("dataset targets are '" + variant_name(p.variant) + "' but --target-variant is '" +
                        variant_name(ablation.variant) + "'; rebuild the instructions with the matching variant");
    }
  }

  // Model: from the checkpoint being continued, else from config and flags.
  ModelConfig mc;
  json source_meta;
  if (resuming || initialised) {
    const fs::path src = fs::path(resuming ? a.resume : a.init) / kCheckpointDir;
    source_meta = read_checkpoint(src).metadata;
    mc = ModelConfig::from_json(source_meta.at("model"));
    if ((a.mie_opt->count() && mc.mie != ablation.mie) || (a.pt_opt->count() && mc.pt_layers != ablation.pt_layers)) {
      throw ConfigError("--mie/--pt-layers differ from the checkpoint being continued");
    }
    ablation.mie = mc.mie;
    ablation.pt_layers = mc.pt_layers;
    if (initialised && source_meta.value("stage", 0) != 1) throw CheckpointError("--init expects a stage-1 checkpoint");
  } else {
    json merged = ModelConfig{}.to_json();
    if (cfg.contains("model")) merged.update(cfg.at("model"));
    mc = ModelConfig::from_json(merged);
    mc.mie = ablation.mie;
    mc.pt_layers = ablation.pt_layers;
  }
  if (mc.lm.vocab_size != data.tokenizer.size()) {
    if (resuming || initialised) throw CheckpointError("checkpoint vocabulary differs from the dataset vocabulary");
    mc.lm.vocab_size = data.tokenizer.size();
  }
  mc.validate();

  ParameterStore<float> store;
  std::mt19937_64 rng(seed);
  ResonanceModel<float> model(store, mc, rng);
  if (initialised) {
    restore_parameters(store, read_checkpoint(fs::path(a.init) / kCheckpointDir));
    model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  } else if (resuming ? source_meta.value("lora", false) : stage == 2) {
    model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
  }
  Trainer<float> trainer(model, sc, seed + static_cast<std::uint64_t>(stage));
  if (resuming) trainer.resume(fs::path(a.resume) / kCheckpointDir);

  EmbeddingCache cache(data.media_root);
  std::vector<TrainingExample> examples;
  for (const auto& p : stage_pairs(data.pairs, stage, ablation)) examples.push_back(make_example(p, data.tokenizer, cache));
  if (examples.empty()) throw DataError("no training pairs for stage " + std::to_string(stage));

  const fs::path dir = a.out;
  prepare_output(dir, a.force);
  std::vector<StepRecord> curve;
  auto write_curve = [&] {
    std::ofstream csv(dir / "loss.csv");
    csv << "step,epoch,loss\n" << std::setprecision(9);
    for (const auto& r : curve) csv << r.step << ',' << r.epoch << ',' << r.loss << '\n';
  };
  try {
    trainer.run(examples, [&](const StepRecord& r) {
      curve.push_back(r);
      if (r.step % 50 == 0) out << "step " << r.step << " epoch " << r.epoch << " loss " << r.loss << '\n';
      return false;
    });
  } catch (...) {
    write_curve();
    throw;
  }
  write_curve();
  const json resolved = {{"data", data_dir.string()},  {"stage", stage},          {"seed", seed},
                         {"model", mc.to_json()},       {"stage_config", sc.to_json()},
                         {"ablation", ablation.to_json()}, {"init", a.init},    {"resume", a.resume},
                         {"from_scratch", a.from_scratch}};
  trainer.save(dir / kCheckpointDir, {{"ablation", ablation.to_json()}});
  data.tokenizer.save(dir / kVocabFile);
  {
    std::ofstream c(dir / "config.json");
    c << resolved.dump(2) << '\n';
  }

  RunManifest m;
  m.command = "train";
  m.config = resolved;
  m.seed = seed;
  m.inputs = {data_dir.string()};
  if (initialised) m.inputs.push_back(a.init);
  if (resuming) m.inputs.push_back(a.resume);
  m.outputs = relative_outputs(dir);
  m.dataset_hashes[data_dir.string()] = content_hash(data_dir);
  m.started = started;
  m.finished = manifest_time();
  m.write(dir);
  out << "stage " << stage << " (" << ablation.label() << "): " << trainer.state().step << " steps, final loss "
      << (curve.empty() ? 0.0 : curve.back().loss) << '\n';
  return kOk;
}

// eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string config;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::vector<std::string> benchmarks;
  std::string sanity;
  std::size_t limit = 0;
  std::size_t max_new = 160;
  std::uint64_t seed = 0;
  bool force = false;
  CLI::Option *bench_opt = nullptr, *sanity_opt = nullptr, *limit_opt = nullptr, *max_new_opt = nullptr,
              *seed_opt = nullptr;
};

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const std::int64_t started = manifest_time();
  const json cfg = load_config(a.config);
  check_keys(cfg, {"benchmarks", "sanity", "limit", "max_new", "seed"}, "eval");
  auto benchmarks = resolve<std::vector<std::string>>(a.bench_opt, a.benchmarks, cfg, "benchmarks",
                                                      {"mi2t", "mv2t", "any2t"});
  for (const auto& b : benchmarks)
    if (!pair_files().count(b)) throw ConfigError("unknown benchmark '" + b + "'");
  const std::string sanity = resolve<std::string>(a.sanity_opt, a.sanity, cfg, "sanity", "");
  if (!sanity.empty() && sanity != "text-only") throw ConfigError("--sanity accepts only text-only");
  const std::size_t limit = resolve<std::size_t>(a.limit_opt, a.limit, cfg, "limit", 0);
  const std::size_t max_new = resolve<std::size_t>(a.max_new_opt, a.max_new, cfg, "max_new", 160);
  const std::uint64_t seed = resolve<std::uint64_t>(a.seed_opt, a.seed, cfg, "seed", 0);

  const fs::path ckpt = a.checkpoint;
  require_dir(ckpt, "checkpoint");
  Loaded loaded = load_model(ckpt / kCheckpointDir, seed);
  const Tokenizer tokenizer = Tokenizer::load(ckpt / kVocabFile);
  Dataset data = load_dataset(a.data);
  if (tokenizer.size() != data.tokenizer.size()) throw CheckpointError("checkpoint and dataset vocabularies differ");
  EmbeddingCache cache(data.media_root);

  const fs::path dir = a.out;
  prepare_output(dir, a.force);
  std::vector<EvalMode> modes = {EvalMode::kFull};
  if (sanity == "text-only") modes.push_back(EvalMode::kTextOnly);
  std::vector<EvalReport> reports;
  for (const auto& b : benchmarks) {
    const TaskTag task = benchmark_task(b);
    std::vector<InstructionPair> test;
    for (const auto& p : data.pairs)
      if (p.split == Split::kTest && p.task == task) test.push_back(p);
    if (test.empty()) throw DataError("no test pairs for benchmark " + b);
    for (EvalMode mode : modes) {
      EvalOptions eo;
      eo.mode = mode;
      eo.max_new = max_new;
      if (limit) eo.limit = limit;
      EvalReport r = evaluate(*loaded.model, tokenizer, test, cache, task_name(task), eo);
      write_report_jsonl(dir / (b + "." + mode_name(mode) + ".jsonl"), r);
      out << std::left << std::setw(12) << task_name(task) << std::setw(10) << mode_name(mode) << " B-1 "
          << std::fixed << std::setprecision(4) << r.aggregate.bleu1 << " BLEU " << r.aggregate.bleu << " R-L F1 "
          << r.aggregate.rouge_f1 << " (" << r.scored << " scored, " << r.failed << " failed)\n"
          << std::defaultfloat;
      reports.push_back(std::move(r));
    }
  }
  write_aggregate_csv(dir / "aggregate.csv", reports);

  RunManifest m;
  m.command = "eval";
  m.config = {{"checkpoint", ckpt.string()}, {"data", a.data},       {"benchmarks", benchmarks},
              {"sanity", sanity.empty() ? "off" : sanity}, {"limit", limit}, {"max_new", max_new}, {"seed", seed}};
  m.seed = seed;
  m.inputs = {ckpt.string(), a.data};
  m.outputs = relative_outputs(dir);
  m.dataset_hashes[a.data] = content_hash(a.data);
  m.started = started;
  m.finished = manifest_time();
  m.write(dir);
  return kOk;
}

// ablate -------------------------------------------------------------------

struct AblateArgs {
  std::string config;
  std::string corpus;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::size_t eval_limit = 0;
  std::uint64_t seed = 0;
  bool force = false;
  CLI::Option *seeds_opt = nullptr, *limit_opt = nullptr, *seed_opt = nullptr;
};

int ablate_cmd(const AblateArgs& a, std::ostream& out) {
  const std::int64_t started = manifest_time();
  const json cfg = load_config(a.config);
  GridOptions options = GridOptions::from_json(cfg);
  if (a.seeds_opt->count()) options.seeds = a.seeds;
  if (a.limit_opt->count()) options.eval_limit = a.eval_limit;
  if (options.seeds.empty()) throw ConfigError("--seeds must name at least one seed");
  const std::uint64_t build_seed = a.seed_opt->count() ? a.seed : 0;
  const fs::path corpus = a.corpus;
  require_dir(corpus, "corpus");
  const auto records = read_records(corpus / kRecordsFile);

  const fs::path dir = a.out;
  prepare_output(dir, a.force);
  TemplateUnifier unifier;
  const GridData data = prepare_grid_data(records, unifier, options.configs, build_seed);
  EncoderConfig enc;
  enc.d_enc = options.model.d_enc;
  EmbeddingCache cache(corpus, enc);
  std::ofstream cells(dir / "cells.jsonl");
  const GridResult result = run_ablation_grid(data, cache, options, [&](const GridCell& c) {
    json j = {{"config", c.config.to_json()}, {"label", c.config.label()}, {"seed", c.seed}, {"seconds", c.seconds}};
    if (!c.error.empty()) j["error"] = c.error;
    for (const auto& [name, s] : c.scores) {
      j["scores"][name] = {{"bleu1", s.bleu1}, {"bleu", s.bleu}, {"rouge_l_p", s.rouge_p}, {"rouge_l_r", s.rouge_r},
                           {"rouge_l_f1", s.rouge_f1}};
    }
    cells << j.dump() << '\n' << std::flush;
    out << c.config.label() << " seed " << c.seed << ": "
        << (c.error.empty() ? "ok" : "error: " + c.error) << " (" << std::fixed << std::setprecision(1) << c.seconds
        << " s)\n"
        << std::defaultfloat << std::flush;
  });
  cells.close();
  write_grid_csv(dir / "grid.csv", result);
  write_grid_markdown(dir / "grid.md", result);

  RunManifest m;
  m.command = "ablate";
  m.config = options.to_json();
  m.config["corpus"] = corpus.string();
  m.config["build_seed"] = build_seed;
  m.seed = build_seed;
  m.inputs = {corpus.string()};
  m.outputs = relative_outputs(dir);
  m.dataset_hashes[(corpus / kRecordsFile).string()] = content_hash(corpus / kRecordsFile);
  m.started = started;
  m.finished = manifest_time();
  m.write(dir);
  std::size_t failed = 0;
  for (const auto& c : result.cells) failed += !c.error.empty();
  out << "grid: " << result.rows().size() << " configurations x " << options.seeds.size() << " seeds, " << failed
      << " failed cells; table in " << (dir / "grid.md").string() << '\n';
  return kOk;
}

// gradcheck ----------------------------------------------------------------

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
};

int gradcheck_cmd(const GradcheckArgs& a, std::ostream& out) {
  const json cfg = load_config(a.config);
  check_keys(cfg, {"model", "seed", "tolerance", "epsilon"}, "gradcheck");
  PipelineGradcheckOptions o;
  if (cfg.contains("model")) {
    json merged = o.model.to_json();
    merged.update(cfg.at("model"));
    o.model = ModelConfig::from_json(merged);
  }
  o.seed = resolve<std::uint64_t>(a.seed_opt, a.seed, cfg, "seed", 1);
  o.epsilon = cfg.value("epsilon", o.epsilon);
  const double tolerance = resolve<double>(a.tol_opt, a.tolerance, cfg, "tolerance", 1e-4);
  const auto r = run_pipeline_gradcheck(o);
  out << "gradcheck: d_model " << o.model.lm.d_model << ", " << o.model.lm.n_layers << " LM layers, PT "
      << o.model.pt_layers << ", " << r.parameters << " parameter tensors, " << r.check.coordinates
      << " coordinates\n";
  out << "max rel. err " << std::scientific << std::setprecision(3) << r.check.max_rel_error << " at "
      << r.check.worst_coordinate << " (tolerance " << tolerance << ")" << std::defaultfloat << " in " << std::fixed
      << std::setprecision(2) << r.seconds << " s\n"
      << std::defaultfloat;
  return r.check.max_rel_error <= tolerance ? kOk : kVerificationFailed;
}

int report(std::ostream& err, const char* kind, const std::exception& e, int code) {
  err << "error: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal music understanding: data pipeline, training and evaluation", "resonance"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kResonanceVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Synthesize a raw music/video/image corpus");
  s->add_option("--config", synth.config, "JSON config file")->check(CLI::ExistingFile);
  synth.seed_opt = s->add_option("--seed", synth.seed, "Corpus seed");
  synth.count_opt = s->add_option("--count", synth.count, "Number of records");
  synth.fraction_opt = s->add_option("--test-fraction", synth.test_fraction, "Fraction of records in the test split");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_flag("--force", synth.force, "Replace a non-empty output directory");

  BuildArgs build;
  auto* b = app.add_subcommand("build-instructions", "Unify captions and build instruction datasets");
  b->add_option("--config", build.config, "JSON config file")->check(CLI::ExistingFile);
  build.in_opt = b->add_option("--in", build.in, "Corpus directory from synth-data");
  b->add_option("--out", build.out, "Output directory")->required();
  build.kinds_opt = b->add_option("--kind", build.kinds, "mi2t, mv2t, any2t, m2t or all (repeatable)")
                        ->check(CLI::IsMember({"mi2t", "mv2t", "any2t", "m2t", "all"}))
                        ->delimiter(',');
  build.unifier_opt = b->add_option("--unifier", build.unifier, "Caption unifier")
                          ->check(CLI::IsMember({"template", "remote"}));
  build.endpoint_opt = b->add_option("--endpoint", build.endpoint, "Chat-completions URL for --unifier remote");
  build.model_opt = b->add_option("--model", build.remote_model, "Remote model name");
  build.variant_opt = b->add_option("--target-variant", build.variant, "full, no-vc or no-mf (train split)")
                          ->check(CLI::IsMember(kVariants));
  build.seed_opt = b->add_option("--seed", build.seed, "Seed for flexible-input pairs");
  b->add_flag("--force", build.force, "Replace a non-empty output directory");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Run one training stage");
  t->add_option("--config", train.config, "JSON run config")->check(CLI::ExistingFile);
  train.data_opt = t->add_option("--data", train.data, "Dataset directory from build-instructions");
  t->add_option("--out", train.out, "Output directory")->required();
  train.stage_opt = t->add_option("--stage", train.stage, "1 or 2")->check(CLI::IsMember({1, 2}));
  t->add_option("--init", train.init, "Stage-1 output directory to start stage 2 from");
  t->add_flag("--from-scratch", train.from_scratch, "Allow stage 2 without a stage-1 checkpoint");
  t->add_option("--resume", train.resume, "Output directory of an interrupted run of the same stage");
  train.mwit_opt = t->add_option("--mwit", train.mwit, "Multi-way pairs in stage 2")->check(CLI::IsMember(kOnOff));
  train.mie_opt = t->add_option("--mie", train.mie, "Multi-sampled embeddings")->check(CLI::IsMember(kOnOff));
  train.pt_opt = t->add_option("--pt-layers", train.pt_layers, "Fusion transformer layers")
                     ->check(CLI::IsMember({0, 1, 2, 6}));
  train.variant_opt = t->add_option("--target-variant", train.variant, "Target variant of the dataset")
                          ->check(CLI::IsMember(kVariants));
  train.epochs_opt = t->add_option("--epochs", train.epochs, "Epochs");
  train.steps_opt = t->add_option("--max-steps", train.max_steps, "Optimizer step budget");
  train.lr_opt = t->add_option("--lr", train.lr, "Learning rate");
  train.batch_opt = t->add_option("--batch-size", train.batch_size, "Batch size");
  train.seed_opt = t->add_option("--seed", train.seed, "Initialization and shuffling seed");
  t->add_flag("--force", train.force, "Replace a non-empty output directory");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Generate and score test-split pairs");
  e->add_option("--config", eval.config, "JSON config file")->check(CLI::ExistingFile);
  e->add_option("--checkpoint", eval.checkpoint, "Output directory of a train run")->required();
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--out", eval.out, "Output directory")->required();
  eval.bench_opt = e->add_option("--benchmark", eval.benchmarks, "mi2t, mv2t, any2t or m2t (repeatable)")
                       ->check(CLI::IsMember({"mi2t", "mv2t", "any2t", "m2t"}))
                       ->delimiter(',');
  eval.sanity_opt = e->add_option("--sanity", eval.sanity, "text-only: also report with all media removed")
                        ->check(CLI::IsMember({"text-only"}));
  eval.limit_opt = e->add_option("--limit", eval.limit, "Pairs per benchmark (0 = all)");
  eval.max_new_opt = e->add_option("--max-new", eval.max_new, "Generated token budget");
  eval.seed_opt = e->add_option("--seed", eval.seed, "Seed recorded in the manifest");
  e->add_flag("--force", eval.force, "Replace a non-empty output directory");

  AblateArgs ablate;
  auto* g = app.add_subcommand("ablate", "Train and evaluate the ablation grid");
  g->add_option("--config", ablate.config, "JSON grid config")->check(CLI::ExistingFile);
  g->add_option("--corpus", ablate.corpus, "Corpus directory from synth-data")->required();
  g->add_option("--out", ablate.out, "Output directory")->required();
  ablate.seeds_opt = g->add_option("--seeds", ablate.seeds, "Comma-separated seeds")->delimiter(',');
  ablate.limit_opt = g->add_option("--eval-limit", ablate.eval_limit, "Test pairs per benchmark");
  ablate.seed_opt = g->add_option("--seed", ablate.seed, "Instruction building seed");
  g->add_flag("--force", ablate.force, "Replace a non-empty output directory");

  GradcheckArgs grad;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of the full model at micro scale");
  c->add_option("--config", grad.config, "JSON config file")->check(CLI::ExistingFile);
  grad.seed_opt = c->add_option("--seed", grad.seed, "Initialization seed");
  grad.tol_opt = c->add_option("--tolerance", grad.tolerance, "Maximum relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return synth_data(synth, out);
    if (*b) return build_instructions_cmd(build, out);
    if (*t) return train_cmd(train, out);
    if (*e) return eval_cmd(eval, out);
    if (*g) return ablate_cmd(ablate, out);
    if (*c) return gradcheck_cmd(grad, out);
    return kUsage;
  } catch (const ConfigError& ex) {
    return report(err, "ConfigError", ex, kUsage);
  } catch (const DataError& ex) {
    return report(err, "DataError", ex, kDataInvalid);
  } catch (const SequenceLengthError& ex) {
    return report(err, "SequenceLengthError", ex, kDataInvalid);
  } catch (const ShapeError& ex) {
    return report(err, "ShapeError", ex, kDataInvalid);
  } catch (const StateError& ex) {
    return report(err, "StateError", ex, kStateInvalid);
  } catch (const CheckpointError& ex) {
    return report(err, "CheckpointError", ex, kCheckpointInvalid);
  } catch (const TransportError& ex) {
    err << "error: TransportError after " << ex.attempts() << " attempts";
    if (ex.status()) err << " (HTTP " << ex.status() << ")";
    err << ": " << ex.what() << '\n';
    return kTransportFailed;
  } catch (const NumericError& ex) {
    return report(err, "NumericError", ex, kNumericFailure);
  } catch (const UnsupportedError& ex) {
    return report(err, "UnsupportedError", ex, kUnsupported);
  } catch (const std::exception& ex) {
    return report(err, "Error", ex, kFailure);
  }
}

}  // namespace resonance::cli
