// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/ablation.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<TrainingExample> examples_of(const std::vector<InstructionPair>& pairs, const Tokenizer& tok,
                                         EmbeddingCache& cache) {
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(make_example(p, tok, cache));
  return out;
}

StageConfig stage_from_json(const nlohmann::json& j, StageConfig base) {
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") {
      base.epochs = value.get<std::size_t>();
    } else if (key == "lr") {
      base.lr = value.get<double>();
    } else if (key == "batch_size") {
      base.batch_size = value.get<std::size_t>();
    } else if (key == "max_steps") {
      base.max_steps = value.is_null() ? std::nullopt : std::optional<std::size_t>(value.get<std::size_t>());
    } else if (key != "stage") {
      throw ConfigError("unknown stage key '" + key + "'");
    }
  }
  base.validate();
  return base;
}

}  // namespace

const std::vector<std::pair<std::string, TaskTag>>& grid_benchmarks() {
  static const std::vector<std::pair<std::string, TaskTag>> kBenchmarks = {
      {"MI2T", TaskTag::kMI2T}, {"MV2T", TaskTag::kMV2T}, {"Any2T", TaskTag::kAny2T},
      {"M2T-caption", TaskTag::kM2TCaption}};
  return kBenchmarks;
}

GridOptions GridOptions::desk() {
  GridOptions o;
  o.model.lm.d_model = 32;
  o.model.lm.n_layers = 2;
  o.model.lm.n_heads = 4;
  o.model.lm.max_sequence_length = 256;
  o.model.d_enc = 128;
  o.model.fusion_heads = 4;
  o.model.fusion_max_length = 64;
  o.stage1.lr = 1e-3;
  o.stage1.max_steps = 800;
  o.stage2.lr = 1e-3;
  o.stage2.max_steps = 800;
  return o;
}

nlohmann::json GridOptions::to_json() const {
  nlohmann::json configs_json = nlohmann::json::array();
  for (const auto& c : configs) configs_json.push_back(c.to_json());
  return {{"model", model.to_json()},  {"stage1", stage1.to_json()},   {"stage2", stage2.to_json()},
          {"configs", configs_json},   {"seeds", seeds},               {"eval_limit", eval_limit},
          {"max_new", max_new}};
}

GridOptions GridOptions::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("grid config must be an object");
  GridOptions o = desk();
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "model") {
        nlohmann::json merged = o.model.to_json();
        merged.update(value);
        o.model = ModelConfig::from_json(merged);
      } else if (key == "stage1") {
        o.stage1 = stage_from_json(value, o.stage1);
      } else if (key == "stage2") {
        o.stage2 = stage_from_json(value, o.stage2);
      } else if (key == "configs") {
        o.configs.clear();
        for (const auto& c : value) o.configs.push_back(AblationConfig::from_json(c));
      } else if (key == "seeds") {
        o.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "eval_limit") {
        o.eval_limit = value.get<std::size_t>();
      } else if (key == "max_new") {
        o.max_new = value.get<std::size_t>();
      } else {
        throw ConfigError("unknown grid key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("grid key '" + key + "': " + e.what());
    }
  }
  if (o.configs.empty()) throw ConfigError("grid has no configurations");
  if (o.seeds.empty()) throw ConfigError("grid has no seeds");
  return o;
}

GridData prepare_grid_data(const std::vector<Music4wayRecord>& records, UnifierClient& unifier,
                           const std::vector<AblationConfig>& configs, std::uint64_t build_seed,
                           std::size_t max_vocab) {
  std::set<TargetVariant> variants = {TargetVariant::kFull};
  for (const auto& c : configs) variants.insert(c.variant);
  GridData data;
  for (TargetVariant v : variants) {
    std::vector<Music4wayRecord> copy = records;
    BuildOptions options;
    options.variant = v;
    options.seed = build_seed;
    data.pairs[v] = build_instructions(copy, unifier, options).pairs;
  }
  std::vector<std::string> corpus;
  for (const auto& p : data.pairs.at(TargetVariant::kFull)) {
    corpus.push_back(p.input_text);
    corpus.push_back(p.instruction);
    corpus.push_back(p.target);
  }
  data.tokenizer = Tokenizer::build(corpus, max_vocab);
  return data;
}

GridCell run_grid_cell(const GridData& data, EmbeddingCache& cache, const GridOptions& options,
                       const AblationConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  GridCell cell;
  cell.config = config;
  cell.seed = seed;
  try {
    const auto it = data.pairs.find(config.variant);
    if (it == data.pairs.end()) throw StateError("no pairs built for variant " + variant_name(config.variant));
    ModelConfig mc = options.model;
    mc.lm.vocab_size = data.tokenizer.size();
    mc.mie = config.mie;
    mc.pt_layers = config.pt_layers;
    ParameterStore<float> store;
    std::mt19937_64 rng(seed);
    ResonanceModel<float> model(store, mc, rng);

    const auto stage1 = examples_of(stage_pairs(it->second, 1, config), data.tokenizer, cache);
    Trainer<float>(model, options.stage1, seed + 1).run(stage1);
    model.attach_lora(CausalLM<float>::default_lora_patterns(), rng);
    const auto stage2 = examples_of(stage_pairs(it->second, 2, config), data.tokenizer, cache);
    Trainer<float>(model, options.stage2, seed + 2).run(stage2);

    const auto& full = data.pairs.at(TargetVariant::kFull);
    for (const auto& [name, task] : grid_benchmarks()) {
      std::vector<InstructionPair> test;
      for (const auto& p : full)
        if (p.split == Split::kTest && p.task == task) test.push_back(p);
      EvalOptions eo;
      eo.limit = options.eval_limit;
      eo.max_new = options.max_new;
      const EvalReport report = evaluate(model, data.tokenizer, test, cache, name, eo);
      if (report.scored == 0) throw DataError("benchmark " + name + " produced no scored examples");
      cell.scores[name] = report.aggregate;
    }
  } catch (const std::exception& e) {
    cell.error = e.what();
    cell.scores.clear();
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

GridResult run_ablation_grid(const GridData& data, EmbeddingCache& cache, const GridOptions& options,
                             const std::function<void(const GridCell&)>& on_cell) {
  GridResult result;
  for (const auto& config : options.configs) {
    for (std::uint64_t seed : options.seeds) {
      result.cells.push_back(run_grid_cell(data, cache, options, config, seed));
      if (on_cell) on_cell(result.cells.back());
    }
  }
  return result;
}

std::vector<GridRow> GridResult::rows() const {
  std::vector<GridRow> rows;
  for (const auto& cell : cells) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const GridRow& r) { return r.config == cell.config; });
    if (it == rows.end()) {
      rows.push_back({cell.config, {}, 0, {}});
      it = rows.end() - 1;
    }
    if (!cell.error.empty()) {
      it->errors.push_back("seed " + std::to_string(cell.seed) + ": " + cell.error);
      continue;
    }
    ++it->seeds_ok;
    for (const auto& [name, m] : cell.scores) {
      auto& acc = it->mean[name];
      acc.bleu1 += m.bleu1;
      acc.bleu += m.bleu;
      acc.rouge_p += m.rouge_p;
      acc.rouge_r += m.rouge_r;
      acc.rouge_f1 += m.rouge_f1;
    }
  }
  for (auto& row : rows) {
    if (row.seeds_ok == 0) continue;
    const double n = static_cast<double>(row.seeds_ok);
    for (auto& [name, m] : row.mean) {
      m.bleu1 /= n;
      m.bleu /= n;
      m.rouge_p /= n;
      m.rouge_r /= n;
      m.rouge_f1 /= n;
    }
  }
  return rows;
}

void write_grid_csv(const std::filesystem::path& path, const GridResult& result) {
  auto out = open_output(path);
  out << std::setprecision(17);
  out << "config,role,mwit,mie,pt_layers,target_variant,seeds_ok";
  for (const auto& [name, task] : grid_benchmarks()) {
    for (const char* m : {"bleu1", "bleu", "rouge_l_p", "rouge_l_r", "rouge_l_f1"}) out << ',' << name << '_' << m;
  }
  out << '\n';
  for (const auto& row : result.rows()) {
    const auto& c = row.config;
    out << '"' << c.label() << "\"," << c.role() << ',' << c.mwit << ',' << c.mie << ',' << c.pt_layers << ','
        << variant_name(c.variant) << ',' << row.seeds_ok;
    for (const auto& [name, task] : grid_benchmarks()) {
      const auto it = row.mean.find(name);
      if (it == row.mean.end()) {
        out << ",,,,,";
        continue;
      }
      const auto& m = it->second;
      out << ',' << m.bleu1 << ',' << m.bleu << ',' << m.rouge_p << ',' << m.rouge_r << ',' << m.rouge_f1;
    }
    out << '\n';
  }
}

void write_grid_markdown(const std::filesystem::path& path, const GridResult& result) {
  auto out = open_output(path);
  out << "| Config | Role | Seeds |";
  for (const auto& [name, task] : grid_benchmarks())
    for (const char* m : {"B-1", "BLEU", "R-P", "R-R", "R-F1"}) out << ' ' << name << ' ' << m << " |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < grid_benchmarks().size() * 5; ++i) out << "---|";
  out << '\n';
  std::vector<std::string> notes;
  for (const auto& row : result.rows()) {
    out << "| " << row.config.label() << " | " << row.config.role() << " | " << row.seeds_ok << " |";
    for (const auto& [name, task] : grid_benchmarks()) {
      const auto it = row.mean.find(name);
      if (it == row.mean.end()) {
        for (int i = 0; i < 5; ++i) out << " error |";
        continue;
      }
      const auto& m = it->second;
      for (double v : {m.bleu1, m.bleu, m.rouge_p, m.rouge_r, m.rouge_f1}) out << ' ' << fixed(v) << " |";
    }
    out << '\n';
    for (const auto& e : row.errors) notes.push_back(row.config.label() + ", " + e);
  }
  if (!notes.empty()) {
    out << "\nFailed cells:\n\n";
    for (const auto& n : notes) out << "- " << n << '\n';
  }
}

}  // namespace resonance
