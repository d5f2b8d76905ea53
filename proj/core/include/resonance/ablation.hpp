// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Ablation grid: trains and evaluates every configuration x seed cell and
// reports per-benchmark metrics averaged over seeds.

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "resonance/metrics.hpp"
#include "resonance/training.hpp"
#include "resonance/unifier.hpp"

namespace resonance {

/// Benchmarks evaluated per cell, drawn from the test split.
const std::vector<std::pair<std::string, TaskTag>>& grid_benchmarks();

struct GridOptions {
  /// Base model; mie and pt_layers are overridden per configuration.
  ModelConfig model;
  StageConfig stage1 = StageConfig::defaults(1);
  StageConfig stage2 = StageConfig::defaults(2);
  std::vector<AblationConfig> configs = default_ablation_grid();
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  /// Test pairs evaluated per benchmark.
  std::size_t eval_limit = 40;
  std::size_t max_new = 160;

  /// Small model and step budgets for a CPU run of the whole grid.
  static GridOptions desk();
  nlohmann::json to_json() const;
  /// Missing keys keep the desk() values; unknown keys raise ConfigError.
  static GridOptions from_json(const nlohmann::json& j);
};

/// Pairs for every target variant the grid needs plus the shared tokenizer.
struct GridData {
  Tokenizer tokenizer;
  std::map<TargetVariant, std::vector<InstructionPair>> pairs;
};

/// Builds the pairs of each needed variant from the same records.
GridData prepare_grid_data(const std::vector<Music4wayRecord>& records, UnifierClient& unifier,
                           const std::vector<AblationConfig>& configs, std::uint64_t build_seed,
                           std::size_t max_vocab = 8192);

struct GridCell {
  AblationConfig config;
  std::uint64_t seed = 0;
  std::map<std::string, MetricRow> scores;
  std::string error;
  double seconds = 0.0;
};

struct GridRow {
  AblationConfig config;
  std::map<std::string, MetricRow> mean;
  std::size_t seeds_ok = 0;
  std::vector<std::string> errors;
};

struct GridResult {
  std::vector<GridCell> cells;

  /// One row per configuration, in grid order.
  std::vector<GridRow> rows() const;
};

/// Trains stage 1, attaches LoRA, trains stage 2 and evaluates one cell.
GridCell run_grid_cell(const GridData& data, EmbeddingCache& cache, const GridOptions& options,
                       const AblationConfig& config, std::uint64_t seed);

/// A failing cell records its error and the grid continues.
GridResult run_ablation_grid(const GridData& data, EmbeddingCache& cache, const GridOptions& options,
                             const std::function<void(const GridCell&)>& on_cell = {});

void write_grid_csv(const std::filesystem::path& path, const GridResult& result);
void write_grid_markdown(const std::filesystem::path& path, const GridResult& result);

}  // namespace resonance
