// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Text-generation metrics over metric tokens (lowercased, punctuation
// dropped), per-example reports with mean aggregation, and radar
// normalization.

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resonance/dataset.hpp"
#include "resonance/model.hpp"
#include "resonance/tokenizer.hpp"

namespace resonance {

struct BleuScore {
  double value = 0.0;
  /// Set when the candidate is empty or some n-gram order has no match.
  bool zero = false;
};

/// Geometric mean of clipped n-gram precisions up to min(max_n, |candidate|)
/// times the brevity penalty. No smoothing.
BleuScore bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
               std::size_t max_n = 4);
BleuScore bleu(std::string_view candidate, std::string_view reference, std::size_t max_n = 4);

struct RougeL {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when both sides are empty.
  bool degenerate = false;
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);
RougeL rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
RougeL rouge_l(std::string_view candidate, std::string_view reference);

/// A pluggable (P, R, F1) scorer, e.g. an embedding-similarity metric.
struct ExternalScorer {
  std::string name;
  std::function<std::array<double, 3>(const std::string& candidate, const std::string& reference)> score;
};

struct MetricRow {
  double bleu1 = 0.0;
  double bleu = 0.0;
  double rouge_p = 0.0;
  double rouge_r = 0.0;
  double rouge_f1 = 0.0;
  std::optional<std::array<double, 3>> external;
};

MetricRow score_pair(const std::string& candidate, const std::string& reference,
                     const ExternalScorer* scorer = nullptr);

enum class EvalMode { kFull, kTextOnly };
std::string mode_name(EvalMode m);

struct EvalExample {
  std::string id;
  TaskTag task = TaskTag::kMI2T;
  std::string candidate;
  std::string reference;
  MetricRow metrics;
  /// Non-empty when generation or scoring failed; such rows are left out of
  /// the aggregate.
  std::string error;
};

struct EvalReport {
  std::string benchmark;
  EvalMode mode = EvalMode::kFull;
  std::vector<EvalExample> examples;
  /// Mean over the successful examples.
  MetricRow aggregate;
  std::size_t scored = 0;
  std::size_t failed = 0;
  /// Column name of the external scorer, empty when none is registered.
  std::string external_name;

  /// Recomputes `aggregate`, `scored` and `failed` from the examples.
  void aggregate_examples();
};

struct EvalOptions {
  EvalMode mode = EvalMode::kFull;
  std::size_t max_new = 160;
  /// Evaluates at most this many pairs when set.
  std::optional<std::size_t> limit;
  const ExternalScorer* scorer = nullptr;
};

/// Greedy generation per pair. Text-only mode removes every modality block
/// and keeps the input text and instruction.
template <typename T>
EvalReport evaluate(const ResonanceModel<T>& model, const Tokenizer& tokenizer,
                    const std::vector<InstructionPair>& pairs, EmbeddingCache& cache, const std::string& benchmark,
                    const EvalOptions& options = {});

/// One JSON object per example.
void write_report_jsonl(const std::filesystem::path& path, const EvalReport& report);
/// Header plus one aggregate row per report.
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);

struct RadarResult {
  std::vector<std::vector<double>> values;
  /// Axes whose maximum is not positive; emitted as zeros.
  std::vector<std::size_t> flagged_axes;
};

/// Divides each column (axis) of a model x axis matrix by its maximum.
RadarResult radar_normalize(const std::vector<std::vector<double>>& results);
void write_radar_csv(const std::filesystem::path& path, const std::vector<std::string>& models,
                     const std::vector<std::string>& axes, const RadarResult& radar);

}  // namespace resonance
