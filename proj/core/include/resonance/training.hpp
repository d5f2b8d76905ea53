// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage training: stage 1 tunes adaptors and the fusion transformer,
// stage 2 adds LoRA factors and the LM token-embedding table. Loss is the
// masked cross-entropy over target tokens.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "resonance/checkpoint.hpp"
#include "resonance/dataset.hpp"
#include "resonance/model.hpp"
#include "resonance/tokenizer.hpp"

namespace resonance {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam without weight decay. Moments are kept per parameter name.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Updates the named parameters from their accumulated gradients.
  void step(ParameterStore<T>& store, const std::vector<std::string>& names);
  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  void save(Checkpoint& checkpoint) const;
  /// Restores moments for every name present; throws CheckpointError on a
  /// shape mismatch.
  void load(const Checkpoint& checkpoint, const ParameterStore<T>& store);

 private:
  AdamConfig config_;
  std::size_t steps_ = 0;
  std::map<std::string, std::vector<T>> m_;
  std::map<std::string, std::vector<T>> v_;
};

struct AblationConfig {
  /// Include MI2T/MV2T pairs in stage 2.
  bool mwit = true;
  bool mie = true;
  std::size_t pt_layers = 1;
  TargetVariant variant = TargetVariant::kFull;

  /// e.g. "MWIT+MIE+PT-1L", "vanilla".
  std::string label() const;
  /// "vanilla" for pooled and unfused, "alpha" for MWIT+MIE, "beta" for
  /// MWIT+MIE+PT-1L (full targets), empty otherwise.
  std::string role() const;
  nlohmann::json to_json() const;
  static AblationConfig from_json(const nlohmann::json& j);
  bool operator==(const AblationConfig&) const = default;
};

/// The default grid: MWIT x MIE x PT in {0, 1}.
std::vector<AblationConfig> default_ablation_grid();

struct StageConfig {
  int stage = 1;
  std::size_t epochs = 5;
  double lr = 1e-4;
  std::size_t batch_size = 8;
  /// Stops after this many optimizer steps when set.
  std::optional<std::size_t> max_steps;

  static StageConfig defaults(int stage);
  void validate() const;
  nlohmann::json to_json() const;
};

/// Trainable parameter names of a stage. Stage 2 requires attached LoRA
/// adapters and throws StateError otherwise.
template <typename T>
std::vector<std::string> trainable_set(const ResonanceModel<T>& model, int stage);

struct TrainingExample {
  std::string id;
  TaskTag task = TaskTag::kMI2T;
  ModelInput input;
  std::vector<TokenId> target;
};

/// Tokenizes the pair and fetches its embedding sets.
TrainingExample make_example(const InstructionPair& pair, const Tokenizer& tokenizer, EmbeddingCache& cache);

/// Train-split pairs of a stage: captioning pairs, plus MI2T/MV2T in stage 2
/// when mwit is set. Proportional concatenation in input order.
std::vector<InstructionPair> stage_pairs(const std::vector<InstructionPair>& pairs, int stage,
                                         const AblationConfig& ablation);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
};

/// Position of a run inside its schedule; enough to resume exactly.
struct TrainerState {
  std::size_t step = 0;
  std::size_t epoch = 0;
  /// Examples of the current epoch already consumed.
  std::size_t offset = 0;
};

template <typename T>
class Trainer {
 public:
  Trainer(ResonanceModel<T>& model, StageConfig config, std::uint64_t seed);

  /// Runs until the stage's epochs or max_steps are exhausted, or until
  /// `stop` returns true after a step. Throws NumericError on a non-finite
  /// loss, naming the step and example.
  std::vector<StepRecord> run(const std::vector<TrainingExample>& data,
                              const std::function<bool(const StepRecord&)>& stop = {});

  const TrainerState& state() const { return state_; }
  const std::vector<std::string>& trainable() const { return trainable_; }
  const StageConfig& config() const { return config_; }

  /// Parameters, optimizer moments and schedule position.
  void save(const std::filesystem::path& dir, const nlohmann::json& extra = nlohmann::json::object()) const;
  /// Restores a checkpoint written by save(); throws CheckpointError on a
  /// stage or shape mismatch.
  void resume(const std::filesystem::path& dir);

 private:
  std::vector<std::size_t> epoch_order(std::size_t epoch, std::size_t n) const;

  ResonanceModel<T>* model_;
  StageConfig config_;
  std::uint64_t seed_;
  std::vector<std::string> trainable_;
  Adam<T> optimizer_;
  TrainerState state_;
};

/// Mean teacher-forced accuracy over all target tokens of the examples.
template <typename T>
double target_accuracy(const ResonanceModel<T>& model, const std::vector<TrainingExample>& data,
                       AssemblyMode mode = AssemblyMode::kConfigured);

extern template class Adam<float>;
extern template class Adam<double>;
extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace resonance
