// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

const std::string kMomentPrefix = "adam.m/";
const std::string kVariancePrefix = "adam.v/";

bool is_captioning(TaskTag t) {
  return t == TaskTag::kM2TCaption || t == TaskTag::kI2T || t == TaskTag::kV2T;
}

}  // namespace

template <typename T>
void Adam<T>::step(ParameterStore<T>& store, const std::vector<std::string>& names) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (const auto& name : names) {
    auto& p = store.get(name);
    if (!p.tensor.has_grad()) continue;
    auto w = p.tensor.data();
    auto g = p.tensor.grad();
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() != w.size()) {
      m.assign(w.size(), T(0));
      v.assign(w.size(), T(0));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = config_.beta1 * static_cast<double>(m[i]) + (1.0 - config_.beta1) * gi;
      const double vi = config_.beta2 * static_cast<double>(v[i]) + (1.0 - config_.beta2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = config_.lr * (mi / c1) / (std::sqrt(vi / c2) + config_.eps);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
    }
  }
}

template <typename T>
void Adam<T>::save(Checkpoint& checkpoint) const {
  checkpoint.metadata["optimizer"] = {{"kind", "adam"},          {"steps", steps_},
                                      {"lr", config_.lr},        {"beta1", config_.beta1},
                                      {"beta2", config_.beta2},  {"eps", config_.eps}};
  for (const auto& [prefix, moments] : {std::pair{kMomentPrefix, &m_}, std::pair{kVariancePrefix, &v_}}) {
    for (const auto& [name, values] : *moments) {
      CheckpointTensor t;
      t.name = prefix + name;
      t.group = "optimizer";
      t.shape = {values.size()};
      t.values.assign(values.begin(), values.end());
      checkpoint.tensors.push_back(std::move(t));
    }
  }
}

template <typename T>
void Adam<T>::load(const Checkpoint& checkpoint, const ParameterStore<T>& store) {
  const auto it = checkpoint.metadata.find("optimizer");
  if (it == checkpoint.metadata.end()) throw CheckpointError("checkpoint has no optimizer state");
  steps_ = it->at("steps").get<std::size_t>();
  m_.clear();
  v_.clear();
  for (const auto& t : checkpoint.tensors) {
    if (t.group != "optimizer") continue;
    const bool moment = t.name.rfind(kMomentPrefix, 0) == 0;
    const bool variance = t.name.rfind(kVariancePrefix, 0) == 0;
    if (!moment && !variance) throw CheckpointError("unknown optimizer tensor '" + t.name + "'");
    const std::string name = t.name.substr((moment ? kMomentPrefix : kVariancePrefix).size());
    if (!store.contains(name)) throw CheckpointError("optimizer state for unknown parameter '" + name + "'");
    if (store.get(name).tensor.numel() != t.values.size()) {
      throw CheckpointError("optimizer state for '" + name + "' has " + std::to_string(t.values.size()) +
                            " values, parameter has " + std::to_string(store.get(name).tensor.numel()));
    }
    (moment ? m_ : v_)[name].assign(t.values.begin(), t.values.end());
  }
}

std::string AblationConfig::label() const {
  if (!mie && pt_layers == 0 && !mwit) return "vanilla";
  std::string s;
  auto append = [&](const std::string& part) { s += (s.empty() ? "" : "+") + part; };
  if (mwit) append("MWIT");
  if (mie) append("MIE");
  if (pt_layers > 0) append("PT-" + std::to_string(pt_layers) + "L");
  if (s.empty()) s = "vanilla";
  if (variant != TargetVariant::kFull) s += " (" + variant_name(variant) + ")";
  return s;
}

std::string AblationConfig::role() const {
  if (!mie && pt_layers == 0) return "vanilla";
  if (!mwit || !mie || variant != TargetVariant::kFull) return "";
  if (pt_layers == 0) return "alpha";
  if (pt_layers == 1) return "beta";
  return "";
}

nlohmann::json AblationConfig::to_json() const {
  return {{"mwit", mwit}, {"mie", mie}, {"pt_layers", pt_layers}, {"target_variant", variant_name(variant)}};
}

AblationConfig AblationConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("ablation config must be an object");
  AblationConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "mwit") {
        c.mwit = value.get<bool>();
      } else if (key == "mie") {
        c.mie = value.get<bool>();
      } else if (key == "pt_layers") {
        c.pt_layers = value.get<std::size_t>();
      } else if (key == "target_variant") {
        c.variant = parse_variant(value.get<std::string>());
      } else {
        throw ConfigError("unknown ablation key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("ablation key '" + key + "': " + e.what());
    }
  }
  if (c.pt_layers != 0 && c.pt_layers != 1 && c.pt_layers != 2 && c.pt_layers != 6) {
    throw ConfigError("pt_layers must be one of 0, 1, 2, 6");
  }
  return c;
}

std::vector<AblationConfig> default_ablation_grid() {
  std::vector<AblationConfig> grid;
  for (bool mwit : {false, true})
    for (bool mie : {false, true})
      for (std::size_t pt : {0, 1}) grid.push_back({mwit, mie, pt, TargetVariant::kFull});
  return grid;
}

StageConfig StageConfig::defaults(int stage) {
  StageConfig c;
  c.stage = stage;
  c.epochs = stage == 1 ? 5 : 2;
  return c;
}

void StageConfig::validate() const {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
  if (epochs == 0 && !max_steps) throw ConfigError("epochs must be positive");
}

nlohmann::json StageConfig::to_json() const {
  nlohmann::json j = {{"stage", stage}, {"epochs", epochs}, {"lr", lr}, {"batch_size", batch_size}};
  j["max_steps"] = max_steps ? nlohmann::json(*max_steps) : nlohmann::json();
  return j;
}

template <typename T>
std::vector<std::string> trainable_set(const ResonanceModel<T>& model, int stage) {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  std::vector<std::string> names = model.adaptor_parameters();
  for (auto& n : model.fusion_parameters()) names.push_back(std::move(n));
  if (stage == 2) {
    if (!model.lm().has_lora()) throw StateError("stage 2 requires LoRA adapters on the LM");
    for (auto& n : model.lm().lora_parameter_names()) names.push_back(std::move(n));
    names.push_back(model.lm().token_embedding_name());
  }
  return names;
}

TrainingExample make_example(const InstructionPair& pair, const Tokenizer& tokenizer, EmbeddingCache& cache) {
  TrainingExample ex;
  ex.id = pair.id;
  ex.task = pair.task;
  for (const auto& slot : pair.inputs) {
    const ClipEmbeddingSet& set = cache.get(slot);
    switch (slot.modality) {
      case Modality::kMusic: ex.input.media.music = set; break;
      case Modality::kVideo: ex.input.media.video = set; break;
      case Modality::kImage: ex.input.media.image = set; break;
    }
  }
  ex.input.text = tokenizer.encode(pair.input_text);
  ex.input.query = tokenizer.encode(pair.instruction);
  ex.target = tokenizer.encode(pair.target);
  return ex;
}

std::vector<InstructionPair> stage_pairs(const std::vector<InstructionPair>& pairs, int stage,
                                         const AblationConfig& ablation) {
  if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
  std::vector<InstructionPair> out;
  for (const auto& p : pairs) {
    if (p.split != Split::kTrain) continue;
    const bool multiway = p.task == TaskTag::kMI2T || p.task == TaskTag::kMV2T;
    if (is_captioning(p.task) || (stage == 2 && ablation.mwit && multiway)) out.push_back(p);
  }
  return out;
}

template <typename T>
Trainer<T>::Trainer(ResonanceModel<T>& model, StageConfig config, std::uint64_t seed)
    : model_(&model), config_(config), seed_(seed), optimizer_(AdamConfig{config.lr}) {
  config_.validate();
  trainable_ = trainable_set(model, config_.stage);
  auto& store = model.store();
  store.set_trainable_all(false);
  for (const auto& n : trainable_) store.get(n).trainable = true;
  for (auto& p : store.all()) p.tensor.set_requires_grad(p.trainable);
  store.zero_grad();
}

template <typename T>
std::vector<std::size_t> Trainer<T>::epoch_order(std::size_t epoch, std::size_t n) const {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed_ ^ (0x9E3779B97F4A7C15ULL * (epoch + 1)));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

template <typename T>
std::vector<StepRecord> Trainer<T>::run(const std::vector<TrainingExample>& data,
                                        const std::function<bool(const StepRecord&)>& stop) {
  if (data.empty()) throw DataError("training set is empty");
  std::vector<StepRecord> curve;
  auto& store = model_->store();
  auto budget_left = [&] { return !config_.max_steps || state_.step < *config_.max_steps; };
  while (state_.epoch < config_.epochs && budget_left()) {
    const auto order = epoch_order(state_.epoch, data.size());
    bool halted = false;
    while (state_.offset < data.size() && budget_left()) {
      const std::size_t end = std::min(data.size(), state_.offset + config_.batch_size);
      const T inv = T(1) / static_cast<T>(end - state_.offset);
      double total = 0.0;
      store.zero_grad();
      for (std::size_t k = state_.offset; k < end; ++k) {
        const auto& ex = data[order[k]];
        Tensor<T> loss = model_->loss(ex.input, ex.target);
        const double value = static_cast<double>(loss.item());
        if (!std::isfinite(value)) {
          throw NumericError("non-finite loss at step " + std::to_string(state_.step + 1) + " (epoch " +
                             std::to_string(state_.epoch) + ", example '" + ex.id + "')");
        }
        total += value;
        scale(loss, inv).backward();
      }
      optimizer_.step(store, trainable_);
      store.zero_grad();
      ++state_.step;
      const StepRecord rec{state_.step, state_.epoch, total / static_cast<double>(end - state_.offset)};
      state_.offset = end;
      curve.push_back(rec);
      if (stop && stop(rec)) {
        halted = true;
        break;
      }
    }
    if (state_.offset >= data.size()) {
      state_.offset = 0;
      ++state_.epoch;
    }
    if (halted) break;
  }
  return curve;
}

template <typename T>
void Trainer<T>::save(const std::filesystem::path& dir, const nlohmann::json& extra) const {
  Checkpoint cp;
  cp.metadata = extra.is_object() ? extra : nlohmann::json::object();
  cp.metadata["stage"] = config_.stage;
  cp.metadata["step"] = state_.step;
  cp.metadata["epoch"] = state_.epoch;
  cp.metadata["offset"] = state_.offset;
  cp.metadata["seed"] = seed_;
  cp.metadata["stage_config"] = config_.to_json();
  cp.metadata["model"] = model_->config().to_json();
  cp.metadata["lora"] = model_->lm().has_lora();
  capture_parameters(model_->store(), cp);
  optimizer_.save(cp);
  write_checkpoint(dir, cp);
}

template <typename T>
void Trainer<T>::resume(const std::filesystem::path& dir) {
  const Checkpoint cp = read_checkpoint(dir);
  const auto& md = cp.metadata;
  if (!md.contains("stage") || md.at("stage").get<int>() != config_.stage) {
    throw CheckpointError("checkpoint at " + dir.string() + " is not a stage-" + std::to_string(config_.stage) +
                          " checkpoint");
  }
  restore_parameters(model_->store(), cp);
  optimizer_.load(cp, model_->store());
  optimizer_.set_lr(config_.lr);
  state_.step = md.at("step").get<std::size_t>();
  state_.epoch = md.at("epoch").get<std::size_t>();
  state_.offset = md.at("offset").get<std::size_t>();
  if (md.contains("seed")) seed_ = md.at("seed").get<std::uint64_t>();
}

template <typename T>
double target_accuracy(const ResonanceModel<T>& model, const std::vector<TrainingExample>& data, AssemblyMode mode) {
  NoGradGuard guard;
  TokenAccuracy acc;
  for (const auto& ex : data) {
    const auto a = model.accuracy(ex.input, ex.target, mode);
    acc.correct += a.correct;
    acc.total += a.total;
  }
  return acc.value();
}

template class Adam<float>;
template class Adam<double>;
template class Trainer<float>;
template class Trainer<double>;
template std::vector<std::string> trainable_set(const ResonanceModel<float>&, int);
template std::vector<std::string> trainable_set(const ResonanceModel<double>&, int);
template double target_accuracy(const ResonanceModel<float>&, const std::vector<TrainingExample>&, AssemblyMode);
template double target_accuracy(const ResonanceModel<double>&, const std::vector<TrainingExample>&, AssemblyMode);

}  // namespace resonance
