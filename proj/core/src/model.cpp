// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/model.hpp"

#include <algorithm>

#include "resonance/errors.hpp"
#include "resonance/tokenizer.hpp"

namespace resonance {

void ModelConfig::validate() const {
  lm.validate();
  if (d_enc == 0) throw ConfigError("d_enc must be positive");
  if (pt_layers > 0 && (fusion_heads == 0 || lm.d_model % fusion_heads != 0)) {
    throw ConfigError("d_model must be divisible by fusion_heads");
  }
  if (fusion_max_length == 0) throw ConfigError("fusion_max_length must be positive");
  if (lora_rank == 0) throw ConfigError("lora_rank must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"vocab_size", lm.vocab_size},
          {"d_model", lm.d_model},
          {"n_layers", lm.n_layers},
          {"n_heads", lm.n_heads},
          {"max_sequence_length", lm.max_sequence_length},
          {"dropout", lm.dropout},
          {"d_enc", d_enc},
          {"pt_layers", pt_layers},
          {"fusion_heads", fusion_heads},
          {"fusion_max_length", fusion_max_length},
          {"mie", mie},
          {"lora_rank", lora_rank},
          {"lora_alpha", lora_alpha}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "vocab_size") c.lm.vocab_size = value.get<std::size_t>();
      else if (key == "d_model") c.lm.d_model = value.get<std::size_t>();
      else if (key == "n_layers") c.lm.n_layers = value.get<std::size_t>();
      else if (key == "n_heads") c.lm.n_heads = value.get<std::size_t>();
      else if (key == "max_sequence_length") c.lm.max_sequence_length = value.get<std::size_t>();
      else if (key == "dropout") c.lm.dropout = value.get<double>();
      else if (key == "d_enc") c.d_enc = value.get<std::size_t>();
      else if (key == "pt_layers") c.pt_layers = value.get<std::size_t>();
      else if (key == "fusion_heads") c.fusion_heads = value.get<std::size_t>();
      else if (key == "fusion_max_length") c.fusion_max_length = value.get<std::size_t>();
      else if (key == "mie") c.mie = value.get<bool>();
      else if (key == "lora_rank") c.lora_rank = value.get<std::size_t>();
      else if (key == "lora_alpha") c.lora_alpha = value.get<double>();
      else throw ConfigError("unknown model config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("model config key '" + key + "': " + e.what());
    }
  }
  return c;
}

template <typename T>
ResonanceModel<T>::ResonanceModel(ParameterStore<T>& store, const ModelConfig& config, std::mt19937_64& rng)
    : store_(&store),
      config_((config.validate(), config)),
      adaptors_(store, config.d_enc, config.lm.d_model, rng),
      fusion_(store, config.lm.d_model, config.pt_layers, config.fusion_heads, config.fusion_max_length, rng),
      lm_(store, config.lm, rng) {}

template <typename T>
Tensor<T> ResonanceModel<T>::fused_block(const ModelInput& input, AssemblyMode mode) const {
  const bool pooled = mode == AssemblyMode::kVanilla || !config_.mie;
  const bool use_fusion = mode == AssemblyMode::kConfigured && config_.pt_layers > 0;
  std::vector<Tensor<T>> parts;
  std::vector<FusedSegment> segments;
  auto add_modality = [&](const std::optional<ClipEmbeddingSet>& set, Modality expected) {
    if (!set) return;
    if (set->modality != expected) {
      throw DataError("embedding set for " + modality_name(set->modality) + " given in the " +
                      modality_name(expected) + " slot");
    }
    Tensor<T> rows = pooled ? adaptors_.adapt(expected, embedding_tensor<T>(pool(*set))) : adaptors_.adapt(*set);
    segments.insert(segments.end(), rows.rows(), segment_of(expected));
    parts.push_back(std::move(rows));
  };
  add_modality(input.media.music, Modality::kMusic);
  add_modality(input.media.video, Modality::kVideo);
  add_modality(input.media.image, Modality::kImage);
  if (!input.text.empty()) {
    parts.push_back(lm_.embed(input.text));
    segments.insert(segments.end(), input.text.size(), FusedSegment::kText);
  }
  if (parts.empty()) return Tensor<T>::zeros({0, config_.lm.d_model});
  Tensor<T> block = parts.size() == 1 ? parts.front() : concat(parts, 0);
  if (use_fusion) return fusion_.fuse(block, segments);
  if (block.rows() > config_.fusion_max_length) {
    throw SequenceLengthError("fused block of " + std::to_string(block.rows()) + " rows exceeds fusion max length " +
                              std::to_string(config_.fusion_max_length));
  }
  return block;
}

template <typename T>
AssembledSequence<T> ResonanceModel<T>::assemble(const ModelInput& input, std::span<const TokenId> target,
                                                 AssemblyMode mode, bool allow_unconditioned) const {
  if (!allow_unconditioned && input.media.empty() && input.text.empty()) {
    throw DataError("input has no modalities and no text to condition on");
  }
  const auto vocab = static_cast<TokenId>(config_.lm.vocab_size);
  auto check_ids = [&](std::span<const TokenId> ids, const char* what) {
    for (TokenId id : ids)
      if (id < 0 || id >= vocab) throw DataError(std::string(what) + " token id " + std::to_string(id) + " outside vocabulary");
  };
  check_ids(input.text, "input text");
  check_ids(input.query, "query");
  check_ids(target, "target");

  AssembledSequence<T> out;
  Tensor<T> fused = fused_block(input, mode);
  std::vector<TokenId> query(input.query.begin(), input.query.end());
  query.push_back(Tokenizer::kBos);
  std::vector<TokenId> tgt;
  if (!target.empty()) {
    tgt.assign(target.begin(), target.end());
    tgt.push_back(Tokenizer::kEos);
  }
  out.fused_rows = fused.rows();
  out.query_rows = query.size();
  out.target_rows = tgt.size();
  std::vector<Tensor<T>> parts;
  if (fused.rows() > 0) parts.push_back(fused);
  parts.push_back(lm_.embed(query));
  if (!tgt.empty()) parts.push_back(lm_.embed(tgt));
  out.sequence.rows = parts.size() == 1 ? parts.front() : concat(parts, 0);

  const std::size_t media_rows = out.fused_rows - input.text.size();
  out.row_tokens.assign(media_rows, -1);
  out.row_tokens.insert(out.row_tokens.end(), input.text.begin(), input.text.end());
  out.row_tokens.insert(out.row_tokens.end(), query.begin(), query.end());
  out.row_tokens.insert(out.row_tokens.end(), tgt.begin(), tgt.end());
  out.sequence.roles.assign(out.fused_rows, SegmentRole::kFusedInput);
  out.sequence.roles.insert(out.sequence.roles.end(), out.query_rows, SegmentRole::kQuery);
  out.sequence.roles.insert(out.sequence.roles.end(), out.target_rows, SegmentRole::kTarget);
  out.supervision.assign(out.fused_rows + out.query_rows, false);
  out.supervision.insert(out.supervision.end(), out.target_rows, true);
  if (out.length() > config_.lm.max_sequence_length) {
    throw SequenceLengthError("assembled sequence of " + std::to_string(out.length()) +
                              " rows exceeds max_sequence_length " + std::to_string(config_.lm.max_sequence_length));
  }
  return out;
}

template <typename T>
Tensor<T> ResonanceModel<T>::logits(const AssembledSequence<T>& seq) const {
  return lm_.forward_causal(seq.sequence);
}

template <typename T>
Tensor<T> ResonanceModel<T>::target_logits(const AssembledSequence<T>& seq, std::vector<TokenId>* labels) const {
  if (seq.target_rows == 0) throw NumericError("sequence has no target rows to supervise");
  seq.sequence.validate();
  const std::size_t first = seq.length() - seq.target_rows;
  const Tensor<T> h = lm_.hidden(seq.sequence.rows);
  if (labels) labels->assign(seq.row_tokens.begin() + static_cast<std::ptrdiff_t>(first), seq.row_tokens.end());
  return lm_.project(slice(h, 0, first - 1, seq.length() - 1));
}

template <typename T>
Tensor<T> ResonanceModel<T>::loss(const ModelInput& input, std::span<const TokenId> target, AssemblyMode mode,
                                  bool allow_unconditioned) const {
  if (target.empty()) throw DataError("loss needs a non-empty target");
  const auto seq = assemble(input, target, mode, allow_unconditioned);
  std::vector<TokenId> labels;
  const Tensor<T> logits = target_logits(seq, &labels);
  return cross_entropy(logits, std::span<const TokenId>(labels), std::vector<bool>(labels.size(), true));
}

template <typename T>
TokenAccuracy ResonanceModel<T>::accuracy(const ModelInput& input, std::span<const TokenId> target,
                                          AssemblyMode mode) const {
  NoGradGuard no_grad;
  const auto seq = assemble(input, target, mode);
  std::vector<TokenId> labels;
  const Tensor<T> logits = target_logits(seq, &labels);
  TokenAccuracy acc;
  const std::size_t vocab = logits.cols();
  const auto data = logits.data();
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const auto row = data.subspan(r * vocab, vocab);
    const auto best = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
    acc.correct += best == labels[r];
    ++acc.total;
  }
  return acc;
}

template <typename T>
std::vector<TokenId> ResonanceModel<T>::generate(const ModelInput& input, const GenerationOptions& options,
                                                 AssemblyMode mode) const {
  NoGradGuard no_grad;
  const auto seq = assemble(input, {}, mode);
  GenerationOptions opts = options;
  const std::size_t room = config_.lm.max_sequence_length - seq.length();
  opts.max_new = std::min(opts.max_new, room);
  return lm_.generate(seq.sequence.rows, opts);
}

template <typename T>
std::size_t ResonanceModel<T>::attach_lora(const std::vector<std::string>& patterns, std::mt19937_64& rng) {
  return lm_.attach_lora(patterns, config_.lora_rank, config_.lora_alpha, rng);
}

template <typename T>
std::vector<std::string> ResonanceModel<T>::adaptor_parameters() const {
  return store_->match("adaptor.*");
}

template <typename T>
std::vector<std::string> ResonanceModel<T>::fusion_parameters() const {
  return store_->match("fusion.*");
}

template struct AssembledSequence<float>;
template struct AssembledSequence<double>;
template class ResonanceModel<float>;
template class ResonanceModel<double>;

}  // namespace resonance
