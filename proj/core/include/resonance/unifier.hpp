// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0
//
// Caption unification and instruction-pair construction. The template client
// is offline and a pure function of the record; the remote client talks to a
// chat-completions endpoint and never falls back to the template.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "resonance/dataset.hpp"

namespace resonance {

/// Content blocks of a template unified caption, in output order.
struct UnifiedParts {
  std::vector<std::string> visual;    // video and image caption sentences
  std::string music;                  // music caption
  std::vector<std::string> features;  // tempo, chords, key and downbeat sentences
  std::string closing;
  std::string closing_music_only;
};

UnifiedParts template_parts(const Music4wayRecord& record);
std::string compose_unified(const UnifiedParts& parts, TargetVariant variant = TargetVariant::kFull);

/// The textual block listing captions and features, as sent to a remote
/// unifier ("- Video Caption: ..." through "------ Key: ...").
std::string caption_block(const Music4wayRecord& record);
/// Full user message of the unified-caption request.
std::string unify_prompt(const Music4wayRecord& record);
/// User message of the flexible-input triplet request.
std::string any2t_prompt(const Music4wayRecord& record);

struct Any2TTriplet {
  std::string input;
  std::string instruction;
  std::string output;
};

/// Parses "Input: ... Instruction: ... Output: ..." replies. Throws DataError.
Any2TTriplet parse_triplet(const std::string& reply);

/// Checks the placeholder rules of flexible inputs: exactly one <Music>, at
/// most one <Image> and <Video>, at least one of them, and no misspelled
/// placeholder. Returns the modalities in order; throws DataError.
std::vector<Modality> validate_any2t_input(std::string_view input);

class UnifierClient {
 public:
  virtual ~UnifierClient() = default;
  /// "template" or "remote"; recorded as the target source.
  virtual std::string name() const = 0;
  virtual std::string unify(const Music4wayRecord& record) = 0;
  virtual Any2TTriplet any2t(const Music4wayRecord& record, std::uint64_t seed) = 0;
};

class TemplateUnifier final : public UnifierClient {
 public:
  std::string name() const override { return "template"; }
  std::string unify(const Music4wayRecord& record) override;
  /// Seeded variant; modalities appear in varied positions and the
  /// instruction is a question or directive about the pairing.
  Any2TTriplet any2t(const Music4wayRecord& record, std::uint64_t seed) override;
};

struct RemoteConfig {
  /// Full URL of the chat-completions endpoint, e.g. https://host/v1/chat/completions.
  std::string endpoint;
  std::string model;
  std::string api_key_env = "UNIFIER_API_KEY";
  int max_attempts = 3;
  std::chrono::milliseconds backoff{500};
  std::chrono::seconds timeout{60};
  /// Request/response pairs are appended here as JSON lines when set.
  std::filesystem::path audit_log;
};

class RemoteUnifier final : public UnifierClient {
 public:
  /// Throws ConfigError on a malformed endpoint or when the key variable is
  /// unset.
  explicit RemoteUnifier(RemoteConfig config);

  std::string name() const override { return "remote"; }
  std::string unify(const Music4wayRecord& record) override;
  Any2TTriplet any2t(const Music4wayRecord& record, std::uint64_t seed) override;

  /// One chat completion; retries transport failures and 5xx/429 replies.
  /// Throws TransportError carrying the attempt count.
  std::string chat(const std::string& system, const std::string& user);

 private:
  RemoteConfig config_;
  std::string api_key_;
  std::string base_;
  std::string path_;
};

/// Task builders. Throw DataError when the record lacks a unified caption.
InstructionPair make_mi2t(const Music4wayRecord& record);
InstructionPair make_mv2t(const Music4wayRecord& record);
/// Validates the triplet; throws DataError when it breaks the placeholder rules.
InstructionPair make_any2t(const Music4wayRecord& record, UnifierClient& client, std::uint64_t seed);
/// Music, image and video captioning pairs with ground-truth targets.
std::vector<InstructionPair> make_captioning(const Music4wayRecord& record);

/// Recomposes a template-built MI2T/MV2T target without the named block.
/// Throws UnsupportedError for remote-built targets and other tasks.
InstructionPair make_target_variant(const InstructionPair& pair, const Music4wayRecord& record,
                                    TargetVariant variant);

struct BuildOptions {
  bool mi2t = true;
  bool mv2t = true;
  bool any2t = true;
  bool captioning = true;
  /// Applied to MI2T/MV2T targets of the train split only.
  TargetVariant variant = TargetVariant::kFull;
  std::uint64_t seed = 0;
};

struct BuildReport {
  std::vector<InstructionPair> pairs;
  /// Record ids whose flexible-input triplet failed validation, with reasons.
  std::vector<std::pair<std::string, std::string>> skipped;
};

/// Unifies captions (records are updated in place) and builds every
/// requested pair. Flexible-input pairs are built for the test split only.
BuildReport build_instructions(std::vector<Music4wayRecord>& records, UnifierClient& client,
                               const BuildOptions& options);

}  // namespace resonance
