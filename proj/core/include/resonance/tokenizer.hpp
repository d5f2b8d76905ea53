// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "resonance/ops.hpp"

namespace resonance {

inline constexpr std::string_view kMusicPlaceholder = "<Music>";
inline constexpr std::string_view kImagePlaceholder = "<Image>";
inline constexpr std::string_view kVideoPlaceholder = "<Video>";

/// One surface unit of text: a word (run of letters/digits), a single
/// punctuation character, or a modality placeholder.
struct SurfacePiece {
  enum class Kind { kWord, kPunct, kPlaceholder };
  std::string text;
  Kind kind = Kind::kWord;
  bool space_before = false;
};

/// Surface segmentation shared by the tokenizer and the metrics.
std::vector<SurfacePiece> surface_pieces(std::string_view text);

/// Lowercased words and placeholders; punctuation dropped.
std::vector<std::string> metric_tokens(std::string_view text);

/// Word-level tokenizer. A piece preceded by whitespace is stored with a
/// leading U+2581 marker, so decode(encode(s)) == s whenever s uses single
/// spaces, all pieces are in the vocabulary and placeholders follow a space
/// (or start the text).
class Tokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kMusic = 4;
  static constexpr TokenId kImage = 5;
  static constexpr TokenId kVideo = 6;
  static constexpr std::size_t kSpecialCount = 7;

  /// Specials only.
  Tokenizer();

  /// Vocabulary from the most frequent pieces of `corpus` (ties broken by
  /// token string), capped at max_vocab including specials.
  static Tokenizer build(const std::vector<std::string>& corpus, std::size_t max_vocab);
  /// One token per line; line index is the id.
  static Tokenizer load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::vector<TokenId> encode(std::string_view text) const;
  /// Specials other than placeholders and <unk> are skipped.
  std::string decode(std::span<const TokenId> ids) const;

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<TokenId> find(const std::string& token) const;
  bool covers(std::string_view text) const;

 private:
  void add_token(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace resonance
