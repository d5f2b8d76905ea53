// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

constexpr std::string_view kSpaceMarker = "\xE2\x96\x81";  // U+2581
constexpr std::array<std::string_view, 7> kSpecials = {"<pad>",          "<unk>",          "<bos>",         "<eos>",
                                                       kMusicPlaceholder, kImagePlaceholder, kVideoPlaceholder};

bool is_word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string piece_token(const SurfacePiece& p) {
  if (p.kind == SurfacePiece::Kind::kPlaceholder) return p.text;
  return p.space_before ? std::string(kSpaceMarker) + p.text : p.text;
}

}  // namespace

std::vector<SurfacePiece> surface_pieces(std::string_view text) {
  std::vector<SurfacePiece> out;
  bool space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      space = true;
      ++i;
      continue;
    }
    SurfacePiece piece;
    piece.space_before = space;
    space = false;
    bool placeholder = false;
    for (auto ph : {kMusicPlaceholder, kImagePlaceholder, kVideoPlaceholder}) {
      if (text.substr(i, ph.size()) == ph) {
        piece.text = std::string(ph);
        piece.kind = SurfacePiece::Kind::kPlaceholder;
        i += ph.size();
        placeholder = true;
        break;
      }
    }
    if (!placeholder) {
      if (is_word_char(c)) {
        std::size_t j = i;
        while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
        piece.text = std::string(text.substr(i, j - i));
        piece.kind = SurfacePiece::Kind::kWord;
        i = j;
      } else {
        piece.text = std::string(1, text[i]);
        piece.kind = SurfacePiece::Kind::kPunct;
        ++i;
      }
    }
    out.push_back(std::move(piece));
  }
  return out;
}

std::vector<std::string> metric_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& p : surface_pieces(text)) {
    if (p.kind == SurfacePiece::Kind::kPunct) continue;
    std::string t = p.text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out.push_back(std::move(t));
  }
  return out;
}

Tokenizer::Tokenizer() {
  for (auto s : kSpecials) add_token(std::string(s));
}

void Tokenizer::add_token(const std::string& token) {
  if (ids_.count(token)) throw DataError("duplicate vocabulary token: " + token);
  ids_[token] = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, std::size_t max_vocab) {
  if (max_vocab < kSpecialCount) throw ConfigError("vocabulary cap below the number of special tokens");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    for (const auto& p : surface_pieces(text)) {
      if (p.kind == SurfacePiece::Kind::kPlaceholder) continue;
      ++counts[piece_token(p)];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Tokenizer tok;
  for (const auto& [token, n] : ranked) {
    if (tok.size() >= max_vocab) break;
    if (!tok.ids_.count(token)) tok.add_token(token);
  }
  return tok;
}

Tokenizer Tokenizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  Tokenizer tok;
  tok.tokens_.clear();
  tok.ids_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (line_no < kSpecialCount && line != kSpecials[line_no]) {
      throw DataError("vocabulary line " + std::to_string(line_no + 1) + " must be special token " +
                      std::string(kSpecials[line_no]));
    }
    tok.add_token(line);
    ++line_no;
  }
  if (line_no < kSpecialCount) throw DataError("vocabulary file " + path.string() + " lacks special tokens");
  return tok;
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
}

std::vector<TokenId> Tokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& p : surface_pieces(text)) {
    auto it = ids_.find(piece_token(p));
    ids.push_back(it == ids_.end() ? kUnk : it->second);
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == kPad || id == kBos || id == kEos) continue;
    const std::string& t = token(id);
    if (id == kMusic || id == kImage || id == kVideo || id == kUnk) {
      if (!out.empty()) out += ' ';
      out += t;
    } else if (t.rfind(kSpaceMarker, 0) == 0) {
      out += ' ';
      out += t.substr(kSpaceMarker.size());
    } else {
      out += t;
    }
  }
  return out;
}

std::optional<TokenId> Tokenizer::find(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

bool Tokenizer::covers(std::string_view text) const {
  for (const auto& p : surface_pieces(text)) {
    if (!ids_.count(piece_token(p))) return false;
  }
  return true;
}

}  // namespace resonance
