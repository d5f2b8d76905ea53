// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include "resonance/ablation.hpp"
#include "resonance/errors.hpp"
#include "unit/test_util.hpp"

using namespace resonance;
using resonance::testing::TempDir;

namespace {

GridOptions tiny_options() {
  GridOptions o = GridOptions::desk();
  o.model.lm.d_model = 16;
  o.model.lm.n_layers = 1;
  o.model.lm.n_heads = 2;
  o.model.fusion_heads = 2;
  o.model.d_enc = 16;
  o.model.lora_rank = 2;
  o.stage1.max_steps = 2;
  o.stage2.max_steps = 2;
  o.seeds = {1, 2};
  o.eval_limit = 2;
  o.max_new = 6;
  return o;
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

}  // namespace

TEST_CASE("grid options JSON round trip and validation") {
  const GridOptions o = tiny_options();
  const GridOptions back = GridOptions::from_json(o.to_json());
  CHECK(back.to_json() == o.to_json());
  CHECK_THROWS_AS(GridOptions::from_json({{"seeds", nlohmann::json::array()}}), ConfigError);
  CHECK_THROWS_AS(GridOptions::from_json({{"stage1", {{"warmup", 3}}}}), ConfigError);
  CHECK_THROWS_AS(GridOptions::from_json({{"cells", 3}}), ConfigError);
  CHECK(GridOptions::from_json({{"model", {{"d_enc", 16}}}}).model.d_enc == 16);
}

TEST_CASE("the grid emits one row per configuration, continues past failing cells and reproduces per seed") {
  TempDir dir("grid");
  const auto records = synthesize_corpus(dir.path(), {3, 30, 0.2});
  TemplateUnifier unifier;
  GridOptions options = tiny_options();
  GridData data = prepare_grid_data(records, unifier, options.configs, 3);
  CHECK(data.pairs.size() == 1);
  EncoderConfig enc;
  enc.d_enc = 16;
  EmbeddingCache cache(dir.path(), enc);

  // A no-mf configuration whose pairs were never prepared fails on its own.
  AblationConfig missing{true, true, 1, TargetVariant::kNoMusicFeatures};
  options.configs.push_back(missing);
  std::size_t seen = 0;
  const GridResult result = run_ablation_grid(data, cache, options, [&](const GridCell&) { ++seen; });
  CHECK(seen == 9 * 2);
  const auto rows = result.rows();
  REQUIRE(rows.size() == 9);
  for (std::size_t i = 0; i < 8; ++i) {
    CAPTURE(rows[i].config.label());
    CHECK(rows[i].seeds_ok == 2);
    CHECK(rows[i].mean.size() == grid_benchmarks().size());
  }
  CHECK(rows[8].seeds_ok == 0);
  CHECK(rows[8].errors.size() == 2);
  auto has = [&](const std::string& label) {
    return std::any_of(rows.begin(), rows.end(), [&](const GridRow& r) { return r.config.label() == label; });
  };
  CHECK(has("MWIT+MIE"));
  CHECK(has("MWIT+MIE+PT-1L"));
  CHECK(has("vanilla"));

  const GridCell again = run_grid_cell(data, cache, options, options.configs[7], 2);
  const GridCell& first = result.cells[7 * 2 + 1];
  REQUIRE(first.seed == 2);
  for (const auto& [name, m] : first.scores) {
    CHECK(again.scores.at(name).bleu == m.bleu);
    CHECK(again.scores.at(name).rouge_f1 == m.rouge_f1);
  }

  write_grid_csv(dir.path() / "grid.csv", result);
  write_grid_markdown(dir.path() / "grid.md", result);
  CHECK(count_lines(dir.path() / "grid.csv") == 1 + 9);
  std::ifstream md(dir.path() / "grid.md");
  std::string text((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
  CHECK(text.find("Failed cells") != std::string::npos);
  CHECK(text.find("| MWIT+MIE+PT-1L | beta | 2 |") != std::string::npos);
  CHECK(text.find("| MWIT+MIE | alpha | 2 |") != std::string::npos);
}
