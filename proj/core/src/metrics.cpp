// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>

#include "resonance/errors.hpp"
#include "resonance/training.hpp"

namespace resonance {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void add_into(MetricRow& acc, const MetricRow& row) {
  acc.bleu1 += row.bleu1;
  acc.bleu += row.bleu;
  acc.rouge_p += row.rouge_p;
  acc.rouge_r += row.rouge_r;
  acc.rouge_f1 += row.rouge_f1;
  if (row.external) {
    if (!acc.external) acc.external = std::array<double, 3>{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < 3; ++i) (*acc.external)[i] += (*row.external)[i];
  }
}

nlohmann::json metrics_json(const MetricRow& m, const std::string& external_name) {
  nlohmann::json j = {{"bleu1", m.bleu1},     {"bleu", m.bleu},         {"rouge_l_p", m.rouge_p},
                      {"rouge_l_r", m.rouge_r}, {"rouge_l_f1", m.rouge_f1}};
  if (m.external && !external_name.empty()) {
    j[external_name] = {{"p", (*m.external)[0]}, {"r", (*m.external)[1]}, {"f1", (*m.external)[2]}};
  }
  return j;
}

}  // namespace

BleuScore bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
               std::size_t max_n) {
  if (max_n == 0) throw ConfigError("BLEU order must be positive");
  if (candidate.empty()) return {0.0, true};
  const std::size_t order = std::min(max_n, candidate.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= order; ++n) {
    const NgramCounts cand = ngrams(candidate, n);
    const NgramCounts ref = ngrams(reference, n);
    std::size_t clipped = 0;
    for (const auto& [gram, count] : cand) {
      const auto it = ref.find(gram);
      if (it != ref.end()) clipped += std::min(count, it->second);
    }
    if (clipped == 0) return {0.0, true};
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(candidate.size() - n + 1));
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return {bp * std::exp(log_sum / static_cast<double>(order)), false};
}

BleuScore bleu(std::string_view candidate, std::string_view reference, std::size_t max_n) {
  return bleu(metric_tokens(candidate), metric_tokens(reference), max_n);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeL rouge_l(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  if (candidate.empty() && reference.empty()) return {0.0, 0.0, 0.0, true};
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  RougeL out;
  out.precision = candidate.empty() ? 0.0 : lcs / static_cast<double>(candidate.size());
  out.recall = reference.empty() ? 0.0 : lcs / static_cast<double>(reference.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

RougeL rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l(metric_tokens(candidate), metric_tokens(reference));
}

MetricRow score_pair(const std::string& candidate, const std::string& reference, const ExternalScorer* scorer) {
  const auto cand = metric_tokens(candidate);
  const auto ref = metric_tokens(reference);
  MetricRow row;
  row.bleu1 = bleu(cand, ref, 1).value;
  row.bleu = bleu(cand, ref, 4).value;
  const RougeL rl = rouge_l(cand, ref);
  row.rouge_p = rl.precision;
  row.rouge_r = rl.recall;
  row.rouge_f1 = rl.f1;
  if (scorer) row.external = scorer->score(candidate, reference);
  return row;
}

std::string mode_name(EvalMode m) { return m == EvalMode::kFull ? "full" : "text-only"; }

void EvalReport::aggregate_examples() {
  aggregate = {};
  scored = 0;
  failed = 0;
  for (const auto& ex : examples) {
    if (!ex.error.empty()) {
      ++failed;
      continue;
    }
    add_into(aggregate, ex.metrics);
    ++scored;
  }
  if (scored == 0) return;
  const double n = static_cast<double>(scored);
  aggregate.bleu1 /= n;
  aggregate.bleu /= n;
  aggregate.rouge_p /= n;
  aggregate.rouge_r /= n;
  aggregate.rouge_f1 /= n;
  if (aggregate.external)
    for (auto& v : *aggregate.external) v /= n;
}

template <typename T>
EvalReport evaluate(const ResonanceModel<T>& model, const Tokenizer& tokenizer,
                    const std::vector<InstructionPair>& pairs, EmbeddingCache& cache, const std::string& benchmark,
                    const EvalOptions& options) {
  EvalReport report;
  report.benchmark = benchmark;
  report.mode = options.mode;
  if (options.scorer) report.external_name = options.scorer->name;
  const std::size_t n = options.limit ? std::min(*options.limit, pairs.size()) : pairs.size();
  GenerationOptions gen;
  gen.max_new = options.max_new;
  gen.eos = Tokenizer::kEos;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pair = pairs[i];
    EvalExample ex;
    ex.id = pair.id;
    ex.task = pair.task;
    ex.reference = pair.target;
    try {
      TrainingExample item = make_example(pair, tokenizer, cache);
      if (options.mode == EvalMode::kTextOnly) item.input.media = {};
      ex.candidate = tokenizer.decode(model.generate(item.input, gen));
      ex.metrics = score_pair(ex.candidate, ex.reference, options.scorer);
    } catch (const std::exception& e) {
      ex.error = e.what();
    }
    report.examples.push_back(std::move(ex));
  }
  report.aggregate_examples();
  return report;
}

void write_report_jsonl(const std::filesystem::path& path, const EvalReport& report) {
  auto out = open_output(path);
  for (const auto& ex : report.examples) {
    nlohmann::json j = {{"id", ex.id},
                        {"task", task_name(ex.task)},
                        {"benchmark", report.benchmark},
                        {"mode", mode_name(report.mode)},
                        {"candidate", ex.candidate},
                        {"reference", ex.reference}};
    if (ex.error.empty()) {
      j["metrics"] = metrics_json(ex.metrics, report.external_name);
    } else {
      j["error"] = ex.error;
    }
    out << j.dump() << '\n';
  }
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
  auto out = open_output(path);
  std::string external;
  for (const auto& r : reports)
    if (!r.external_name.empty()) external = r.external_name;
  out << "benchmark,mode,scored,failed,bleu1,bleu,rouge_l_p,rouge_l_r,rouge_l_f1";
  if (!external.empty()) out << ',' << external << "_p," << external << "_r," << external << "_f1";
  out << '\n';
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    out << r.benchmark << ',' << mode_name(r.mode) << ',' << r.scored << ',' << r.failed << ',' << a.bleu1 << ','
        << a.bleu << ',' << a.rouge_p << ',' << a.rouge_r << ',' << a.rouge_f1;
    if (!external.empty()) {
      if (a.external) {
        out << ',' << (*a.external)[0] << ',' << (*a.external)[1] << ',' << (*a.external)[2];
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
}

RadarResult radar_normalize(const std::vector<std::vector<double>>& results) {
  RadarResult out;
  if (results.empty()) return out;
  const std::size_t axes = results.front().size();
  for (const auto& row : results)
    if (row.size() != axes) throw ShapeError("radar rows must have the same number of axes");
  out.values.assign(results.size(), std::vector<double>(axes, 0.0));
  for (std::size_t a = 0; a < axes; ++a) {
    double mx = results[0][a];
    for (const auto& row : results) mx = std::max(mx, row[a]);
    if (!(mx > 0.0)) {
      out.flagged_axes.push_back(a);
      continue;
    }
    for (std::size_t m = 0; m < results.size(); ++m) out.values[m][a] = results[m][a] / mx;
  }
  return out;
}

void write_radar_csv(const std::filesystem::path& path, const std::vector<std::string>& models,
                     const std::vector<std::string>& axes, const RadarResult& radar) {
  if (models.size() != radar.values.size()) throw ShapeError("radar model names do not match rows");
  auto out = open_output(path);
  out << "model";
  for (const auto& a : axes) out << ',' << a;
  out << '\n';
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (radar.values[m].size() != axes.size()) throw ShapeError("radar axis names do not match columns");
    out << models[m];
    for (double v : radar.values[m]) out << ',' << v;
    out << '\n';
  }
}

template EvalReport evaluate(const ResonanceModel<float>&, const Tokenizer&, const std::vector<InstructionPair>&,
                             EmbeddingCache&, const std::string&, const EvalOptions&);
template EvalReport evaluate(const ResonanceModel<double>&, const Tokenizer&, const std::vector<InstructionPair>&,
                             EmbeddingCache&, const std::string&, const EvalOptions&);

}  // namespace resonance
