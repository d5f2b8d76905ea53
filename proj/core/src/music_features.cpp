// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/music_features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <unsupported/Eigen/FFT>

#include "resonance/errors.hpp"

namespace resonance {

namespace {

constexpr std::array<const char*, 12> kPitchNames = {"C", "C#", "D", "D#", "E", "F",
                                                     "F#", "G", "G#", "A", "A#", "B"};
constexpr std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                  2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
constexpr std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                  2.54, 4.75, 3.98, 2.69, 3.34, 3.17};
constexpr double kChromaMinHz = 100.0;
constexpr double kChromaMaxHz = 2000.0;

double frames_per_second(std::size_t hop, double sample_rate) { return sample_rate / static_cast<double>(hop); }

// Linear interpolation of v at fractional index x; zero outside.
double interp(const std::vector<double>& v, double x) {
  if (x < 0.0 || x > static_cast<double>(v.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(x);
  if (i + 1 >= v.size()) return v[i];
  const double f = x - static_cast<double>(i);
  return v[i] * (1.0 - f) + v[i + 1] * f;
}

struct Peak {
  double lag;
  double height;
};

// Parabolic refinement of a local maximum at integer index l.
Peak refine(const std::vector<double>& r, std::size_t l) {
  const double a = r[l - 1], b = r[l], c = r[l + 1];
  const double denom = a - 2.0 * b + c;
  double delta = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
  delta = std::clamp(delta, -0.5, 0.5);
  return {static_cast<double>(l) + delta, b - 0.25 * (a - c) * delta};
}

bool is_local_max(const std::vector<double>& r, std::size_t l) {
  return l >= 1 && l + 1 < r.size() && r[l] > r[l - 1] && r[l] >= r[l + 1];
}

// Least-squares period from the peaks near successive multiples of tau0.
double harmonic_period(const std::vector<double>& r, double tau0, double limit) {
  double num = 0.0, den = 0.0, tau = tau0;
  for (int m = 1;; ++m) {
    const double centre = m * tau;
    if (centre + 2.0 >= limit) break;
    const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(centre - 2.0)));
    const auto hi = static_cast<std::size_t>(std::ceil(centre + 2.0));
    std::size_t best = 0;
    for (std::size_t l = lo; l <= hi && l + 1 < r.size(); ++l) {
      if (is_local_max(r, l) && r[l] > 0.0 && (best == 0 || r[l] > r[best])) best = l;
    }
    if (best == 0) {
      if (m == 1) return tau0;
      continue;
    }
    const Peak p = m == 1 ? Peak{tau0, r[best]} : refine(r, best);
    num += m * p.lag;
    den += static_cast<double>(m) * m;
    tau = num / den;
  }
  return den > 0.0 ? num / den : tau0;
}

std::array<double, 12> rotate(const std::array<double, 12>& profile, std::size_t tonic) {
  std::array<double, 12> out{};
  for (std::size_t p = 0; p < 12; ++p) out[p] = profile[(p + 12 - tonic) % 12];
  return out;
}

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 12.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / 12.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::array<double, 12> triad_template(int index) {
  std::array<double, 12> t{};
  const int root = index % 12;
  const int third = index < 12 ? 4 : 3;
  t[root] = t[(root + third) % 12] = t[(root + 7) % 12] = 1.0;
  return t;
}

// ---- nested-list text -------------------------------------------------------

struct Value {
  enum class Kind { kNumber, kString, kList } kind = Kind::kNumber;
  double number = 0.0;
  std::string text;
  std::vector<Value> items;
};

class ListParser {
 public:
  explicit ListParser(std::string_view s) : s_(s) {}

  Value parse_all() {
    Value v = parse_value();
    skip_space();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("feature text: " + what + " at offset " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
  }
  void skip_space() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }
  Value parse_value() {
    skip_space();
    if (pos_ >= s_.size()) fail("unexpected end");
    Value v;
    if (s_[pos_] == '[') {
      v.kind = Value::Kind::kList;
      ++pos_;
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      for (;;) {
        v.items.push_back(parse_value());
        skip_space();
        if (pos_ >= s_.size()) fail("unterminated list");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        fail("expected ',' or ']'");
      }
    }
    if (s_[pos_] == '\'') {
      const auto close = s_.find('\'', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated string");
      v.kind = Value::Kind::kString;
      v.text = std::string(s_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return v;
    }
    const char* begin = s_.data() + pos_;
    const auto res = std::from_chars(begin, s_.data() + s_.size(), v.number);
    if (res.ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(res.ptr - begin);
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

const std::vector<Value>& as_list(const Value& v, std::size_t arity, const char* what) {
  if (v.kind != Value::Kind::kList || (arity && v.items.size() != arity)) {
    throw DataError(std::string("feature text: malformed ") + what + " entry");
  }
  return v.items;
}

double as_number(const Value& v, const char* what) {
  if (v.kind != Value::Kind::kNumber) throw DataError(std::string("feature text: ") + what + " must be numeric");
  return v.number;
}

std::string render_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

}  // namespace

// ---- signal front end -------------------------------------------------------

Spectrogram spectrogram(const RawMusic& music, std::size_t frame, std::size_t hop) {
  music.validate();
  if (hop == 0 || hop >= frame) throw DataError("spectrogram needs frame > hop > 0");
  if (music.samples.size() < frame) {
    throw DataError("audio of " + std::to_string(music.samples.size()) + " samples is shorter than one frame (" +
                    std::to_string(frame) + ")");
  }
  Spectrogram spec;
  spec.frame = frame;
  spec.hop = hop;
  spec.sample_rate = music.sample_rate;
  const std::size_t n = music.samples.size();
  const std::size_t frames = 1 + n / hop;
  std::vector<double> window(frame);
  for (std::size_t i = 0; i < frame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(frame));
  }
  Eigen::FFT<double> fft;
  std::vector<double> buf(frame);
  std::vector<std::complex<double>> out;
  spec.magnitude.resize(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t * hop) - static_cast<std::ptrdiff_t>(frame / 2);
    for (std::size_t i = 0; i < frame; ++i) {
      const auto s = start + static_cast<std::ptrdiff_t>(i);
      buf[i] = (s >= 0 && static_cast<std::size_t>(s) < n) ? music.samples[static_cast<std::size_t>(s)] * window[i] : 0.0;
    }
    fft.fwd(out, buf);
    auto& mag = spec.magnitude[t];
    mag.resize(frame / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(out[k]);
  }
  return spec;
}

std::vector<double> onset_envelope(const Spectrogram& spec) {
  const std::size_t lag = std::max<std::size_t>(1, spec.frame / spec.hop);
  std::vector<std::vector<double>> logmag(spec.frames());
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    logmag[t].resize(spec.magnitude[t].size());
    for (std::size_t k = 0; k < logmag[t].size(); ++k) logmag[t][k] = std::log1p(spec.magnitude[t][k]);
  }
  std::vector<double> env(spec.frames(), 0.0);
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    double flux = 0.0;
    for (std::size_t k = 0; k < logmag[t].size(); ++k) {
      const double prev = t >= lag ? logmag[t - lag][k] : 0.0;
      flux += std::max(0.0, logmag[t][k] - prev);
    }
    env[t] = flux;
  }
  return env;
}

std::vector<double> onset_envelope(const RawMusic& music, std::size_t frame, std::size_t hop) {
  return onset_envelope(spectrogram(music, frame, hop));
}

// ---- tempo ------------------------------------------------------------------

TempoEstimate estimate_tempo(const std::vector<double>& envelope, std::size_t hop, double sample_rate, std::size_t k) {
  if (hop == 0 || !(sample_rate > 0.0)) throw DataError("estimate_tempo needs a positive hop and sample rate");
  const double fps = frames_per_second(hop, sample_rate);
  const double min_frames = 4.0 * fps;  // four beats at 60 BPM
  if (static_cast<double>(envelope.size()) < min_frames) {
    throw DataError("onset envelope of " + std::to_string(envelope.size()) + " frames covers fewer than four beats at 60 BPM");
  }
  if (k == 0) k = 1;
  TempoEstimate flat{{{120.0, 1.0}}, true};

  const std::size_t n = envelope.size();
  const double mean = std::accumulate(envelope.begin(), envelope.end(), 0.0) / static_cast<double>(n);
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = envelope[i] - mean;
  std::vector<double> r(n, 0.0);
  for (std::size_t l = 0; l < n; ++l) {
    double acc = 0.0;
    for (std::size_t i = 0; i + l < n; ++i) acc += e[i] * e[i + l];
    r[l] = acc / static_cast<double>(n);
  }
  if (!(r[0] > 1e-12)) return flat;
  for (std::size_t l = 1; l < n; ++l) r[l] /= r[0];
  r[0] = 1.0;

  const double lag_min = 60.0 * fps / kMaxTempoBpm;
  const double lag_max = 60.0 * fps / kMinTempoBpm;
  struct Scored {
    double tau;
    double score;
  };
  std::vector<Scored> found;
  const auto first = static_cast<std::size_t>(std::max(1.0, std::floor(lag_min)));
  const auto last = static_cast<std::size_t>(std::min(std::ceil(lag_max), static_cast<double>(n - 2)));
  for (std::size_t l = first; l <= last; ++l) {
    if (!is_local_max(r, l) || r[l] <= 0.0) continue;
    const Peak p = refine(r, l);
    if (p.lag < lag_min || p.lag > lag_max) continue;
    double penalty = 0.0;
    for (int m = 2; m <= 4; ++m) {
      const double sub = p.lag / m;
      if (sub < lag_min) break;
      penalty = std::max(penalty, interp(r, sub));
      for (auto j = static_cast<std::size_t>(std::floor(sub - 1.0)); j <= static_cast<std::size_t>(std::ceil(sub + 1.0)); ++j) {
        if (j < n && static_cast<double>(j) >= lag_min) penalty = std::max(penalty, r[j]);
      }
    }
    const double score = p.height - penalty;
    if (score <= 0.0) continue;
    found.push_back({harmonic_period(r, p.lag, static_cast<double>(n) / 2.0), score});
  }
  if (found.empty()) return flat;
  std::stable_sort(found.begin(), found.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  if (found.size() > k) found.resize(k);
  double total = 0.0;
  for (const auto& f : found) total += f.score;
  TempoEstimate est;
  for (const auto& f : found) est.candidates.push_back({60.0 * fps / f.tau, f.score / total});
  return est;
}

// ---- chroma, chords, key ----------------------------------------------------

std::vector<ChromaFrame> chromagram(const Spectrogram& spec) {
  const std::size_t bins = spec.frame / 2 + 1;
  std::vector<int> pitch_class(bins, -1);
  for (std::size_t b = 1; b < bins; ++b) {
    const double f = static_cast<double>(b) * spec.sample_rate / static_cast<double>(spec.frame);
    if (f < kChromaMinHz || f > kChromaMaxHz) continue;
    const double midi = 69.0 + 12.0 * std::log2(f / 440.0);
    pitch_class[b] = static_cast<int>(((static_cast<long>(std::lround(midi)) % 12) + 12) % 12);
  }
  std::vector<ChromaFrame> chroma(spec.frames());
  for (std::size_t t = 0; t < spec.frames(); ++t) {
    ChromaFrame c{};
    for (std::size_t b = 0; b < bins; ++b) {
      if (pitch_class[b] >= 0) c[static_cast<std::size_t>(pitch_class[b])] += spec.magnitude[t][b] * spec.magnitude[t][b];
    }
    const double mx = *std::max_element(c.begin(), c.end());
    if (mx > 0.0)
      for (auto& v : c) v /= mx;
    chroma[t] = c;
  }
  return chroma;
}

std::vector<ChromaFrame> chromagram(const RawMusic& music, std::size_t frame, std::size_t hop) {
  return chromagram(spectrogram(music, frame, hop));
}

std::string chord_label(int index) {
  if (index < 0 || index > 24) throw std::out_of_range("chord index " + std::to_string(index));
  if (index == 24) return "N";
  return std::string(kPitchNames[static_cast<std::size_t>(index % 12)]) + (index < 12 ? ":maj" : ":min");
}

std::optional<int> chord_index(std::string_view label) {
  for (int i = 0; i <= 24; ++i)
    if (chord_label(i) == label) return i;
  return std::nullopt;
}

std::vector<ChordSegment> detect_chords(const std::vector<ChromaFrame>& chroma, std::size_t hop, double sample_rate,
                                        std::optional<double> duration, double switch_penalty) {
  const double step = static_cast<double>(hop) / sample_rate;
  std::vector<ChordSegment> out;
  if (chroma.empty()) return out;
  constexpr int kStates = 25;
  std::array<std::array<double, 12>, 24> templates;
  for (int i = 0; i < 24; ++i) templates[static_cast<std::size_t>(i)] = triad_template(i);

  const std::size_t frames = chroma.size();
  std::vector<std::array<double, kStates>> score(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    double norm = 0.0;
    for (double v : chroma[t]) norm += v * v;
    norm = std::sqrt(norm);
    for (int s = 0; s < 24; ++s) {
      double dot = 0.0;
      for (std::size_t p = 0; p < 12; ++p) dot += chroma[t][p] * templates[static_cast<std::size_t>(s)][p];
      score[t][static_cast<std::size_t>(s)] = norm > 0.0 ? dot / (norm * std::sqrt(3.0)) : 0.0;
    }
    // 'N' wins exactly when every template scores below the threshold.
    score[t][24] = std::nextafter(kChordThreshold, 0.0);
  }

  std::vector<std::array<int, kStates>> back(frames);
  std::array<double, kStates> acc = score[0];
  for (std::size_t t = 1; t < frames; ++t) {
    int best_prev = 0;
    for (int s = 1; s < kStates; ++s)
      if (acc[static_cast<std::size_t>(s)] > acc[static_cast<std::size_t>(best_prev)]) best_prev = s;
    std::array<double, kStates> next{};
    for (int s = 0; s < kStates; ++s) {
      const double stay = acc[static_cast<std::size_t>(s)];
      const double jump = acc[static_cast<std::size_t>(best_prev)] - switch_penalty;
      const bool do_jump = best_prev != s && jump > stay;
      back[t][static_cast<std::size_t>(s)] = do_jump ? best_prev : s;
      next[static_cast<std::size_t>(s)] = (do_jump ? jump : stay) + score[t][static_cast<std::size_t>(s)];
    }
    acc = next;
  }
  std::vector<int> path(frames);
  path[frames - 1] = static_cast<int>(std::max_element(acc.begin(), acc.end()) - acc.begin());
  for (std::size_t t = frames - 1; t > 0; --t) path[t - 1] = back[t][static_cast<std::size_t>(path[t])];

  std::size_t begin = 0;
  for (std::size_t t = 1; t <= frames; ++t) {
    if (t < frames && path[t] == path[begin]) continue;
    double end = static_cast<double>(t) * step;
    if (duration) end = std::min(end, *duration);
    const double start = static_cast<double>(begin) * step;
    if (end > start) out.push_back({start, end, chord_label(path[begin])});
    begin = t;
  }
  return out;
}

std::size_t KeyDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probabilities.begin(), probabilities.end()) - probabilities.begin());
}

std::string key_name(std::size_t index) {
  if (index >= 24) throw std::out_of_range("key index " + std::to_string(index));
  return std::string(kPitchNames[index % 12]) + (index < 12 ? " major" : " minor");
}

KeyDistribution estimate_key(const std::vector<ChromaFrame>& chroma) {
  std::array<double, 12> total{};
  for (const auto& c : chroma)
    for (std::size_t p = 0; p < 12; ++p) total[p] += c[p];
  KeyDistribution dist;
  if (*std::max_element(total.begin(), total.end()) <= 0.0) {
    dist.probabilities.fill(1.0 / 24.0);
    return dist;
  }
  std::array<double, 24> corr{};
  for (std::size_t k = 0; k < 12; ++k) {
    corr[k] = pearson(total, rotate(kMajorProfile, k));
    corr[12 + k] = pearson(total, rotate(kMinorProfile, k));
  }
  const double mx = *std::max_element(corr.begin(), corr.end());
  double z = 0.0;
  for (std::size_t i = 0; i < 24; ++i) z += std::exp(corr[i] - mx);
  for (std::size_t i = 0; i < 24; ++i) dist.probabilities[i] = std::exp(corr[i] - mx) / z;
  return dist;
}

// ---- downbeats --------------------------------------------------------------

DownbeatTrack track_downbeats(const std::vector<double>& envelope, const TempoEstimate& tempo, std::size_t hop,
                              double sample_rate, int meter) {
  DownbeatTrack track;
  if (meter < 1) throw ConfigError("meter must be positive");
  if (tempo.low_confidence || tempo.candidates.empty() || envelope.empty()) {
    track.low_confidence = true;
    return track;
  }
  const double fps = frames_per_second(hop, sample_rate);
  const double period = 60.0 * fps / tempo.candidates.front().bpm;
  const double last = static_cast<double>(envelope.size() - 1);

  double best_phase = 0.0, best_energy = -1.0;
  const int steps = std::max(1, static_cast<int>(std::ceil(period / 0.05)));
  for (int s = 0; s < steps; ++s) {
    const double phase = period * s / steps;
    double energy = 0.0;
    int count = 0;
    for (double x = phase; x <= last; x += period, ++count) energy += interp(envelope, x);
    if (count > 0 && energy / count > best_energy) {
      best_energy = energy / count;
      best_phase = phase;
    }
  }

  std::vector<double> positions, strength;
  for (double x = best_phase; x <= last; x += period) {
    positions.push_back(x);
    double local = 0.0;
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(x - 1.0)));
    const auto hi = static_cast<std::size_t>(std::min(last, std::ceil(x + 1.0)));
    for (std::size_t j = lo; j <= hi; ++j) local = std::max(local, envelope[j]);
    strength.push_back(local);
  }
  int bar_offset = 0;
  double best_bar = -1.0;
  for (int o = 0; o < meter; ++o) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t b = static_cast<std::size_t>(o); b < strength.size(); b += static_cast<std::size_t>(meter)) {
      sum += strength[b];
      ++count;
    }
    if (count > 0 && sum / count > best_bar) {
      best_bar = sum / count;
      bar_offset = o;
    }
  }
  for (std::size_t b = 0; b < positions.size(); ++b) {
    const int pos = static_cast<int>((static_cast<int>(b) - bar_offset) % meter + meter) % meter + 1;
    track.beats.push_back({positions[b] / fps, pos});
  }
  return track;
}

FeatureExtraction extract_features(const RawMusic& music, std::size_t frame, std::size_t hop) {
  const Spectrogram spec = spectrogram(music, frame, hop);
  const auto env = onset_envelope(spec);
  const auto chroma = chromagram(spec);
  FeatureExtraction out;
  const TempoEstimate tempo = estimate_tempo(env, hop, music.sample_rate);
  const DownbeatTrack beats = track_downbeats(env, tempo, hop, music.sample_rate);
  out.features.tempo = tempo.candidates;
  out.features.chords = detect_chords(chroma, hop, music.sample_rate, music.duration());
  out.features.downbeats = beats.beats;
  out.features.key = estimate_key(chroma);
  out.tempo_low_confidence = tempo.low_confidence;
  out.downbeats_low_confidence = beats.low_confidence;
  return out;
}

// ---- text -------------------------------------------------------------------

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value < 0 ? "-inf" : "inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  std::string sign;
  if (sci[0] == '-') {
    sign = "-";
    sci.erase(0, 1);
  }
  const auto e_pos = sci.find('e');
  std::string digits = sci.substr(0, e_pos);
  digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());
  const int exponent = std::stoi(sci.substr(e_pos + 1));
  if (exponent >= -4 && exponent < 16) {
    std::string out;
    if (exponent < 0) {
      out = "0." + std::string(static_cast<std::size_t>(-exponent - 1), '0') + digits;
    } else {
      const auto int_len = static_cast<std::size_t>(exponent) + 1;
      if (digits.size() <= int_len) {
        out = digits + std::string(int_len - digits.size(), '0') + ".0";
      } else {
        out = digits.substr(0, int_len) + "." + digits.substr(int_len);
      }
    }
    return sign + out;
  }
  std::string mant = digits.substr(0, 1);
  if (digits.size() > 1) mant += "." + digits.substr(1);
  const int mag = std::abs(exponent);
  return sign + mant + "e" + (exponent < 0 ? "-" : "+") + (mag < 10 ? "0" : "") + std::to_string(mag);
}

std::string textualize_features(const MusicFeatures& f) {
  std::vector<std::string> tempo, chords, beats, key;
  for (const auto& c : f.tempo) tempo.push_back(render_list({format_real(c.bpm), format_real(c.strength)}));
  for (const auto& c : f.chords) {
    chords.push_back(render_list({format_real(c.start), format_real(c.end), "'" + c.label + "'"}));
  }
  for (const auto& b : f.downbeats) beats.push_back(render_list({format_real(b.time), format_real(b.position)}));
  for (double p : f.key.probabilities) key.push_back(format_real(p));
  return "Tempo: " + render_list(tempo) + "\nChords: " + render_list(chords) + "\nDownbeats: " + render_list(beats) +
         "\nKey: " + render_list({render_list(key)});
}

MusicFeatures parse_features(std::string_view text) {
  static constexpr std::array<std::string_view, 4> kPrefixes = {"Tempo: ", "Chords: ", "Downbeats: ", "Key: "};
  std::array<std::string_view, 4> bodies;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto eol = text.find('\n', pos);
    const auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    if (line.substr(0, kPrefixes[i].size()) != kPrefixes[i]) {
      throw DataError("feature text line " + std::to_string(i + 1) + " must start with '" + std::string(kPrefixes[i]) + "'");
    }
    bodies[i] = line.substr(kPrefixes[i].size());
    if (i < 3 && eol == std::string_view::npos) throw DataError("feature text has fewer than four lines");
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
  }
  if (pos < text.size() && text.substr(pos).find_first_not_of('\n') != std::string_view::npos) {
    throw DataError("feature text has trailing content");
  }
  const Value tempo = ListParser(bodies[0]).parse_all();
  const Value chords = ListParser(bodies[1]).parse_all();
  const Value beats = ListParser(bodies[2]).parse_all();
  const Value key = ListParser(bodies[3]).parse_all();
  MusicFeatures f;
  for (const auto& item : as_list(tempo, 0, "tempo")) {
    const auto& v = as_list(item, 2, "tempo");
    f.tempo.push_back({as_number(v[0], "bpm"), as_number(v[1], "strength")});
  }
  for (const auto& item : as_list(chords, 0, "chords")) {
    const auto& v = as_list(item, 3, "chord");
    if (v[2].kind != Value::Kind::kString || !chord_index(v[2].text)) throw DataError("feature text: bad chord label");
    f.chords.push_back({as_number(v[0], "chord start"), as_number(v[1], "chord end"), v[2].text});
  }
  for (const auto& item : as_list(beats, 0, "downbeats")) {
    const auto& v = as_list(item, 2, "downbeat");
    const double position = as_number(v[1], "beat position");
    if (position != std::floor(position) || position < 1) throw DataError("feature text: beat position must be a positive integer");
    f.downbeats.push_back({as_number(v[0], "beat time"), static_cast<int>(position)});
  }
  const auto& outer = as_list(key, 1, "key");
  const auto& probs = as_list(outer[0], 24, "key");
  for (std::size_t i = 0; i < 24; ++i) f.key.probabilities[i] = as_number(probs[i], "key probability");
  return f;
}

}  // namespace resonance
