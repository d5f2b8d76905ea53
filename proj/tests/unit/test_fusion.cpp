// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "resonance/errors.hpp"
#include "resonance/fusion.hpp"
#include "resonance/grad_check.hpp"
#include "test_util.hpp"

using namespace resonance;
using resonance::testing::random_tensor;

namespace {

ClipEmbeddingSet random_set(Modality m, std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  ClipEmbeddingSet s{m, n, dim, std::vector<double>(n * dim)};
  for (auto& v : s.matrix) v = dist(rng);
  return s;
}

double delta_norm(const Tensor<double>& a, const Tensor<double>& b, std::size_t row) {
  double acc = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    const double d = a.data()[row * a.cols() + c] - b.data()[row * b.cols() + c];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("identity-initialized square adaptor passes rows through") {
  ParameterStore<double> store;
  std::mt19937_64 rng(1);
  ModalityAdaptors<double> adaptors(store, 6, 6, rng);
  auto w = store.get("adaptor.music.weight").tensor.data();
  std::fill(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < 6; ++i) w[i * 6 + i] = 1.0;
  const auto set = random_set(Modality::kMusic, 3, 6, rng);
  const Tensor<double> out = adaptors.adapt(set);
  REQUIRE(out.shape() == Shape{3, 6});
  for (std::size_t i = 0; i < set.matrix.size(); ++i) CHECK(out.data()[i] == set.matrix[i]);
}

TEST_CASE("adaptor shapes, registration and errors") {
  ParameterStore<double> store;
  std::mt19937_64 rng(2);
  ModalityAdaptors<double> adaptors(store, 8, 4, rng, {Modality::kMusic, Modality::kVideo});
  CHECK(store.contains("adaptor.music.weight"));
  CHECK(store.contains("adaptor.video.bias"));
  CHECK_FALSE(adaptors.has(Modality::kImage));
  CHECK(adaptors.adapt(random_set(Modality::kMusic, 4, 8, rng)).shape() == Shape{4, 4});
  CHECK_THROWS_AS(adaptors.adapt(random_set(Modality::kImage, 1, 8, rng)), ConfigError);
  CHECK_THROWS_AS(adaptors.adapt(random_set(Modality::kVideo, 2, 5, rng)), ShapeError);
}

TEST_CASE("gradient check through adapt at 64-bit") {
  ParameterStore<double> store;
  std::mt19937_64 rng(3);
  ModalityAdaptors<double> adaptors(store, 5, 4, rng);
  const auto set = random_set(Modality::kVideo, 3, 5, rng);
  const Tensor<double> probe = random_tensor<double>({3, 4}, rng, 1.0, false);
  auto f = [&] { return sum(multiply(gelu(adaptors.adapt(set)), probe)); };
  std::vector<GradCheckInput<double>> inputs;
  for (auto& p : store.all()) inputs.push_back({p.name, p.tensor});
  const auto r = grad_check<double>(f, inputs, 1e-6);
  INFO("worst: ", r.worst_coordinate);
  CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("zero fusion layers is the exact identity") {
  ParameterStore<double> store;
  std::mt19937_64 rng(4);
  FusionTransformer<double> fusion(store, 8, 0, 2, 32, rng);
  CHECK(store.all().empty());
  const Tensor<double> x = random_tensor<double>({5, 8}, rng);
  const std::vector<FusedSegment> seg(5, FusedSegment::kText);
  const Tensor<double> y = fusion.fuse(x, seg);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("fusion preserves length over 4 + 4 + 4 + 5 rows") {
  ParameterStore<double> store;
  std::mt19937_64 rng(5);
  FusionTransformer<double> fusion(store, 8, 1, 2, 32, rng);
  std::vector<FusedSegment> seg;
  seg.insert(seg.end(), 4, FusedSegment::kMusic);
  seg.insert(seg.end(), 4, FusedSegment::kVideo);
  seg.insert(seg.end(), 4, FusedSegment::kImage);
  seg.insert(seg.end(), 5, FusedSegment::kText);
  CHECK(fusion.fuse(random_tensor<double>({17, 8}, rng), seg).rows() == 17);
  CHECK_THROWS_AS(fusion.fuse(random_tensor<double>({16, 8}, rng), seg), ShapeError);
}

TEST_CASE("fusion rejects blocks longer than its maximum") {
  ParameterStore<double> store;
  std::mt19937_64 rng(6);
  FusionTransformer<double> fusion(store, 8, 1, 2, 4, rng);
  const std::vector<FusedSegment> seg(5, FusedSegment::kMusic);
  CHECK_THROWS_AS(fusion.fuse(random_tensor<double>({5, 8}, rng), seg), SequenceLengthError);
}

TEST_CASE("first fused row responds to a perturbation of the last row") {
  std::size_t fired = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    ParameterStore<double> store;
    std::mt19937_64 rng(1000 + trial);
    FusionTransformer<double> fusion(store, 8, 1, 2, 16, rng);
    const std::size_t n = 2 + trial % 9;
    const std::vector<FusedSegment> seg(n, FusedSegment::kMusic);
    Tensor<double> x = random_tensor<double>({n, 8}, rng, 1.0, false);
    const Tensor<double> base = fusion.fuse(x, seg);
    Tensor<double> y = x.detach();
    std::normal_distribution<double> dist;
    for (std::size_t c = 0; c < 8; ++c) y.data()[(n - 1) * 8 + c] += dist(rng);
    if (delta_norm(base, fusion.fuse(y, seg), 0) > 1e-8) ++fired;
  }
  CHECK(fired >= 99);
}
