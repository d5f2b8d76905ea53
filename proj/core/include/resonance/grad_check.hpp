// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "resonance/tensor.hpp"

namespace resonance {

template <typename T>
struct GradCheckInput {
  std::string name;
  Tensor<T> tensor;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// "name[index]" of the worst coordinate.
  std::string worst_coordinate;
  std::size_t coordinates = 0;
};

/// Compares reverse-mode gradients of a scalar function against central
/// differences, coordinate by coordinate. The error of one coordinate is
/// |analytic - numeric| / max(1, |analytic|). Inputs must be leaves with
/// requires_grad set; their gradients are overwritten.
///
/// Throws NumericError naming the coordinate when any evaluation is non-finite.
template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>()>& function, std::vector<GradCheckInput<T>> inputs,
                           T epsilon);

}  // namespace resonance
