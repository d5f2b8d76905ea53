// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/grad_check.hpp"

#include <cmath>

namespace resonance {

namespace {

template <typename T>
T evaluate(const std::function<Tensor<T>()>& function, const std::string& where) {
  NoGradGuard no_grad;
  const T v = function().item();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value at " + where);
  return v;
}

}  // namespace

template <typename T>
GradCheckResult grad_check(const std::function<Tensor<T>()>& function, std::vector<GradCheckInput<T>> inputs,
                           T epsilon) {
  for (auto& in : inputs) {
    in.tensor.set_requires_grad(true);
    in.tensor.zero_grad();
  }
  Tensor<T> root = function();
  if (!std::isfinite(root.item())) throw NumericError("grad_check: non-finite function value at the base point");
  root.backward();

  GradCheckResult result;
  for (auto& in : inputs) {
    auto values = in.tensor.data();
    std::vector<T> analytic(in.tensor.grad().begin(), in.tensor.grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::string where = in.name + "[" + std::to_string(i) + "]";
      if (!std::isfinite(analytic[i])) throw NumericError("grad_check: non-finite analytic gradient at " + where);
      const T saved = values[i];
      values[i] = saved + epsilon;
      const T plus = evaluate(function, where);
      values[i] = saved - epsilon;
      const T minus = evaluate(function, where);
      values[i] = saved;
      const double numeric = (static_cast<double>(plus) - static_cast<double>(minus)) / (2.0 * epsilon);
      const double a = static_cast<double>(analytic[i]);
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++result.coordinates;
      if (err > result.max_rel_error || result.worst_coordinate.empty()) {
        result.max_rel_error = std::max(result.max_rel_error, err);
        if (err >= result.max_rel_error) result.worst_coordinate = where;
      }
    }
  }
  return result;
}

template GradCheckResult grad_check<float>(const std::function<Tensor<float>()>&,
                                           std::vector<GradCheckInput<float>>, float);
template GradCheckResult grad_check<double>(const std::function<Tensor<double>()>&,
                                            std::vector<GradCheckInput<double>>, double);

}  // namespace resonance
