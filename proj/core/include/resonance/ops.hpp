// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "resonance/tensor.hpp"

namespace resonance {

using TokenId = std::int32_t;

// Shapes must match exactly; the only broadcast is add_bias (trailing vector).

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
/// a[m x k] * b[n x k]^T -> [m x n]
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
/// x[m x n] + bias[n] added to every row.
template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);
template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
/// axis 0 or 1 of a rank-2 tensor; rank 1 takes axis 0.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);
/// Row-wise softmax where entry (i, j) is excluded whenever j > i + offset.
/// Excluded entries are exactly zero.
template <typename T>
Tensor<T> softmax_causal(const Tensor<T>& scores, std::size_t offset);
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));
/// tanh approximation.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, std::span<const TokenId> ids);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, std::size_t begin, std::size_t end);
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);
/// Inverted dropout; identity when p == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, std::mt19937_64& rng);
/// Pointwise op with caller-supplied value and derivative.
template <typename T>
Tensor<T> elementwise(const Tensor<T>& x, const std::function<T(T)>& f,
                      const std::function<T(T)>& df);

/// Mean negative log-likelihood over rows where mask is set.
/// Throws NumericError when no row is selected.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, std::span<const TokenId> targets,
                        const std::vector<bool>& mask);

}  // namespace resonance
