// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <random>
#include <string>
#include <vector>

#include "resonance/tensor.hpp"

namespace resonance {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  bool trainable = true;
};

/// Name-addressed registry of model parameters. Names are unique; insertion
/// order is preserved and defines checkpoint layout.
template <typename T>
class ParameterStore {
 public:
  /// Registers a leaf tensor under a unique name. Throws std::invalid_argument
  /// on a duplicate name.
  Tensor<T> add(const std::string& name, Tensor<T> tensor, bool trainable = true);
  Tensor<T> add_normal(const std::string& name, Shape shape, double stddev, std::mt19937_64& rng,
                       bool trainable = true);
  Tensor<T> add_constant(const std::string& name, Shape shape, T value, bool trainable = true);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;
  void remove(const std::string& name);

  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }

  /// Names matching a shell-style wildcard pattern ('*', '?', '[...]').
  std::vector<std::string> match(const std::string& pattern) const;
  void set_trainable_all(bool trainable);
  /// Returns the number of parameters affected.
  std::size_t set_trainable(const std::string& pattern, bool trainable);

  std::size_t element_count(bool trainable_only) const;
  void zero_grad();

 private:
  void reindex();

  std::vector<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

extern template class ParameterStore<float>;
extern template class ParameterStore<double>;

}  // namespace resonance
