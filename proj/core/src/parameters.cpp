// Copyright 2026 The Resonance Authors
// SPDX-License-Identifier: Apache-2.0

#include "resonance/parameters.hpp"

#include <fnmatch.h>

#include <stdexcept>

namespace resonance {

template <typename T>
Tensor<T> ParameterStore<T>::add(const std::string& name, Tensor<T> tensor, bool trainable) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  tensor.set_requires_grad(true);
  index_[name] = params_.size();
  params_.push_back({name, tensor, trainable});
  return tensor;
}

template <typename T>
Tensor<T> ParameterStore<T>::add_normal(const std::string& name, Shape shape, double stddev,
                                        std::mt19937_64& rng, bool trainable) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<T> values(numel(shape));
  for (auto& v : values) v = static_cast<T>(dist(rng));
  return add(name, Tensor<T>::from(std::move(shape), std::move(values)), trainable);
}

template <typename T>
Tensor<T> ParameterStore<T>::add_constant(const std::string& name, Shape shape, T value, bool trainable) {
  return add(name, Tensor<T>::full(std::move(shape), value), trainable);
}

template <typename T>
Parameter<T>& ParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return params_[it->second];
}

template <typename T>
void ParameterStore<T>::remove(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  params_.erase(params_.begin() + static_cast<std::ptrdiff_t>(it->second));
  reindex();
}

template <typename T>
void ParameterStore<T>::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < params_.size(); ++i) index_[params_[i].name] = i;
}

template <typename T>
std::vector<std::string> ParameterStore<T>::match(const std::string& pattern) const {
  std::vector<std::string> out;
  for (const auto& p : params_) {
    if (fnmatch(pattern.c_str(), p.name.c_str(), 0) == 0) out.push_back(p.name);
  }
  return out;
}

template <typename T>
void ParameterStore<T>::set_trainable_all(bool trainable) {
  for (auto& p : params_) p.trainable = trainable;
}

template <typename T>
std::size_t ParameterStore<T>::set_trainable(const std::string& pattern, bool trainable) {
  std::size_t n = 0;
  for (auto& p : params_) {
    if (fnmatch(pattern.c_str(), p.name.c_str(), 0) == 0) {
      p.trainable = trainable;
      ++n;
    }
  }
  return n;
}

template <typename T>
std::size_t ParameterStore<T>::element_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (!trainable_only || p.trainable) n += p.tensor.numel();
  }
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template class ParameterStore<float>;
template class ParameterStore<double>;

}  // namespace resonance
