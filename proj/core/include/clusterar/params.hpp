// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "clusterar/tensor.hpp"

namespace clusterar {

enum class Init : std::uint8_t {
  Zeros,
  Ones,
  Xavier,       // uniform, bound sqrt(6 / (fan_in + fan_out))
  SmallXavier,  // Xavier scaled by 0.1
  Normal002,    // N(0, 0.02^2)
  StateDecay,   // log(i + 1) along columns: A = -exp(.) = -(i + 1)
  StepBias,     // inverse softplus of a log-uniform step in [1e-3, 1e-1]
};

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  bool decay = true;    // receives decoupled weight decay
  int layer_id = 0;     // depth index used by layer-wise lr decay
  Init init = Init::Zeros;
};

/// Owns named parameters in registration order. Addresses of registered
/// parameters are stable for the lifetime of the store.
template <typename T>
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  Parameter<T>& add(const std::string& name, std::size_t rows, std::size_t cols, Init init,
                    bool decay, int layer_id);

  [[nodiscard]] Parameter<T>* find(const std::string& name);
  [[nodiscard]] const Parameter<T>* find(const std::string& name) const;
  Parameter<T>& at(const std::string& name);

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] std::size_t scalar_count() const;

  Parameter<T>& operator[](std::size_t i) { return *params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return *params_[i]; }

  /// Deterministic initialization: each parameter draws from a stream keyed
  /// by (seed, name), so adding a parameter never perturbs the others.
  void initialize(std::uint64_t seed);
  void zero_grad();

  /// Copies values of every same-named, same-shaped parameter from `other`.
  /// Returns the number of parameters copied.
  template <typename U>
  std::size_t load_from(const ParamStore<U>& other, const std::string& prefix = "");

 private:
  std::vector<std::unique_ptr<Parameter<T>>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
template <typename U>
std::size_t ParamStore<T>::load_from(const ParamStore<U>& other, const std::string& prefix) {
  std::size_t copied = 0;
  for (std::size_t i = 0; i < other.size(); ++i) {
    const auto& src = other[i];
    if (src.name.rfind(prefix, 0) != 0) continue;
    auto* dst = find(src.name);
    if (dst == nullptr || !dst->value.same_shape(src.value)) continue;
    dst->value = src.value.template cast<T>();
    ++copied;
  }
  return copied;
}

}  // namespace clusterar
