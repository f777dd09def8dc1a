// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/params.hpp"

#include <cmath>
#include <stdexcept>

#include "clusterar/rng.hpp"

namespace clusterar {

template <typename T>
Parameter<T>& ParamStore<T>::add(const std::string& name, std::size_t rows, std::size_t cols,
                                 Init init, bool decay, int layer_id) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter<T>>();
  p->name = name;
  p->value = Matrix<T>(rows, cols);
  p->grad = Matrix<T>(rows, cols);
  p->decay = decay;
  p->layer_id = layer_id;
  p->init = init;
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

template <typename T>
Parameter<T>* ParamStore<T>::find(const std::string& name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
const Parameter<T>* ParamStore<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : params_[it->second].get();
}

template <typename T>
Parameter<T>& ParamStore<T>::at(const std::string& name) {
  auto* p = find(name);
  if (p == nullptr) throw std::out_of_range("unknown parameter: " + name);
  return *p;
}

template <typename T>
std::size_t ParamStore<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p->grad.fill(T(0));
}

template <typename T>
void ParamStore<T>::initialize(std::uint64_t seed) {
  for (auto& p : params_) {
    Rng rng(derive_seed(seed, hash_name(p->name)));
    auto& v = p->value;
    switch (p->init) {
      case Init::Zeros:
        v.fill(T(0));
        break;
      case Init::Ones:
        v.fill(T(1));
        break;
      case Init::Xavier:
      case Init::SmallXavier: {
        const double bound = std::sqrt(6.0 / static_cast<double>(v.rows + v.cols)) *
                             (p->init == Init::SmallXavier ? 0.1 : 1.0);
        for (auto& x : v.data) x = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
      case Init::Normal002:
        for (auto& x : v.data) x = static_cast<T>(0.02 * rng.normal());
        break;
      case Init::StateDecay:
        for (std::size_t r = 0; r < v.rows; ++r)
          for (std::size_t c = 0; c < v.cols; ++c)
            v(r, c) = static_cast<T>(std::log(static_cast<double>(c + 1)));
        break;
      case Init::StepBias:
        for (auto& x : v.data) {
          const double step = std::exp(rng.uniform(std::log(1e-3), std::log(1e-1)));
          x = static_cast<T>(step + std::log(-std::expm1(-step)));  // softplus^-1
        }
        break;
    }
  }
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace clusterar
