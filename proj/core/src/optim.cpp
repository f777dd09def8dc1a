// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/optim.hpp"

#include <cmath>
#include <numbers>

namespace clusterar {

OptimHyper OptimHyper::pretrain_defaults(std::size_t batch) {
  OptimHyper h;
  h.batch_size = batch;
  h.base_lr = scaled_lr(1.5e-4, batch);
  return h;
}

OptimHyper OptimHyper::finetune_defaults(std::size_t batch) {
  OptimHyper h;
  h.batch_size = batch;
  h.base_lr = scaled_lr(5e-4, batch);
  h.beta2 = 0.999;
  h.warmup_epochs = 5;
  h.total_epochs = 100;
  h.layer_decay = 0.65;
  return h;
}

LrSchedule make_schedule(const OptimHyper& hyper, std::size_t steps_per_epoch) {
  LrSchedule s;
  s.base_lr = hyper.base_lr;
  s.warmup_steps = static_cast<std::size_t>(std::llround(hyper.warmup_epochs * static_cast<double>(steps_per_epoch)));
  s.total_steps = static_cast<std::size_t>(std::llround(hyper.total_epochs * static_cast<double>(steps_per_epoch)));
  s.warmup_steps = std::min(s.warmup_steps, s.total_steps);
  return s;
}

double lr_at(std::size_t step, const LrSchedule& s) {
  if (step < s.warmup_steps) {
    return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  }
  if (s.total_steps <= s.warmup_steps) return s.base_lr;
  const double progress = std::min(
      1.0, static_cast<double>(step - s.warmup_steps) / static_cast<double>(s.total_steps - s.warmup_steps));
  return s.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void adamw_update(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v, std::uint64_t step,
                  const OptimHyper& hyper, double lr, bool decay) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw std::invalid_argument("adamw_update: shape mismatch");
  }
  if (step == 0) throw std::invalid_argument("adamw_update: step counts from 1");
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  const double shrink = decay ? 1.0 - lr * hyper.weight_decay : 1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = static_cast<double>(grads[i]);
    const double mi = hyper.beta1 * static_cast<double>(m[i]) + (1.0 - hyper.beta1) * g;
    const double vi = hyper.beta2 * static_cast<double>(v[i]) + (1.0 - hyper.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double update = (mi / bc1) / (std::sqrt(vi / bc2) + hyper.eps);
    params[i] = static_cast<T>(static_cast<double>(params[i]) * shrink - lr * update);
  }
}

template <typename T>
AdamW<T>::AdamW(ParamStore<T>& store, const OptimHyper& hyper, int max_layer)
    : store_(store), hyper_(hyper), max_layer_(max_layer) {
  for (std::size_t i = 0; i < store.size(); ++i) {
    m_.emplace_back(store[i].value.rows, store[i].value.cols);
    v_.emplace_back(store[i].value.rows, store[i].value.cols);
  }
}

template <typename T>
double AdamW<T>::lr_scale(int layer_id) const {
  return std::pow(hyper_.layer_decay, static_cast<double>(max_layer_ - layer_id));
}

template <typename T>
void AdamW<T>::step(double lr) {
  for (std::size_t i = 0; i < store_.size(); ++i) {
    for (T g : store_[i].grad.data) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw NonFiniteError("non-finite gradient in " + store_[i].name + " at update " + std::to_string(step_ + 1));
      }
    }
  }
  ++step_;
  for (std::size_t i = 0; i < store_.size(); ++i) {
    auto& p = store_[i];
    adamw_update<T>(p.value.data, p.grad.data, m_[i].data, v_[i].data, step_, hyper_, lr * lr_scale(p.layer_id),
                    p.decay);
  }
}

template <typename T>
double grad_norm(const ParamStore<T>& store) {
  double acc = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i)
    for (T g : store[i].grad.data) acc += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(acc);
}

template void adamw_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                  std::uint64_t, const OptimHyper&, double, bool);
template void adamw_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                   std::uint64_t, const OptimHyper&, double, bool);
template class AdamW<float>;
template class AdamW<double>;
template double grad_norm<float>(const ParamStore<float>&);
template double grad_norm<double>(const ParamStore<double>&);

}  // namespace clusterar
