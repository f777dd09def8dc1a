// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clusterar/params.hpp"

namespace clusterar {

/// Optimizer and schedule hyperparameters; epochs are converted to steps
/// with the corpus size at run time.
struct OptimHyper {
  double base_lr = 1.5e-4 * 2048 / 256;
  std::size_t batch_size = 2048;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double warmup_epochs = 40;
  double total_epochs = 200;
  double layer_decay = 1.0;  // per-depth lr multiplier; 1 disables

  /// base_lr = lr_per_256 * batch / 256.
  static double scaled_lr(double lr_per_256, std::size_t batch) {
    return lr_per_256 * static_cast<double>(batch) / 256.0;
  }
  static OptimHyper pretrain_defaults(std::size_t batch = 2048);
  static OptimHyper finetune_defaults(std::size_t batch = 1024);
};

struct LrSchedule {
  double base_lr = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;
};

LrSchedule make_schedule(const OptimHyper& hyper, std::size_t steps_per_epoch);

/// Linear warmup from 0 to base_lr, then half-cosine decay to 0.
double lr_at(std::size_t step, const LrSchedule& schedule);

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One AdamW update of a flat tensor. `step` is the 1-based update count
/// used for bias correction. Decay is decoupled: p *= (1 - lr * wd) first.
template <typename T>
void adamw_update(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v, std::uint64_t step,
                  const OptimHyper& hyper, double lr, bool decay);

/// AdamW over a parameter store with per-parameter decay flags and
/// layer-wise lr scaling decay^(max_layer - layer_id).
template <typename T>
class AdamW {
 public:
  AdamW(ParamStore<T>& store, const OptimHyper& hyper, int max_layer = 0);

  /// Applies one update with the given lr. Throws NonFiniteError, leaving
  /// parameters and moments untouched, if any gradient is not finite.
  void step(double lr);

  [[nodiscard]] double lr_scale(int layer_id) const;
  [[nodiscard]] std::uint64_t step_count() const { return step_; }
  void set_step_count(std::uint64_t s) { step_ = s; }

  std::vector<Matrix<T>>& first_moments() { return m_; }
  std::vector<Matrix<T>>& second_moments() { return v_; }
  const std::vector<Matrix<T>>& first_moments() const { return m_; }
  const std::vector<Matrix<T>>& second_moments() const { return v_; }

 private:
  ParamStore<T>& store_;
  OptimHyper hyper_;
  int max_layer_;
  std::uint64_t step_ = 0;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
};

/// L2 norm over every gradient in the store.
template <typename T>
double grad_norm(const ParamStore<T>& store);

}  // namespace clusterar
