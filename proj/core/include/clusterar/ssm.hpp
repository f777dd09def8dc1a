// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "clusterar/autograd.hpp"
#include "clusterar/tensor.hpp"

namespace clusterar {

/// Continuous single-input single-output SSM with diagonal state matrix:
///   h'(t) = A h(t) + B x(t),  y(t) = C h(t).
struct SsmParams {
  std::vector<double> A;  // diagonal, length d
  std::vector<double> B;  // length d
  std::vector<double> C;  // length d
  double delta = 1.0;     // timescale
};

/// Discrete (ZOH) counterpart: h_t = Abar h_{t-1} + Bbar x_t, y_t = C h_t.
struct DiscreteSsm {
  std::vector<double> Abar;
  std::vector<double> Bbar;
  std::vector<double> C;

  [[nodiscard]] std::size_t state_dim() const { return Abar.size(); }
  bool operator==(const DiscreteSsm&) const = default;
};

/// Abar = exp(delta A), Bbar = (delta A)^-1 (exp(delta A) - I) delta B,
/// elementwise. Small |delta A| uses the series of (e^z - 1)/z.
DiscreteSsm discretize(const SsmParams& p);

/// Exact left-to-right recurrence from h_0 = 0.
std::vector<double> scan_recurrent(const DiscreteSsm& p, std::span<const double> x);
std::vector<double> scan_recurrent(const SsmParams& p, std::span<const double> x);

/// K = (C Bbar, C Abar Bbar, ..., C Abar^{L-1} Bbar).
std::vector<double> ssm_kernel(const DiscreteSsm& p, std::size_t length);

/// Causal convolution of x with the SSM kernel; requires time-invariant
/// parameters.
std::vector<double> kernel_conv(const DiscreteSsm& p, std::span<const double> x);
/// Per-step overload; throws std::invalid_argument unless every step
/// carries the same parameters.
std::vector<double> kernel_conv(std::span<const DiscreteSsm> per_step, std::span<const double> x);

/// Weights of the input-dependent scan for width D and state size d.
template <typename T>
struct SelectiveScanWeights {
  Matrix<T> delta_w;  // D×D
  Matrix<T> delta_b;  // 1×D
  Matrix<T> b_w;      // d×D
  Matrix<T> b_b;      // 1×d
  Matrix<T> c_w;      // d×D
  Matrix<T> c_b;      // 1×d
  Matrix<T> a_log;    // D×d, A = -exp(a_log)

  static SelectiveScanWeights zeros(std::size_t width, std::size_t state_dim);
};

/// Tape handles for the same weights (parameters or constants).
struct SelectiveScanVars {
  Var delta_w, delta_b, b_w, b_b, c_w, c_b, a_log;
};

/// delta_t = softplus(W_delta x_t + b_delta), B_t = W_B x_t + b_B,
/// C_t = W_C x_t + b_C, then the ZOH selective recurrence. x: L×D.
template <typename T>
Var selective_scan_graph(Tape<T>& t, Var x, const SelectiveScanVars& w);

/// Forward-only convenience wrapper.
template <typename T>
Matrix<T> selective_scan(const Matrix<T>& x, const SelectiveScanWeights<T>& w);

/// LTI system seen by channel `c` when the projection matrices are zero.
template <typename T>
SsmParams induced_lti(const SelectiveScanWeights<T>& w, std::size_t channel);

}  // namespace clusterar
