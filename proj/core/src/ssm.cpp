// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/ssm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "clusterar/zoh.hpp"

namespace clusterar {

DiscreteSsm discretize(const SsmParams& p) {
  const std::size_t d = p.A.size();
  if (d == 0) throw std::invalid_argument("discretize: state dimension must be at least 1");
  if (p.B.size() != d || p.C.size() != d) throw std::invalid_argument("discretize: A, B, C lengths differ");
  if (!(p.delta > 0.0)) throw std::invalid_argument("discretize: delta must be positive");
  DiscreteSsm out;
  out.Abar.resize(d);
  out.Bbar.resize(d);
  out.C = p.C;
  for (std::size_t i = 0; i < d; ++i) {
    const double z = p.delta * p.A[i];
    out.Abar[i] = std::exp(z);
    out.Bbar[i] = zoh_phi(z) * p.delta * p.B[i];
    if (!std::isfinite(out.Abar[i]) || !std::isfinite(out.Bbar[i])) {
      throw std::domain_error("discretize: non-finite result in channel " + std::to_string(i));
    }
  }
  return out;
}

std::vector<double> scan_recurrent(const DiscreteSsm& p, std::span<const double> x) {
  const std::size_t d = p.state_dim();
  std::vector<double> h(d, 0.0);
  std::vector<double> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      h[i] = p.Abar[i] * h[i] + p.Bbar[i] * x[t];
      acc += p.C[i] * h[i];
    }
    if (!std::isfinite(acc)) throw std::domain_error("scan_recurrent: non-finite output at step " + std::to_string(t));
    y[t] = acc;
  }
  return y;
}

std::vector<double> scan_recurrent(const SsmParams& p, std::span<const double> x) {
  return scan_recurrent(discretize(p), x);
}

std::vector<double> ssm_kernel(const DiscreteSsm& p, std::size_t length) {
  const std::size_t d = p.state_dim();
  std::vector<double> power(d, 1.0);  // Abar^k, diagonal
  std::vector<double> k(length);
  for (std::size_t j = 0; j < length; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += p.C[i] * power[i] * p.Bbar[i];
    k[j] = acc;
    for (std::size_t i = 0; i < d; ++i) power[i] *= p.Abar[i];
  }
  return k;
}

std::vector<double> kernel_conv(const DiscreteSsm& p, std::span<const double> x) {
  const auto k = ssm_kernel(p, x.size());
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= t; ++j) acc += k[j] * x[t - j];
    y[t] = acc;
  }
  return y;
}

std::vector<double> kernel_conv(std::span<const DiscreteSsm> per_step, std::span<const double> x) {
  if (per_step.empty()) throw std::invalid_argument("kernel_conv: no parameters");
  if (per_step.size() != 1 && per_step.size() != x.size()) {
    throw std::invalid_argument("kernel_conv: parameter steps do not match the input length");
  }
  for (const auto& step : per_step) {
    if (!(step == per_step.front())) {
      throw std::invalid_argument("kernel_conv: input-dependent parameters; the convolution form needs an LTI system");
    }
  }
  return kernel_conv(per_step.front(), x);
}

template <typename T>
SelectiveScanWeights<T> SelectiveScanWeights<T>::zeros(std::size_t width, std::size_t state_dim) {
  return SelectiveScanWeights{Matrix<T>(width, width), Matrix<T>(1, width),     Matrix<T>(state_dim, width),
                              Matrix<T>(1, state_dim), Matrix<T>(state_dim, width), Matrix<T>(1, state_dim),
                              Matrix<T>(width, state_dim)};
}

template <typename T>
Var selective_scan_graph(Tape<T>& t, Var x, const SelectiveScanVars& w) {
  const Var delta = softplus(t, linear(t, x, w.delta_w, w.delta_b));
  const Var b = linear(t, x, w.b_w, w.b_b);
  const Var c = linear(t, x, w.c_w, w.c_b);
  const Var a = neg_exp(t, w.a_log);
  return selective_scan(t, x, delta, a, b, c);
}

template <typename T>
Matrix<T> selective_scan(const Matrix<T>& x, const SelectiveScanWeights<T>& w) {
  Tape<T> t;
  SelectiveScanVars v{t.constant(w.delta_w), t.constant(w.delta_b), t.constant(w.b_w), t.constant(w.b_b),
                      t.constant(w.c_w),     t.constant(w.c_b),     t.constant(w.a_log)};
  const Var y = selective_scan_graph(t, t.constant(x), v);
  const auto& out = t.value(y);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(static_cast<double>(out.data[i]))) {
      throw std::domain_error("selective_scan: non-finite activation at step " + std::to_string(i / out.cols));
    }
  }
  return out;
}

template <typename T>
SsmParams induced_lti(const SelectiveScanWeights<T>& w, std::size_t channel) {
  SsmParams p;
  const std::size_t d = w.a_log.cols;
  const double pre = static_cast<double>(w.delta_b(0, channel));
  p.delta = pre > 20.0 ? pre : std::log1p(std::exp(pre));
  for (std::size_t i = 0; i < d; ++i) {
    p.A.push_back(-std::exp(static_cast<double>(w.a_log(channel, i))));
    p.B.push_back(static_cast<double>(w.b_b(0, i)));
    p.C.push_back(static_cast<double>(w.c_b(0, i)));
  }
  return p;
}

template struct SelectiveScanWeights<float>;
template struct SelectiveScanWeights<double>;
template Var selective_scan_graph<float>(Tape<float>&, Var, const SelectiveScanVars&);
template Var selective_scan_graph<double>(Tape<double>&, Var, const SelectiveScanVars&);
template Matrix<float> selective_scan<float>(const Matrix<float>&, const SelectiveScanWeights<float>&);
template Matrix<double> selective_scan<double>(const Matrix<double>&, const SelectiveScanWeights<double>&);
template SsmParams induced_lti<float>(const SelectiveScanWeights<float>&, std::size_t);
template SsmParams induced_lti<double>(const SelectiveScanWeights<double>&, std::size_t);

}  // namespace clusterar
