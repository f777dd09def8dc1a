// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace clusterar {

template <typename T>
inline constexpr T kZohSeriesCutoff = T(1e-4);
template <typename T>
inline constexpr T kZohDerivativeCutoff = T(1e-2);

/// phi(z) = (exp(z) - 1) / z, the zero-order-hold input gain for diagonal
/// systems: Bbar = phi(dt * A) * dt * B. Below |z| = 1e-4 the series is used.
template <typename T>
T zoh_phi(T z) {
  if (std::abs(z) < kZohSeriesCutoff<T>) return T(1) + z * (T(0.5) + z * (T(1) / T(6) + z / T(24)));
  return std::expm1(z) / z;
}

/// d phi / d z.
template <typename T>
T zoh_phi_derivative(T z) {
  if (std::abs(z) < kZohDerivativeCutoff<T>) {
    return T(0.5) + z * (T(1) / T(3) + z * (T(0.125) + z * (T(1) / T(30) + z / T(144))));
  }
  return (z * std::exp(z) - std::expm1(z)) / (z * z);
}

}  // namespace clusterar
