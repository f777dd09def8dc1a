// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "clusterar/autograd.hpp"

namespace clusterar {

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  double max_abs_diff = 0.0;
  /// max|a - n| / max(max|a|, max|n|, floor) over the tensor.
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

using LossFn = std::function<Var(Tape<double>&)>;

/// Compares tape gradients of `loss` (a 1×1 node) with central differences
/// of step `eps` for every element of every parameter in `store`. Tensors
/// whose gradients stay below `floor` are measured against `floor`, since
/// their central differences are pure rounding noise.
GradCheckReport grad_check(ParamStore<double>& store, const LossFn& loss, double eps, double tol,
                           double floor = 1e-6);

}  // namespace clusterar
