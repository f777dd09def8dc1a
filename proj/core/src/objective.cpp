// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace clusterar {

std::vector<double> normalize_target(std::span<const double> patch, double eps) {
  if (patch.empty()) return {};
  double mean = 0.0;
  for (double v : patch) mean += v;
  mean /= static_cast<double>(patch.size());
  double var = 0.0;
  for (double v : patch) var += (v - mean) * (v - mean);
  var /= static_cast<double>(patch.size());
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = (patch[i] - mean) * inv;
  return out;
}

TargetPlan build_targets(const PackedSequence& packed, const TargetOptions& options) {
  const std::size_t per = packed.tokens_per_cluster();
  const std::size_t s = packed.patch_dim;
  const std::size_t n = packed.token_count();
  if (per == 0 || n % per != 0) throw std::invalid_argument("build_targets: malformed packed sequence");
  const std::size_t clusters = n / per;

  TargetPlan plan;
  plan.patch_dim = s;
  plan.tokens_per_cluster = per;
  plan.targets = Matrix<double>(n, s);
  plan.weights.assign(n, 1.0);
  plan.target_is_separator.assign(n, false);
  plan.mean.assign(n, 0.0);
  plan.variance.assign(n, 0.0);

  std::vector<double> raw(s);
  for (std::size_t g = 0; g < clusters; ++g) {
    const std::size_t next = g + 1;
    plan.target_cluster.push_back(static_cast<std::uint32_t>(next));
    for (std::size_t j = 0; j < per; ++j) {
      const std::size_t row = g * per + j;
      const bool virtual_sep = next == clusters;
      const PackedToken* target = virtual_sep ? nullptr : &packed.tokens[next * per + j];
      if (virtual_sep || target->meta.is_separator) {
        plan.target_is_separator[row] = true;
        const auto v = separator_pattern(packed.separator, j);
        if (!v || !options.include_separator_targets) {
          plan.weights[row] = 0.0;
          continue;
        }
        for (std::size_t c = 0; c < s; ++c) plan.targets(row, c) = *v;
        continue;
      }
      for (std::size_t c = 0; c < s; ++c) raw[c] = target->values[c];
      double mean = 0.0;
      for (double v : raw) mean += v;
      mean /= static_cast<double>(s);
      double var = 0.0;
      for (double v : raw) var += (v - mean) * (v - mean);
      plan.mean[row] = mean;
      plan.variance[row] = var / static_cast<double>(s);
      const auto norm = normalize_target(raw, options.eps);
      std::copy(norm.begin(), norm.end(), plan.targets.row(row).begin());
    }
  }
  return plan;
}

double cluster_loss(const Matrix<double>& predictions, const TargetPlan& plan) {
  if (!predictions.same_shape(plan.targets)) {
    throw std::invalid_argument("cluster_loss: predictions " + shape_string(predictions) + " vs targets " +
                                shape_string(plan.targets));
  }
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t r = 0; r < predictions.rows; ++r) {
    if (plan.weights[r] == 0.0) continue;
    wsum += plan.weights[r];
    double row = 0.0;
    for (std::size_t c = 0; c < predictions.cols; ++c) {
      const double e = predictions(r, c) - plan.targets(r, c);
      row += e * e;
    }
    acc += plan.weights[r] * row;
  }
  return wsum > 0.0 ? acc / (wsum * static_cast<double>(predictions.cols)) : 0.0;
}

template <typename T>
Var cluster_loss(Tape<T>& t, Var predictions, const TargetPlan& plan) {
  const auto& pv = t.value(predictions);
  if (pv.rows != plan.targets.rows || pv.cols != plan.targets.cols) {
    throw std::invalid_argument("cluster_loss: predictions " + shape_string(pv) + " vs targets " +
                                shape_string(plan.targets));
  }
  std::vector<T> w(plan.weights.begin(), plan.weights.end());
  return weighted_mse(t, predictions, plan.targets.cast<T>(), std::move(w));
}

template Var cluster_loss<float>(Tape<float>&, Var, const TargetPlan&);
template Var cluster_loss<double>(Tape<double>&, Var, const TargetPlan&);

}  // namespace clusterar
