// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "clusterar/autograd.hpp"
#include "clusterar/separator.hpp"
#include "clusterar/tensor.hpp"

namespace clusterar {

inline constexpr double kTargetNormEps = 1e-6;

/// (p - mean(p)) / sqrt(var(p) + eps), population variance.
std::vector<double> normalize_target(std::span<const double> patch, double eps = kTargetNormEps);

struct TargetOptions {
  bool include_separator_targets = true;
  double eps = kTargetNormEps;
};

/// Next-cluster targets for every token of a packed sequence. Token
/// (cluster g, slot j) is trained toward token j of cluster g + 1; the last
/// cluster targets a virtual trailing separator.
struct TargetPlan {
  std::size_t patch_dim = 0;
  std::size_t tokens_per_cluster = 0;
  /// One entry per predicting cluster: the global cluster index of its
  /// target, or cluster_count for the virtual separator.
  std::vector<std::uint32_t> target_cluster;
  Matrix<double> targets;             // token_count × patch_dim
  std::vector<double> weights;        // per token, 0 excludes it from the loss
  std::vector<bool> target_is_separator;
  std::vector<double> mean;           // per token, statistics of the raw pixel target
  std::vector<double> variance;

  [[nodiscard]] std::size_t predicting_clusters() const { return target_cluster.size(); }
  [[nodiscard]] std::size_t token_count() const { return targets.rows; }
};

TargetPlan build_targets(const PackedSequence& packed, const TargetOptions& options = {});

/// Weighted mean squared error over tokens and components.
double cluster_loss(const Matrix<double>& predictions, const TargetPlan& plan);

template <typename T>
Var cluster_loss(Tape<T>& t, Var predictions, const TargetPlan& plan);

}  // namespace clusterar
