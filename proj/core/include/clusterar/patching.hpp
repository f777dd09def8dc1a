// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "clusterar/image.hpp"
#include "clusterar/tensor.hpp"

namespace clusterar {

/// Non-overlapping patches in row-major grid order. Each row of `patches`
/// is one patch flattened as (row, col, channel), length patch_size^2 * C.
struct PatchGrid {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t patch_size = 0;
  std::size_t channels = 0;
  Matrix<float> patches;

  [[nodiscard]] std::size_t count() const { return grid_h * grid_w; }
  [[nodiscard]] std::size_t patch_dim() const { return patches.cols; }
  bool operator==(const PatchGrid&) const = default;
};

/// One image as L clusters of cluster_side^2 patch tokens, in
/// cluster-priority order: clusters row-major over the cluster grid, tokens
/// row-major inside each cluster.
struct ClusterSequence {
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t cluster_side = 0;
  std::size_t patch_size = 0;
  std::size_t channels = 0;
  std::vector<Matrix<float>> clusters;  // L entries, each side^2 × s
  /// order[l * side^2 + j] is the row-major patch index of token j of cluster l.
  std::vector<std::uint32_t> order;

  [[nodiscard]] std::size_t cluster_count() const { return clusters.size(); }
  [[nodiscard]] std::size_t tokens_per_cluster() const { return cluster_side * cluster_side; }
  [[nodiscard]] std::size_t patch_dim() const { return clusters.empty() ? 0 : clusters.front().cols; }
  [[nodiscard]] std::size_t token_count() const { return order.size(); }
};

PatchGrid patchify(const Image& image, std::size_t patch_size);

/// Cluster-priority permutation for a grid; depends on shape only.
std::vector<std::uint32_t> cluster_priority_order(std::size_t grid_h, std::size_t grid_w, std::size_t cluster_side);

ClusterSequence clusterize(const PatchGrid& grid, std::size_t cluster_side);

/// Inverse of clusterize.
PatchGrid unclusterize(const ClusterSequence& seq);

/// patchify followed by clusterize, with the divisibility check of both.
ClusterSequence image_to_clusters(const Image& image, std::size_t patch_size, std::size_t cluster_side);

}  // namespace clusterar
