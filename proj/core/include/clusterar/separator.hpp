// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clusterar/patching.hpp"
#include "clusterar/tensor.hpp"

namespace clusterar {

enum class SeparatorValue : std::uint8_t { Zeros = 0, Ones = 1, Embeddings = 2, Identity = 3 };

/// Where separator clusters go relative to an image's pixel clusters.
/// None packs pixel clusters only and is used for classification inputs.
enum class LayoutKind : std::uint8_t { SC = 0, CS = 1, SCS = 2, CSC = 3, None = 4 };

std::string_view to_string(SeparatorValue v);
std::string_view to_string(LayoutKind k);
std::optional<SeparatorValue> parse_separator_value(std::string_view s);
std::optional<LayoutKind> parse_layout(std::string_view s);

struct SeparatorSpec {
  SeparatorValue value_kind = SeparatorValue::Identity;
  std::size_t cluster_rows = 4;
  std::size_t cluster_cols = 4;
  std::size_t embed_dim = 0;
  /// Current value of the learnable vector (Embeddings only); empty means
  /// zeros. Owned by the model; packing only reads it.
  std::vector<float> embedding;

  static SeparatorSpec square(SeparatorValue kind, std::size_t side, std::size_t dim) {
    return SeparatorSpec{kind, side, side, dim, {}};
  }
  [[nodiscard]] std::size_t token_count() const { return cluster_rows * cluster_cols; }
};

/// Separator tokens in embedding space, one row per within-cluster slot.
Matrix<float> make_separator(const SeparatorSpec& spec);

/// 0/1 indicator of a constant separator at a within-cluster slot
/// (Zeros: 0, Ones: 1, Identity: 1 on the diagonal). Embeddings has no
/// constant pattern and returns nullopt.
std::optional<float> separator_pattern(const SeparatorSpec& spec, std::size_t slot);

struct Slot {
  bool separator = false;
  std::uint32_t cluster = 0;  // pixel cluster index within the image (unused for separators)
  bool operator==(const Slot&) const = default;
};

std::vector<Slot> layout_plan(LayoutKind kind, std::size_t cluster_count, std::size_t cluster_side);

struct TokenMeta {
  std::uint32_t image_index = 0;
  std::uint32_t cluster_index = 0;  // global over separators and pixel clusters
  std::uint32_t within_cluster_index = 0;
  std::uint32_t position_id = 0;
  bool is_separator = false;
  std::int32_t source_cluster = -1;  // pixel cluster within its image, -1 for separators
  std::int32_t patch_index = -1;     // row-major patch index, -1 for separators
  bool operator==(const TokenMeta&) const = default;
};

/// Pixel tokens carry a patch vector (length s) that still needs patch
/// embedding; separator tokens carry an embedding-space vector (length D).
struct PackedToken {
  TokenMeta meta;
  std::vector<float> values;
  bool operator==(const PackedToken&) const = default;
};

struct PackOptions {
  bool restart_positions = true;
  std::size_t max_images = 16;
};

struct PackedSequence {
  SeparatorSpec separator;
  LayoutKind layout = LayoutKind::SC;
  bool restart_positions = true;
  std::size_t num_images = 0;
  std::size_t clusters_per_image = 0;  // L
  std::size_t cluster_side = 0;
  std::size_t grid_h = 0;
  std::size_t grid_w = 0;
  std::size_t patch_dim = 0;
  std::size_t slots_per_image = 0;
  std::vector<PackedToken> tokens;

  [[nodiscard]] std::size_t token_count() const { return tokens.size(); }
  [[nodiscard]] std::size_t cluster_count() const { return num_images * slots_per_image; }
  [[nodiscard]] std::size_t tokens_per_cluster() const { return cluster_side * cluster_side; }
  [[nodiscard]] std::vector<std::uint32_t> cluster_ids() const;
  /// Number of distinct position ids one image occupies.
  [[nodiscard]] std::size_t positions_per_image() const { return clusters_per_image * tokens_per_cluster() + 1; }
};

PackedSequence pack(const std::vector<ClusterSequence>& images, const SeparatorSpec& spec, LayoutKind kind,
                    const PackOptions& options = {});

/// Single image without separators (classification input).
PackedSequence pack_single(const ClusterSequence& image);

/// Separator tokens: id 0; pixel tokens: 1..n in packed order within their
/// image. With restart disabled, image k's ids are offset by k * (n + 1).
std::vector<std::uint32_t> position_ids(const PackedSequence& packed);

}  // namespace clusterar
