// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clusterar/autograd.hpp"
#include "clusterar/params.hpp"
#include "clusterar/separator.hpp"
#include "clusterar/ssm.hpp"

namespace clusterar {

enum class ScanMode : std::uint8_t { OneScan, FourScan };

std::string_view to_string(ScanMode m);
std::optional<ScanMode> parse_scan_mode(std::string_view s);

struct EncoderConfig {
  std::size_t depth = 4;
  std::size_t width = 64;  // D
  std::size_t state_dim = 8;
  std::size_t mlp_ratio = 4;
  ScanMode scan_mode = ScanMode::OneScan;
  bool sum_paths = true;  // FourScan: sum path outputs (false: average)
};

/// Handles to one MambaMLP block's weights on a tape.
struct MambaMlpBlockVars {
  Var norm1_g, norm1_b;
  SelectiveScanVars scan;
  Var out_w, out_b;
  Var norm2_g, norm2_b;
  Var fc1_w, fc1_b, fc2_w, fc2_b;
};

/// Token traversal orders used by the token mixer. Each order is a
/// permutation of row indices; the mixer scans rows in that order and
/// scatters results back to their original rows.
using ScanPaths = std::vector<std::vector<std::uint32_t>>;

ScanPaths one_scan_paths(std::size_t token_count);

/// Four traversals of the patch grid: row-major forward and backward,
/// column-major forward and backward. `patch_index[i]` is the row-major
/// patch index of row i, or -1 for rows (separators, class token) that keep
/// their place in every traversal.
ScanPaths four_scan_paths(const std::vector<std::int32_t>& patch_index, std::size_t grid_h, std::size_t grid_w);

/// Pre-norm residual block:
///   x += out(sum_p scan_p(norm1(x)));  x += fc2(gelu(fc1(norm2(x))))
/// `keep` scales the two residual branches (stochastic depth); a zero
/// scale skips the branch.
template <typename T>
Var mamba_mlp_block(Tape<T>& t, Var x, const MambaMlpBlockVars& w, const ScanPaths& paths, bool sum_paths,
                    T mixer_keep = T(1), T mlp_keep = T(1));

struct EncodeOptions {
  std::optional<ScanMode> scan_mode;           // overrides the config
  bool use_positions = true;
  Var class_token;                             // 1×D, optional
  std::size_t class_token_index = 0;           // insertion row when class_token is set
  std::vector<double> branch_keep;             // 2 × depth residual scales; empty = all 1

  static EncodeOptions with_mode(ScanMode mode) {
    EncodeOptions o;
    o.scan_mode = mode;
    return o;
  }
};

/// MambaMLP encoder over packed sequences. Parameters are registered in the
/// given store under `prefix`.
template <typename T>
class Encoder {
 public:
  /// `positions` is the number of rows in the positional table.
  Encoder(ParamStore<T>& store, const EncoderConfig& config, std::size_t patch_dim, std::size_t positions,
          bool separator_embedding, const std::string& prefix = "encoder.");

  /// Features, one row per packed token (plus the class token when given).
  Var encode(Tape<T>& t, const PackedSequence& packed, const EncodeOptions& options = {}) const;

  /// Patch embedding + separator injection + positions (depth-0 features).
  Var embed(Tape<T>& t, const PackedSequence& packed, bool use_positions) const;

  MambaMlpBlockVars block_vars(Tape<T>& t, std::size_t block) const;

  [[nodiscard]] const EncoderConfig& config() const { return config_; }
  [[nodiscard]] std::size_t patch_dim() const { return patch_dim_; }
  [[nodiscard]] std::size_t positions() const { return positions_; }
  [[nodiscard]] Parameter<T>* separator_embedding() const { return sep_embed_; }

 private:
  struct BlockParams {
    Parameter<T>*norm1_g, *norm1_b, *delta_w, *delta_b, *b_w, *b_b, *c_w, *c_b, *a_log, *out_w, *out_b;
    Parameter<T>*norm2_g, *norm2_b, *fc1_w, *fc1_b, *fc2_w, *fc2_b;
  };

  EncoderConfig config_;
  std::size_t patch_dim_;
  std::size_t positions_;
  Parameter<T>* patch_w_;
  Parameter<T>* patch_b_;
  Parameter<T>* pos_embed_;
  Parameter<T>* sep_embed_ = nullptr;
  std::vector<BlockParams> blocks_;
};

}  // namespace clusterar
