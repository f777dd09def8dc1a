// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/encoder.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace clusterar {

std::string_view to_string(ScanMode m) { return m == ScanMode::OneScan ? "one" : "four"; }

std::optional<ScanMode> parse_scan_mode(std::string_view s) {
  if (s == "one") return ScanMode::OneScan;
  if (s == "four") return ScanMode::FourScan;
  return std::nullopt;
}

ScanPaths one_scan_paths(std::size_t token_count) {
  std::vector<std::uint32_t> order(token_count);
  std::iota(order.begin(), order.end(), 0u);
  return {std::move(order)};
}

ScanPaths four_scan_paths(const std::vector<std::int32_t>& patch_index, std::size_t grid_h, std::size_t grid_w) {
  std::vector<std::uint32_t> slots;
  for (std::size_t i = 0; i < patch_index.size(); ++i) {
    if (patch_index[i] < 0) continue;
    if (static_cast<std::size_t>(patch_index[i]) >= grid_h * grid_w) {
      throw std::invalid_argument("four_scan_paths: patch index outside the grid");
    }
    slots.push_back(static_cast<std::uint32_t>(i));
  }
  auto traversal = [&](auto key, bool reverse) {
    std::vector<std::uint32_t> seq = slots;
    std::stable_sort(seq.begin(), seq.end(), [&](std::uint32_t a, std::uint32_t b) {
      return key(static_cast<std::size_t>(patch_index[a])) < key(static_cast<std::size_t>(patch_index[b]));
    });
    if (reverse) std::reverse(seq.begin(), seq.end());
    std::vector<std::uint32_t> order(patch_index.size());
    std::iota(order.begin(), order.end(), 0u);
    for (std::size_t m = 0; m < slots.size(); ++m) order[slots[m]] = seq[m];
    return order;
  };
  auto row_major = [](std::size_t p) { return p; };
  auto col_major = [grid_h, grid_w](std::size_t p) { return (p % grid_w) * grid_h + p / grid_w; };
  return {traversal(row_major, false), traversal(row_major, true), traversal(col_major, false),
          traversal(col_major, true)};
}

namespace {

bool is_identity(const std::vector<std::uint32_t>& order) {
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) return false;
  return true;
}

std::vector<std::uint32_t> inverse(const std::vector<std::uint32_t>& order) {
  std::vector<std::uint32_t> inv(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) inv[order[i]] = static_cast<std::uint32_t>(i);
  return inv;
}

template <typename T>
Var residual(Tape<T>& t, Var x, Var branch, T keep) {
  if (keep == T(0)) return x;
  if (keep != T(1)) branch = scale(t, branch, keep);
  return add(t, x, branch);
}

}  // namespace

template <typename T>
Var mamba_mlp_block(Tape<T>& t, Var x, const MambaMlpBlockVars& w, const ScanPaths& paths, bool sum_paths,
                    T mixer_keep, T mlp_keep) {
  if (paths.empty()) throw std::invalid_argument("mamba_mlp_block: no scan paths");
  const std::size_t rows = t.value(x).rows;
  const Var u = layer_norm(t, x, w.norm1_g, w.norm1_b);
  Var mixed;
  for (const auto& order : paths) {
    if (order.size() != rows) throw std::invalid_argument("mamba_mlp_block: scan path length mismatch");
    Var y;
    if (is_identity(order)) {
      y = selective_scan_graph(t, u, w.scan);
    } else {
      y = gather_rows(t, selective_scan_graph(t, gather_rows(t, u, order), w.scan), inverse(order));
    }
    mixed = mixed.valid() ? add(t, mixed, y) : y;
  }
  if (!sum_paths && paths.size() > 1) mixed = scale(t, mixed, T(1) / static_cast<T>(paths.size()));
  x = residual(t, x, linear(t, mixed, w.out_w, w.out_b), mixer_keep);
  const Var v = layer_norm(t, x, w.norm2_g, w.norm2_b);
  const Var m = linear(t, gelu(t, linear(t, v, w.fc1_w, w.fc1_b)), w.fc2_w, w.fc2_b);
  return residual(t, x, m, mlp_keep);
}

template <typename T>
Encoder<T>::Encoder(ParamStore<T>& store, const EncoderConfig& config, std::size_t patch_dim, std::size_t positions,
                    bool separator_embedding, const std::string& prefix)
    : config_(config), patch_dim_(patch_dim), positions_(positions) {
  if (config.width == 0 || config.state_dim == 0 || config.mlp_ratio == 0) {
    throw std::invalid_argument("Encoder: width, state_dim and mlp_ratio must be positive");
  }
  const std::size_t D = config.width;
  const std::size_t N = config.state_dim;
  const std::size_t H = D * config.mlp_ratio;
  patch_w_ = &store.add(prefix + "patch_embed.weight", D, patch_dim, Init::Xavier, true, 0);
  patch_b_ = &store.add(prefix + "patch_embed.bias", 1, D, Init::Zeros, false, 0);
  pos_embed_ = &store.add(prefix + "pos_embed", positions, D, Init::Normal002, false, 0);
  if (separator_embedding) sep_embed_ = &store.add(prefix + "sep_embed", 1, D, Init::Normal002, false, 0);
  for (std::size_t b = 0; b < config.depth; ++b) {
    const std::string p = prefix + "blocks." + std::to_string(b) + ".";
    const int layer = static_cast<int>(b) + 1;
    BlockParams bp{};
    bp.norm1_g = &store.add(p + "norm1.weight", 1, D, Init::Ones, false, layer);
    bp.norm1_b = &store.add(p + "norm1.bias", 1, D, Init::Zeros, false, layer);
    bp.delta_w = &store.add(p + "mixer.delta.weight", D, D, Init::SmallXavier, true, layer);
    bp.delta_b = &store.add(p + "mixer.delta.bias", 1, D, Init::StepBias, false, layer);
    bp.b_w = &store.add(p + "mixer.B.weight", N, D, Init::Xavier, true, layer);
    bp.b_b = &store.add(p + "mixer.B.bias", 1, N, Init::Zeros, false, layer);
    bp.c_w = &store.add(p + "mixer.C.weight", N, D, Init::Xavier, true, layer);
    bp.c_b = &store.add(p + "mixer.C.bias", 1, N, Init::Zeros, false, layer);
    bp.a_log = &store.add(p + "mixer.A_log", D, N, Init::StateDecay, false, layer);
    bp.out_w = &store.add(p + "mixer.out.weight", D, D, Init::Xavier, true, layer);
    bp.out_b = &store.add(p + "mixer.out.bias", 1, D, Init::Zeros, false, layer);
    bp.norm2_g = &store.add(p + "norm2.weight", 1, D, Init::Ones, false, layer);
    bp.norm2_b = &store.add(p + "norm2.bias", 1, D, Init::Zeros, false, layer);
    bp.fc1_w = &store.add(p + "mlp.fc1.weight", H, D, Init::Xavier, true, layer);
    bp.fc1_b = &store.add(p + "mlp.fc1.bias", 1, H, Init::Zeros, false, layer);
    bp.fc2_w = &store.add(p + "mlp.fc2.weight", D, H, Init::Xavier, true, layer);
    bp.fc2_b = &store.add(p + "mlp.fc2.bias", 1, D, Init::Zeros, false, layer);
    blocks_.push_back(bp);
  }
}

template <typename T>
MambaMlpBlockVars Encoder<T>::block_vars(Tape<T>& t, std::size_t block) const {
  const auto& b = blocks_.at(block);
  MambaMlpBlockVars v;
  v.norm1_g = t.param(*b.norm1_g);
  v.norm1_b = t.param(*b.norm1_b);
  v.scan = SelectiveScanVars{t.param(*b.delta_w), t.param(*b.delta_b), t.param(*b.b_w), t.param(*b.b_b),
                             t.param(*b.c_w),     t.param(*b.c_b),     t.param(*b.a_log)};
  v.out_w = t.param(*b.out_w);
  v.out_b = t.param(*b.out_b);
  v.norm2_g = t.param(*b.norm2_g);
  v.norm2_b = t.param(*b.norm2_b);
  v.fc1_w = t.param(*b.fc1_w);
  v.fc1_b = t.param(*b.fc1_b);
  v.fc2_w = t.param(*b.fc2_w);
  v.fc2_b = t.param(*b.fc2_b);
  return v;
}

template <typename T>
Var Encoder<T>::embed(Tape<T>& t, const PackedSequence& packed, bool use_positions) const {
  const std::size_t D = config_.width;
  if (packed.tokens.empty()) throw std::invalid_argument("encode: empty packed sequence");
  std::vector<std::uint32_t> pixel_rows;
  std::vector<std::uint32_t> sep_rows;
  for (std::size_t i = 0; i < packed.tokens.size(); ++i) {
    (packed.tokens[i].meta.is_separator ? sep_rows : pixel_rows).push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<Var> parts;
  if (!pixel_rows.empty()) {
    Matrix<T> pix(pixel_rows.size(), patch_dim_);
    for (std::size_t k = 0; k < pixel_rows.size(); ++k) {
      const auto& vals = packed.tokens[pixel_rows[k]].values;
      if (vals.size() != patch_dim_) {
        throw std::invalid_argument("encode: pixel token of length " + std::to_string(vals.size()) +
                                    ", model expects " + std::to_string(patch_dim_));
      }
      for (std::size_t c = 0; c < patch_dim_; ++c) pix(k, c) = static_cast<T>(vals[c]);
    }
    parts.push_back(linear(t, t.constant(std::move(pix)), t.param(*patch_w_), t.param(*patch_b_)));
  }
  if (!sep_rows.empty()) {
    if (packed.separator.value_kind == SeparatorValue::Embeddings) {
      if (sep_embed_ == nullptr) throw std::invalid_argument("encode: model has no separator embedding");
      parts.push_back(gather_rows(t, t.param(*sep_embed_), std::vector<std::uint32_t>(sep_rows.size(), 0u)));
    } else {
      Matrix<T> sep(sep_rows.size(), D);
      for (std::size_t k = 0; k < sep_rows.size(); ++k) {
        const auto& vals = packed.tokens[sep_rows[k]].values;
        if (vals.size() != D) {
          throw std::invalid_argument("encode: separator token of length " + std::to_string(vals.size()) +
                                      ", model width is " + std::to_string(D));
        }
        for (std::size_t c = 0; c < D; ++c) sep(k, c) = static_cast<T>(vals[c]);
      }
      parts.push_back(t.constant(std::move(sep)));
    }
  }
  // Rows of concat(pixels, separators) back into packed order.
  std::vector<std::uint32_t> order(packed.tokens.size());
  for (std::size_t k = 0; k < pixel_rows.size(); ++k) order[pixel_rows[k]] = static_cast<std::uint32_t>(k);
  for (std::size_t k = 0; k < sep_rows.size(); ++k) {
    order[sep_rows[k]] = static_cast<std::uint32_t>(pixel_rows.size() + k);
  }
  Var x = gather_rows(t, parts.size() == 1 ? parts.front() : concat_rows(t, parts), std::move(order));
  if (use_positions) {
    std::vector<std::uint32_t> ids;
    ids.reserve(packed.tokens.size());
    for (const auto& tok : packed.tokens) {
      if (tok.meta.position_id >= positions_) {
        throw std::invalid_argument("encode: position id " + std::to_string(tok.meta.position_id) +
                                    " exceeds the positional table of " + std::to_string(positions_));
      }
      ids.push_back(tok.meta.position_id);
    }
    x = add(t, x, gather_rows(t, t.param(*pos_embed_), std::move(ids)));
  }
  return x;
}

template <typename T>
Var Encoder<T>::encode(Tape<T>& t, const PackedSequence& packed, const EncodeOptions& options) const {
  const ScanMode mode = options.scan_mode.value_or(config_.scan_mode);
  if (mode == ScanMode::FourScan && packed.num_images > 1) {
    throw std::invalid_argument("encode: four-scan mode takes a single image, got " +
                                std::to_string(packed.num_images));
  }
  if (!options.branch_keep.empty() && options.branch_keep.size() != 2 * blocks_.size()) {
    throw std::invalid_argument("encode: branch_keep needs 2 entries per block");
  }
  Var x = embed(t, packed, options.use_positions);
  std::vector<std::int32_t> patch_index;
  patch_index.reserve(packed.tokens.size() + 1);
  for (const auto& tok : packed.tokens) patch_index.push_back(tok.meta.patch_index);

  if (options.class_token.valid()) {
    const std::size_t n = packed.tokens.size();
    const std::size_t at = options.class_token_index;
    if (at > n) throw std::invalid_argument("encode: class token index beyond the sequence");
    if (t.value(options.class_token).rows != 1 || t.value(options.class_token).cols != config_.width) {
      throw std::invalid_argument("encode: class token must be 1x" + std::to_string(config_.width));
    }
    std::vector<std::uint32_t> order;
    order.reserve(n + 1);
    for (std::size_t i = 0; i < at; ++i) order.push_back(static_cast<std::uint32_t>(i));
    order.push_back(static_cast<std::uint32_t>(n));
    for (std::size_t i = at; i < n; ++i) order.push_back(static_cast<std::uint32_t>(i));
    x = gather_rows(t, concat_rows(t, {x, options.class_token}), std::move(order));
    patch_index.insert(patch_index.begin() + static_cast<std::ptrdiff_t>(at), -1);
  }

  const ScanPaths paths = mode == ScanMode::OneScan ? one_scan_paths(patch_index.size())
                                                    : four_scan_paths(patch_index, packed.grid_h, packed.grid_w);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const T keep_mix = options.branch_keep.empty() ? T(1) : static_cast<T>(options.branch_keep[2 * b]);
    const T keep_mlp = options.branch_keep.empty() ? T(1) : static_cast<T>(options.branch_keep[2 * b + 1]);
    x = mamba_mlp_block(t, x, block_vars(t, b), paths, config_.sum_paths, keep_mix, keep_mlp);
  }
  return x;
}

template Var mamba_mlp_block<float>(Tape<float>&, Var, const MambaMlpBlockVars&, const ScanPaths&, bool, float, float);
template Var mamba_mlp_block<double>(Tape<double>&, Var, const MambaMlpBlockVars&, const ScanPaths&, bool, double,
                                     double);
template class Encoder<float>;
template class Encoder<double>;

}  // namespace clusterar
