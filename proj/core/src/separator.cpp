// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/separator.hpp"

#include <algorithm>
#include <cctype>

#include <stdexcept>

namespace clusterar {

std::string_view to_string(SeparatorValue v) {
  switch (v) {
    case SeparatorValue::Zeros: return "zeros";
    case SeparatorValue::Ones: return "ones";
    case SeparatorValue::Embeddings: return "embeddings";
    case SeparatorValue::Identity: return "identity";
  }
  return "?";
}

std::string_view to_string(LayoutKind k) {
  switch (k) {
    case LayoutKind::SC: return "sc";
    case LayoutKind::CS: return "cs";
    case LayoutKind::SCS: return "scs";
    case LayoutKind::CSC: return "csc";
    case LayoutKind::None: return "none";
  }
  return "?";
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::optional<SeparatorValue> parse_separator_value(std::string_view s) {
  for (auto v : {SeparatorValue::Zeros, SeparatorValue::Ones, SeparatorValue::Embeddings, SeparatorValue::Identity}) {
    if (iequals(s, to_string(v))) return v;
  }
  return std::nullopt;
}

std::optional<LayoutKind> parse_layout(std::string_view s) {
  for (auto k : {LayoutKind::SC, LayoutKind::CS, LayoutKind::SCS, LayoutKind::CSC, LayoutKind::None}) {
    if (iequals(s, to_string(k))) return k;
  }
  return std::nullopt;
}

std::optional<float> separator_pattern(const SeparatorSpec& spec, std::size_t slot) {
  switch (spec.value_kind) {
    case SeparatorValue::Zeros: return 0.0f;
    case SeparatorValue::Ones: return 1.0f;
    case SeparatorValue::Embeddings: return std::nullopt;
    case SeparatorValue::Identity: return slot / spec.cluster_cols == slot % spec.cluster_cols ? 1.0f : 0.0f;
  }
  return std::nullopt;
}

Matrix<float> make_separator(const SeparatorSpec& spec) {
  if (spec.embed_dim == 0) throw std::invalid_argument("make_separator: embed_dim must be at least 1");
  if (spec.cluster_rows == 0 || spec.cluster_cols == 0) throw std::invalid_argument("make_separator: empty cluster");
  if (spec.value_kind == SeparatorValue::Identity && spec.cluster_rows != spec.cluster_cols) {
    throw std::invalid_argument("make_separator: identity separator needs a square cluster, got " +
                                shape_string(spec.cluster_rows, spec.cluster_cols));
  }
  Matrix<float> out(spec.token_count(), spec.embed_dim);
  if (spec.value_kind == SeparatorValue::Embeddings) {
    if (!spec.embedding.empty() && spec.embedding.size() != spec.embed_dim) {
      throw std::invalid_argument("make_separator: embedding has length " + std::to_string(spec.embedding.size()) +
                                  ", expected " + std::to_string(spec.embed_dim));
    }
    if (!spec.embedding.empty()) {
      for (std::size_t r = 0; r < out.rows; ++r) std::copy(spec.embedding.begin(), spec.embedding.end(), out.row(r).begin());
    }
    return out;
  }
  for (std::size_t r = 0; r < out.rows; ++r) {
    const float v = *separator_pattern(spec, r);
    for (auto& x : out.row(r)) x = v;
  }
  return out;
}

std::vector<Slot> layout_plan(LayoutKind kind, std::size_t cluster_count, std::size_t cluster_side) {
  const bool dense = kind == LayoutKind::SCS || kind == LayoutKind::CSC;
  if (dense && (cluster_side == 0 || cluster_count % cluster_side != 0)) {
    throw std::invalid_argument("layout_plan: " + std::string(to_string(kind)) + " needs the cluster count " +
                                std::to_string(cluster_count) + " divisible by cluster_side " +
                                std::to_string(cluster_side));
  }
  std::vector<Slot> plan;
  const auto sep = Slot{true, 0};
  auto pixel = [](std::size_t i) { return Slot{false, static_cast<std::uint32_t>(i)}; };
  switch (kind) {
    case LayoutKind::SC:
      plan.push_back(sep);
      for (std::size_t i = 0; i < cluster_count; ++i) plan.push_back(pixel(i));
      break;
    case LayoutKind::CS:
      for (std::size_t i = 0; i < cluster_count; ++i) plan.push_back(pixel(i));
      plan.push_back(sep);
      break;
    case LayoutKind::SCS:
      for (std::size_t i = 0; i < cluster_count; ++i) {
        if (i % cluster_side == 0) plan.push_back(sep);
        plan.push_back(pixel(i));
      }
      break;
    case LayoutKind::CSC:
      for (std::size_t i = 0; i < cluster_count; ++i) {
        plan.push_back(pixel(i));
        if (i % cluster_side == cluster_side - 1) plan.push_back(sep);
      }
      break;
    case LayoutKind::None:
      for (std::size_t i = 0; i < cluster_count; ++i) plan.push_back(pixel(i));
      break;
  }
  return plan;
}

std::vector<std::uint32_t> PackedSequence::cluster_ids() const {
  std::vector<std::uint32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(t.meta.cluster_index);
  return ids;
}

namespace {

PackedSequence pack_impl(const std::vector<ClusterSequence>& images, const SeparatorSpec& spec, LayoutKind kind,
                         const PackOptions& options) {
  if (images.empty()) throw std::invalid_argument("pack: no images");
  if (images.size() > options.max_images) {
    throw std::invalid_argument("pack: " + std::to_string(images.size()) + " images exceeds the maximum of " +
                                std::to_string(options.max_images));
  }
  const auto& first = images.front();
  for (std::size_t i = 1; i < images.size(); ++i) {
    const auto& im = images[i];
    if (im.grid_h != first.grid_h || im.grid_w != first.grid_w || im.cluster_side != first.cluster_side ||
        im.patch_dim() != first.patch_dim()) {
      throw std::invalid_argument("pack: image " + std::to_string(i) + " geometry differs from image 0");
    }
  }
  const std::size_t per = first.tokens_per_cluster();
  Matrix<float> sep_tokens;
  if (kind != LayoutKind::None) {
    if (spec.cluster_rows != first.cluster_side || spec.cluster_cols != first.cluster_side) {
      throw std::invalid_argument("pack: separator cluster " + shape_string(spec.cluster_rows, spec.cluster_cols) +
                                  " does not match image clusters of side " + std::to_string(first.cluster_side));
    }
    sep_tokens = make_separator(spec);
  }
  const auto plan = layout_plan(kind, first.cluster_count(), first.cluster_side);

  PackedSequence out;
  out.separator = spec;
  out.layout = kind;
  out.restart_positions = options.restart_positions;
  out.num_images = images.size();
  out.clusters_per_image = first.cluster_count();
  out.cluster_side = first.cluster_side;
  out.grid_h = first.grid_h;
  out.grid_w = first.grid_w;
  out.patch_dim = first.patch_dim();
  out.slots_per_image = plan.size();
  out.tokens.reserve(images.size() * plan.size() * per);

  std::uint32_t global_cluster = 0;
  for (std::size_t img = 0; img < images.size(); ++img) {
    for (const auto& slot : plan) {
      for (std::size_t j = 0; j < per; ++j) {
        PackedToken tok;
        tok.meta.image_index = static_cast<std::uint32_t>(img);
        tok.meta.cluster_index = global_cluster;
        tok.meta.within_cluster_index = static_cast<std::uint32_t>(j);
        tok.meta.is_separator = slot.separator;
        if (slot.separator) {
          auto row = sep_tokens.row(j);
          tok.values.assign(row.begin(), row.end());
        } else {
          tok.meta.source_cluster = static_cast<std::int32_t>(slot.cluster);
          tok.meta.patch_index = static_cast<std::int32_t>(images[img].order[slot.cluster * per + j]);
          auto row = images[img].clusters[slot.cluster].row(j);
          tok.values.assign(row.begin(), row.end());
        }
        out.tokens.push_back(std::move(tok));
      }
      ++global_cluster;
    }
  }
  const auto ids = position_ids(out);
  for (std::size_t i = 0; i < ids.size(); ++i) out.tokens[i].meta.position_id = ids[i];
  return out;
}

}  // namespace

PackedSequence pack(const std::vector<ClusterSequence>& images, const SeparatorSpec& spec, LayoutKind kind,
                    const PackOptions& options) {
  if (kind == LayoutKind::None) throw std::invalid_argument("pack: use pack_single for separator-free input");
  return pack_impl(images, spec, kind, options);
}

PackedSequence pack_single(const ClusterSequence& image) {
  auto spec = SeparatorSpec::square(SeparatorValue::Zeros, image.cluster_side, 1);
  return pack_impl({image}, spec, LayoutKind::None, PackOptions{true, 1});
}

std::vector<std::uint32_t> position_ids(const PackedSequence& packed) {
  std::vector<std::uint32_t> ids;
  ids.reserve(packed.tokens.size());
  const auto stride = static_cast<std::uint32_t>(packed.positions_per_image());
  std::uint32_t current_image = 0;
  std::uint32_t next_pixel = 1;
  for (const auto& t : packed.tokens) {
    if (t.meta.image_index != current_image) {
      current_image = t.meta.image_index;
      next_pixel = 1;
    }
    const std::uint32_t local = t.meta.is_separator ? 0 : next_pixel++;
    ids.push_back(packed.restart_positions ? local : current_image * stride + local);
  }
  return ids;
}

}  // namespace clusterar
