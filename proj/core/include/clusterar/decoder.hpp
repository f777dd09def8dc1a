// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clusterar/autograd.hpp"
#include "clusterar/params.hpp"

namespace clusterar {

/// allow(q, k) is true iff cluster_id(k) <= cluster_id(q): bidirectional
/// inside a cluster, causal across clusters.
struct BlockCausalMask {
  std::vector<std::uint32_t> cluster_ids;
  std::shared_ptr<const std::vector<std::uint8_t>> allow;  // size() × size(), row-major

  [[nodiscard]] std::size_t size() const { return cluster_ids.size(); }
  [[nodiscard]] bool operator()(std::size_t q, std::size_t k) const { return (*allow)[q * size() + k] != 0; }
  /// One text row per query: '#' where attention is allowed, '·' elsewhere.
  [[nodiscard]] std::string render() const;
};

/// Throws std::invalid_argument if the ids ever decrease.
BlockCausalMask build_mask(std::span<const std::uint32_t> cluster_ids);

struct DecoderConfig {
  std::size_t layers = 4;
  std::size_t width = 512;
  std::size_t heads = 8;
  bool self_attention = true;
};

/// Cross-attention decoder. Queries are the encoder features projected to
/// the decoder width; every attention uses the block-causal mask. The head
/// emits, at (cluster i, slot j), the prediction of token j of cluster i+1.
template <typename T>
class Decoder {
 public:
  Decoder(ParamStore<T>& store, const DecoderConfig& config, std::size_t encoder_width, std::size_t patch_dim,
          const std::string& prefix = "decoder.");

  Var decode(Tape<T>& t, Var features, const BlockCausalMask& mask) const;

  [[nodiscard]] const DecoderConfig& config() const { return config_; }

 private:
  struct Attn {
    Parameter<T>*norm_g, *norm_b, *q_w, *q_b, *k_w, *k_b, *v_w, *v_b, *o_w, *o_b;
  };
  struct Layer {
    Attn self_attn;
    Attn cross_attn;
    Parameter<T>*mem_norm_g, *mem_norm_b;
    Parameter<T>*mlp_norm_g, *mlp_norm_b, *fc1_w, *fc1_b, *fc2_w, *fc2_b;
  };

  Attn make_attn(ParamStore<T>& store, const std::string& p, std::size_t kv_in);

  DecoderConfig config_;
  std::size_t encoder_width_;
  std::size_t patch_dim_;
  Parameter<T>*in_w_, *in_b_;
  std::vector<Layer> layers_;
  Parameter<T>*out_norm_g_, *out_norm_b_, *head_w_, *head_b_;
};

}  // namespace clusterar
