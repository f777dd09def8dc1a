// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/decoder.hpp"

#include <stdexcept>

namespace clusterar {

BlockCausalMask build_mask(std::span<const std::uint32_t> cluster_ids) {
  const std::size_t n = cluster_ids.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (cluster_ids[i] < cluster_ids[i - 1]) {
      throw std::invalid_argument("build_mask: cluster ids decrease at token " + std::to_string(i));
    }
  }
  auto allow = std::make_shared<std::vector<std::uint8_t>>(n * n, 0);
  // Ids are sorted, so the visible keys of q form the prefix ending with
  // q's cluster.
  std::size_t end = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if (q == end) {
      while (end < n && cluster_ids[end] == cluster_ids[q]) ++end;
    }
    std::fill_n(allow->begin() + static_cast<std::ptrdiff_t>(q * n), end, std::uint8_t{1});
  }
  return BlockCausalMask{{cluster_ids.begin(), cluster_ids.end()}, std::move(allow)};
}

std::string BlockCausalMask::render() const {
  std::string out;
  const std::size_t n = size();
  out.reserve(n * (2 * n + 1));
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t k = 0; k < n; ++k) out += (*this)(q, k) ? "#" : "·";
    out += '\n';
  }
  return out;
}

template <typename T>
typename Decoder<T>::Attn Decoder<T>::make_attn(ParamStore<T>& store, const std::string& p, std::size_t kv_in) {
  const std::size_t W = config_.width;
  Attn a{};
  a.norm_g = &store.add(p + "norm.weight", 1, W, Init::Ones, false, 0);
  a.norm_b = &store.add(p + "norm.bias", 1, W, Init::Zeros, false, 0);
  a.q_w = &store.add(p + "q.weight", W, W, Init::Xavier, true, 0);
  a.q_b = &store.add(p + "q.bias", 1, W, Init::Zeros, false, 0);
  a.k_w = &store.add(p + "k.weight", W, kv_in, Init::Xavier, true, 0);
  a.k_b = &store.add(p + "k.bias", 1, W, Init::Zeros, false, 0);
  a.v_w = &store.add(p + "v.weight", W, kv_in, Init::Xavier, true, 0);
  a.v_b = &store.add(p + "v.bias", 1, W, Init::Zeros, false, 0);
  a.o_w = &store.add(p + "o.weight", W, W, Init::Xavier, true, 0);
  a.o_b = &store.add(p + "o.bias", 1, W, Init::Zeros, false, 0);
  return a;
}

template <typename T>
Decoder<T>::Decoder(ParamStore<T>& store, const DecoderConfig& config, std::size_t encoder_width,
                    std::size_t patch_dim, const std::string& prefix)
    : config_(config), encoder_width_(encoder_width), patch_dim_(patch_dim) {
  const std::size_t W = config.width;
  if (W == 0 || config.heads == 0 || W % config.heads != 0) {
    throw std::invalid_argument("Decoder: width " + std::to_string(W) + " must be a positive multiple of heads " +
                                std::to_string(config.heads));
  }
  in_w_ = &store.add(prefix + "in_proj.weight", W, encoder_width, Init::Xavier, true, 0);
  in_b_ = &store.add(prefix + "in_proj.bias", 1, W, Init::Zeros, false, 0);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string p = prefix + "layers." + std::to_string(l) + ".";
    Layer layer{};
    if (config.self_attention) layer.self_attn = make_attn(store, p + "self_attn.", W);
    layer.mem_norm_g = &store.add(p + "cross_attn.memory_norm.weight", 1, encoder_width, Init::Ones, false, 0);
    layer.mem_norm_b = &store.add(p + "cross_attn.memory_norm.bias", 1, encoder_width, Init::Zeros, false, 0);
    layer.cross_attn = make_attn(store, p + "cross_attn.", encoder_width);
    layer.mlp_norm_g = &store.add(p + "mlp.norm.weight", 1, W, Init::Ones, false, 0);
    layer.mlp_norm_b = &store.add(p + "mlp.norm.bias", 1, W, Init::Zeros, false, 0);
    layer.fc1_w = &store.add(p + "mlp.fc1.weight", 4 * W, W, Init::Xavier, true, 0);
    layer.fc1_b = &store.add(p + "mlp.fc1.bias", 1, 4 * W, Init::Zeros, false, 0);
    layer.fc2_w = &store.add(p + "mlp.fc2.weight", W, 4 * W, Init::Xavier, true, 0);
    layer.fc2_b = &store.add(p + "mlp.fc2.bias", 1, W, Init::Zeros, false, 0);
    layers_.push_back(layer);
  }
  out_norm_g_ = &store.add(prefix + "norm.weight", 1, W, Init::Ones, false, 0);
  out_norm_b_ = &store.add(prefix + "norm.bias", 1, W, Init::Zeros, false, 0);
  head_w_ = &store.add(prefix + "head.weight", patch_dim, W, Init::Xavier, true, 0);
  head_b_ = &store.add(prefix + "head.bias", 1, patch_dim, Init::Zeros, false, 0);
}

template <typename T>
Var Decoder<T>::decode(Tape<T>& t, Var features, const BlockCausalMask& mask) const {
  const auto& fv = t.value(features);
  if (fv.rows != mask.size()) {
    throw std::invalid_argument("decode: " + std::to_string(fv.rows) + " feature rows for a mask of size " +
                                std::to_string(mask.size()));
  }
  if (fv.cols != encoder_width_) throw std::invalid_argument("decode: feature width mismatch");
  auto attend = [&](const Attn& a, Var x, Var kv_source) {
    const Var q = linear(t, layer_norm(t, x, t.param(*a.norm_g), t.param(*a.norm_b)), t.param(*a.q_w), t.param(*a.q_b));
    const Var k = linear(t, kv_source, t.param(*a.k_w), t.param(*a.k_b));
    const Var v = linear(t, kv_source, t.param(*a.v_w), t.param(*a.v_b));
    const Var o = attention(t, q, k, v, mask.allow, config_.heads);
    return add(t, x, linear(t, o, t.param(*a.o_w), t.param(*a.o_b)));
  };
  Var x = linear(t, features, t.param(*in_w_), t.param(*in_b_));
  for (const auto& layer : layers_) {
    if (config_.self_attention) {
      const Attn& a = layer.self_attn;
      const Var normed = layer_norm(t, x, t.param(*a.norm_g), t.param(*a.norm_b));
      const Var q = linear(t, normed, t.param(*a.q_w), t.param(*a.q_b));
      const Var k = linear(t, normed, t.param(*a.k_w), t.param(*a.k_b));
      const Var v = linear(t, normed, t.param(*a.v_w), t.param(*a.v_b));
      x = add(t, x, linear(t, attention(t, q, k, v, mask.allow, config_.heads), t.param(*a.o_w), t.param(*a.o_b)));
    }
    const Var memory = layer_norm(t, features, t.param(*layer.mem_norm_g), t.param(*layer.mem_norm_b));
    x = attend(layer.cross_attn, x, memory);
    const Var h = layer_norm(t, x, t.param(*layer.mlp_norm_g), t.param(*layer.mlp_norm_b));
    const Var m = linear(t, gelu(t, linear(t, h, t.param(*layer.fc1_w), t.param(*layer.fc1_b))), t.param(*layer.fc2_w),
                         t.param(*layer.fc2_b));
    x = add(t, x, m);
  }
  x = layer_norm(t, x, t.param(*out_norm_g_), t.param(*out_norm_b_));
  return linear(t, x, t.param(*head_w_), t.param(*head_b_));
}

template class Decoder<float>;
template class Decoder<double>;

}  // namespace clusterar
