// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/model.hpp"

#include "clusterar/patching.hpp"

namespace clusterar {
namespace {

std::size_t positive(const Config& cfg, const std::string& key) {
  const std::size_t v = cfg.count(key);
  if (v == 0) throw ConfigError("config: " + key + " must be positive");
  return v;
}

}  // namespace

Geometry geometry_from(const Config& cfg) {
  Geometry g{positive(cfg, "geometry.image_size"), positive(cfg, "geometry.channels"),
             positive(cfg, "geometry.patch_size"), positive(cfg, "geometry.cluster_side")};
  if (g.image_size % (g.patch_size * g.cluster_side) != 0) {
    throw ConfigError("config: geometry.image_size " + std::to_string(g.image_size) +
                      " is not divisible by patch_size * cluster_side = " +
                      std::to_string(g.patch_size * g.cluster_side));
  }
  return g;
}

EncoderConfig encoder_config_from(const Config& cfg) {
  EncoderConfig e;
  e.width = positive(cfg, "model.width");
  e.depth = cfg.count("model.depth");
  e.state_dim = positive(cfg, "model.state_dim");
  e.mlp_ratio = positive(cfg, "model.mlp_ratio");
  const auto mode = parse_scan_mode(cfg.str("model.scan_mode"));
  if (!mode) throw ConfigError("config: model.scan_mode must be one or four");
  e.scan_mode = *mode;
  e.sum_paths = cfg.boolean("model.sum_paths");
  return e;
}

DecoderConfig decoder_config_from(const Config& cfg) {
  DecoderConfig d;
  d.layers = cfg.count("decoder.layers");
  d.width = positive(cfg, "decoder.width");
  d.heads = positive(cfg, "decoder.heads");
  d.self_attention = cfg.boolean("decoder.self_attention");
  if (d.width % d.heads != 0) throw ConfigError("config: decoder.width must be a multiple of decoder.heads");
  return d;
}

SeparatorSpec separator_spec_from(const Config& cfg) {
  const auto value = parse_separator_value(cfg.str("separator.value"));
  if (!value) throw ConfigError("config: separator.value must be zeros, ones, embeddings, or identity");
  return SeparatorSpec::square(*value, geometry_from(cfg).cluster_side, positive(cfg, "model.width"));
}

LayoutKind layout_from(const Config& cfg) {
  const auto layout = parse_layout(cfg.str("separator.layout"));
  if (!layout || *layout == LayoutKind::None) throw ConfigError("config: separator.layout must be SC, CS, SCS, or CSC");
  if (*layout == LayoutKind::SCS || *layout == LayoutKind::CSC) {
    const Geometry g = geometry_from(cfg);
    if (g.clusters() % g.cluster_side != 0) {
      throw ConfigError("config: separator.layout " + std::string(to_string(*layout)) + " needs the " +
                        std::to_string(g.clusters()) + " clusters per image divisible by cluster_side " +
                        std::to_string(g.cluster_side));
    }
  }
  return *layout;
}

PackOptions pack_options_from(const Config& cfg) {
  PackOptions o;
  o.restart_positions = cfg.boolean("separator.restart_positions");
  const std::size_t n = positive(cfg, "separator.images");
  o.max_images = std::max(o.max_images, n);
  return o;
}

TargetOptions target_options_from(const Config& cfg) {
  TargetOptions o;
  o.include_separator_targets = cfg.boolean("objective.include_separator_targets");
  return o;
}

std::size_t position_rows(const Config& cfg) {
  const Geometry g = geometry_from(cfg);
  const std::size_t per_image = g.pixel_tokens() + 1;
  return cfg.boolean("separator.restart_positions") ? per_image : per_image * positive(cfg, "separator.images");
}

const std::vector<std::string>& architecture_keys() {
  static const std::vector<std::string> keys = {
      "geometry.image_size", "geometry.channels",  "geometry.patch_size", "geometry.cluster_side",
      "model.width",         "model.depth",        "model.state_dim",     "model.mlp_ratio",
      "separator.restart_positions", "separator.images", "separator.value",
  };
  return keys;
}

PackedSequence pack_images(const std::vector<const Image*>& images, const Config& cfg,
                           const std::vector<float>& separator_embedding) {
  const Geometry g = geometry_from(cfg);
  std::vector<ClusterSequence> seqs;
  seqs.reserve(images.size());
  for (const Image* img : images) {
    if (img->height != g.image_size || img->width != g.image_size || img->channels != g.channels) {
      throw ConfigError("corpus image is " + std::to_string(img->height) + "x" + std::to_string(img->width) + "x" +
                        std::to_string(img->channels) + ", configuration expects " + std::to_string(g.image_size) +
                        "x" + std::to_string(g.image_size) + "x" + std::to_string(g.channels));
    }
    seqs.push_back(image_to_clusters(*img, g.patch_size, g.cluster_side));
  }
  SeparatorSpec spec = separator_spec_from(cfg);
  spec.embedding = separator_embedding;
  return pack(seqs, spec, layout_from(cfg), pack_options_from(cfg));
}

template <typename T>
PretrainModel<T>::PretrainModel(const Config& cfg)
    : store(),
      encoder(store, encoder_config_from(cfg), geometry_from(cfg).patch_dim(), position_rows(cfg),
              separator_spec_from(cfg).value_kind == SeparatorValue::Embeddings),
      decoder(store, decoder_config_from(cfg), encoder_config_from(cfg).width, geometry_from(cfg).patch_dim()) {
  store.initialize(derive_seed(static_cast<std::uint64_t>(cfg.integer("seed")), 0x1417));
}

template <typename T>
Var PretrainModel<T>::predict(Tape<T>& t, const PackedSequence& packed) const {
  const Var features = encoder.encode(t, packed, EncodeOptions::with_mode(ScanMode::OneScan));
  return decoder.decode(t, features, build_mask(packed.cluster_ids()));
}

template <typename T>
Var PretrainModel<T>::loss(Tape<T>& t, const PackedSequence& packed, const TargetPlan& plan) const {
  return cluster_loss(t, predict(t, packed), plan);
}

template <typename T>
std::vector<float> PretrainModel<T>::separator_embedding() const {
  const Parameter<T>* p = encoder.separator_embedding();
  if (p == nullptr) return {};
  return p->value.template cast<float>().data;
}

std::string_view to_string(ClassTokenPolicy p) { return p == ClassTokenPolicy::Tail ? "tail" : "middle"; }

std::optional<ClassTokenPolicy> parse_class_token(std::string_view s) {
  if (s == "tail") return ClassTokenPolicy::Tail;
  if (s == "middle") return ClassTokenPolicy::Middle;
  return std::nullopt;
}

std::size_t class_token_index(ClassTokenPolicy policy, std::size_t n) {
  return policy == ClassTokenPolicy::Tail ? n : n / 2;
}

template <typename T>
Classifier<T>::Classifier(const Config& cfg, std::size_t classes, ClassTokenPolicy policy)
    : store(),
      encoder(store, encoder_config_from(cfg), geometry_from(cfg).patch_dim(), position_rows(cfg),
              separator_spec_from(cfg).value_kind == SeparatorValue::Embeddings),
      classes_(classes),
      policy_(policy) {
  if (classes == 0) throw ConfigError("classifier: need at least one class");
  const std::size_t D = encoder.config().width;
  const int top = static_cast<int>(encoder.config().depth) + 1;
  cls_ = &store.add("classifier.cls_token", 1, D, Init::Normal002, false, 0);
  norm_g_ = &store.add("classifier.norm.weight", 1, D, Init::Ones, false, top);
  norm_b_ = &store.add("classifier.norm.bias", 1, D, Init::Zeros, false, top);
  head_w_ = &store.add("classifier.head.weight", classes, D, Init::SmallXavier, true, top);
  head_b_ = &store.add("classifier.head.bias", 1, classes, Init::Zeros, false, top);
  store.initialize(derive_seed(static_cast<std::uint64_t>(cfg.integer("seed")), 0xc1a5));
}

template <typename T>
Var Classifier<T>::features(Tape<T>& t, const PackedSequence& image, const std::vector<double>& branch_keep) const {
  EncodeOptions opts;
  opts.scan_mode = ScanMode::FourScan;
  opts.class_token = t.param(*cls_);
  opts.class_token_index = class_token_index(policy_, image.token_count());
  opts.branch_keep = branch_keep;
  return encoder.encode(t, image, opts);
}

template <typename T>
Var Classifier<T>::logits(Tape<T>& t, const PackedSequence& image, const std::vector<double>& branch_keep) const {
  const Var f = features(t, image, branch_keep);
  const Var cls = gather_rows(t, f, {static_cast<std::uint32_t>(class_token_index(policy_, image.token_count()))});
  const Var h = layer_norm(t, cls, t.param(*norm_g_), t.param(*norm_b_));
  return linear(t, h, t.param(*head_w_), t.param(*head_b_));
}

template class PretrainModel<float>;
template class PretrainModel<double>;
template class Classifier<float>;
template class Classifier<double>;

}  // namespace clusterar
