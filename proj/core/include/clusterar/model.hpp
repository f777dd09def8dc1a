// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clusterar/config.hpp"
#include "clusterar/data.hpp"
#include "clusterar/decoder.hpp"
#include "clusterar/encoder.hpp"
#include "clusterar/objective.hpp"
#include "clusterar/separator.hpp"

namespace clusterar {

/// Typed views of a Config. Each throws ConfigError on inconsistent values.
struct Geometry {
  std::size_t image_size = 0;
  std::size_t channels = 0;
  std::size_t patch_size = 0;
  std::size_t cluster_side = 0;

  [[nodiscard]] std::size_t grid() const { return image_size / patch_size; }
  [[nodiscard]] std::size_t patch_dim() const { return patch_size * patch_size * channels; }
  [[nodiscard]] std::size_t clusters() const {
    const std::size_t g = grid() / cluster_side;
    return g * g;
  }
  [[nodiscard]] std::size_t pixel_tokens() const { return grid() * grid(); }
};

Geometry geometry_from(const Config& cfg);
EncoderConfig encoder_config_from(const Config& cfg);
DecoderConfig decoder_config_from(const Config& cfg);
SeparatorSpec separator_spec_from(const Config& cfg);
LayoutKind layout_from(const Config& cfg);
PackOptions pack_options_from(const Config& cfg);
TargetOptions target_options_from(const Config& cfg);

/// Rows of the positional table: one image's ids when positions restart,
/// otherwise the whole packed range.
std::size_t position_rows(const Config& cfg);

/// Keys that fix parameter shapes; a checkpoint only loads into a model
/// whose configuration agrees on all of them.
const std::vector<std::string>& architecture_keys();

/// Clusters every image (after checking geometry) and packs them.
PackedSequence pack_images(const std::vector<const Image*>& images, const Config& cfg,
                           const std::vector<float>& separator_embedding = {});

/// Encoder plus decoder for next-cluster pretraining.
template <typename T>
class PretrainModel {
 public:
  explicit PretrainModel(const Config& cfg);
  PretrainModel(const PretrainModel&) = delete;
  PretrainModel& operator=(const PretrainModel&) = delete;

  /// Weighted next-cluster loss of one packed sequence (1×1).
  Var loss(Tape<T>& t, const PackedSequence& packed, const TargetPlan& plan) const;
  Var predict(Tape<T>& t, const PackedSequence& packed) const;

  /// Current value of the learnable separator vector, if any.
  [[nodiscard]] std::vector<float> separator_embedding() const;

  ParamStore<T> store;
  Encoder<T> encoder;
  Decoder<T> decoder;
};

enum class ClassTokenPolicy : std::uint8_t { Tail, Middle };

std::string_view to_string(ClassTokenPolicy p);
std::optional<ClassTokenPolicy> parse_class_token(std::string_view s);

/// Tail: after all n tokens; Middle: at floor(n / 2).
std::size_t class_token_index(ClassTokenPolicy policy, std::size_t n);

/// Encoder in four-scan mode with a learnable class token and a
/// LayerNorm + linear head read from the class-token feature.
template <typename T>
class Classifier {
 public:
  Classifier(const Config& cfg, std::size_t classes, ClassTokenPolicy policy);
  Classifier(const Classifier&) = delete;
  Classifier& operator=(const Classifier&) = delete;

  /// Logits (1×classes). `branch_keep` holds per-block residual scales
  /// for stochastic depth; empty means deterministic.
  Var logits(Tape<T>& t, const PackedSequence& image, const std::vector<double>& branch_keep = {}) const;

  /// Encoder features including the class token row.
  Var features(Tape<T>& t, const PackedSequence& image, const std::vector<double>& branch_keep = {}) const;

  [[nodiscard]] std::size_t classes() const { return classes_; }
  [[nodiscard]] ClassTokenPolicy policy() const { return policy_; }
  [[nodiscard]] int max_layer() const { return static_cast<int>(encoder.config().depth) + 1; }

  ParamStore<T> store;
  Encoder<T> encoder;

 private:
  std::size_t classes_;
  ClassTokenPolicy policy_;
  Parameter<T>* cls_;
  Parameter<T>* norm_g_;
  Parameter<T>* norm_b_;
  Parameter<T>* head_w_;
  Parameter<T>* head_b_;
};

}  // namespace clusterar
