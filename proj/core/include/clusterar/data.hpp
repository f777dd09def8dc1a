// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clusterar/image.hpp"
#include "clusterar/rng.hpp"

namespace clusterar {

enum class Shape : std::uint8_t { Square = 0, Circle = 1, Triangle = 2, Cross = 3 };
inline constexpr std::size_t kShapeClasses = 4;

struct Sample {
  Image image;
  int label = 0;
};

/// Synthetic image `index`: one filled shape of class `label % classes` on
/// a plain background, with colors, size, and placement drawn from a stream
/// keyed by (seed, index).
Image make_shape_image(std::uint64_t seed, std::size_t index, int label, std::size_t size, std::size_t channels);

/// Labels cycle through the classes: image i has label i % classes.
std::vector<Sample> make_shape_corpus(std::uint64_t seed, std::size_t count, std::size_t classes, std::size_t size,
                                      std::size_t channels, std::size_t first_index = 0);

/// Writes images (PPM for 3 channels, raw .f32 otherwise) and manifest.txt
/// with one "filename label" line per image. Returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<Sample>& samples);

/// Reads manifest.txt, or every .ppm/.f32 file (label 0) when it is absent.
std::vector<Sample> read_corpus(const std::filesystem::path& dir);

/// Random crop after edge padding by `pad` pixels, then a coin-flip
/// horizontal flip. The output keeps the input size.
Image augment(const Image& image, std::size_t pad, bool flip, Rng& rng);

}  // namespace clusterar
