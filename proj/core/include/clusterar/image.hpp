// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace clusterar {

/// Interleaved (row, col, channel) float image with values in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float& at(std::size_t r, std::size_t col, std::size_t ch) { return pixels[(r * width + col) * channels + ch]; }
  [[nodiscard]] float at(std::size_t r, std::size_t col, std::size_t ch) const {
    return pixels[(r * width + col) * channels + ch];
  }

  bool operator==(const Image&) const = default;
};

// Binary PPM ("P6", maxval 255). Channels must be 3 on write.
Image read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Image& image);

/// Raw tensor file: 16-byte little-endian header {magic, H, W, C} as uint32
/// followed by H*W*C float32 values in (row, col, channel) order.
inline constexpr std::uint32_t kRawTensorMagic = 0x31544643;  // "CFT1"
Image read_raw_tensor(const std::filesystem::path& path);
void write_raw_tensor(const std::filesystem::path& path, const Image& image);

/// Dispatches on extension: .ppm or .f32.
Image read_image(const std::filesystem::path& path);

Image flip_horizontal(const Image& image);
/// Copies the h×w window at (top, left); out-of-range coordinates clamp to
/// the nearest edge pixel.
Image crop(const Image& image, long top, long left, std::size_t h, std::size_t w);

}  // namespace clusterar
