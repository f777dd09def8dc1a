// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/image.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <stdexcept>
#include <string>

namespace clusterar {

namespace {

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

std::runtime_error io_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int ch = in.get();
    if (ch == EOF) break;
    if (ch == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open");
  if (ppm_token(in) != "P6") throw io_error(path, "not a binary PPM (P6)");
  const auto w = std::stoul(ppm_token(in));
  const auto h = std::stoul(ppm_token(in));
  const auto maxval = std::stoul(ppm_token(in));
  if (maxval == 0 || maxval > 255) throw io_error(path, "unsupported maxval " + std::to_string(maxval));
  Image img(h, w, 3);
  std::vector<unsigned char> raw(h * w * 3);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw io_error(path, "truncated pixel data");
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  if (image.channels != 3) throw std::invalid_argument("write_ppm: expected 3 channels, got " + std::to_string(image.channels));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path, "cannot open for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const float v = std::clamp(image.pixels[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw io_error(path, "write failed");
}

Image read_raw_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error(path, "cannot open");
  std::uint32_t header[4] = {};
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw io_error(path, "truncated header");
  if (header[0] != kRawTensorMagic) throw io_error(path, "bad magic");
  if (header[1] == 0 || header[2] == 0 || header[3] == 0) throw io_error(path, "zero-sized dimension");
  Image img(header[1], header[2], header[3]);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size() * sizeof(float))) {
    throw io_error(path, "truncated tensor data");
  }
  return img;
}

void write_raw_tensor(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error(path, "cannot open for writing");
  const std::uint32_t header[4] = {kRawTensorMagic, static_cast<std::uint32_t>(image.height),
                                   static_cast<std::uint32_t>(image.width), static_cast<std::uint32_t>(image.channels)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size() * sizeof(float)));
  if (!out) throw io_error(path, "write failed");
}

Image read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ppm") return read_ppm(path);
  if (ext == ".f32") return read_raw_tensor(path);
  throw io_error(path, "unsupported image format '" + ext + "' (expected .ppm or .f32)");
}

Image flip_horizontal(const Image& image) {
  Image out(image.height, image.width, image.channels);
  for (std::size_t r = 0; r < image.height; ++r)
    for (std::size_t c = 0; c < image.width; ++c)
      for (std::size_t ch = 0; ch < image.channels; ++ch) out.at(r, c, ch) = image.at(r, image.width - 1 - c, ch);
  return out;
}

Image crop(const Image& image, long top, long left, std::size_t h, std::size_t w) {
  Image out(h, w, image.channels);
  const long max_r = static_cast<long>(image.height) - 1;
  const long max_c = static_cast<long>(image.width) - 1;
  for (std::size_t r = 0; r < h; ++r) {
    const auto sr = static_cast<std::size_t>(std::clamp(top + static_cast<long>(r), 0L, max_r));
    for (std::size_t c = 0; c < w; ++c) {
      const auto sc = static_cast<std::size_t>(std::clamp(left + static_cast<long>(c), 0L, max_c));
      for (std::size_t ch = 0; ch < image.channels; ++ch) out.at(r, c, ch) = image.at(sr, sc, ch);
    }
  }
  return out;
}

}  // namespace clusterar
