// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace clusterar {
namespace {

bool inside(Shape shape, double y, double x, double cy, double cx, double r) {
  const double dy = y - cy;
  const double dx = x - cx;
  switch (shape) {
    case Shape::Square: return std::abs(dy) <= r * 0.8 && std::abs(dx) <= r * 0.8;
    case Shape::Circle: return dy * dy + dx * dx <= r * r;
    case Shape::Triangle: {
      // Apex up; base at cy + r.
      if (dy < -r || dy > r) return false;
      const double half = (dy + r) * 0.5;
      return std::abs(dx) <= half;
    }
    case Shape::Cross: {
      const double arm = std::max(0.5, r * 0.3);
      return (std::abs(dy) <= arm && std::abs(dx) <= r) || (std::abs(dx) <= arm && std::abs(dy) <= r);
    }
  }
  return false;
}

}  // namespace

Image make_shape_image(std::uint64_t seed, std::size_t index, int label, std::size_t size, std::size_t channels) {
  if (size == 0 || channels == 0) throw std::invalid_argument("make_shape_image: empty geometry");
  Rng rng(derive_seed(seed, 0x5a4b, index));
  const auto shape = static_cast<Shape>(static_cast<std::size_t>(label) % kShapeClasses);
  std::vector<float> bg(channels);
  std::vector<float> fg(channels);
  for (std::size_t c = 0; c < channels; ++c) bg[c] = static_cast<float>(rng.uniform(0.0, 0.35));
  for (std::size_t c = 0; c < channels; ++c) fg[c] = static_cast<float>(rng.uniform(0.6, 1.0));
  const double s = static_cast<double>(size);
  const double r = s * rng.uniform(0.25, 0.4);
  const double cy = rng.uniform(r, s - r);
  const double cx = rng.uniform(r, s - r);
  Image img(size, size, channels);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const bool on = inside(shape, static_cast<double>(y) + 0.5, static_cast<double>(x) + 0.5, cy, cx, r);
      for (std::size_t c = 0; c < channels; ++c) img.at(y, x, c) = on ? fg[c] : bg[c];
    }
  }
  return img;
}

std::vector<Sample> make_shape_corpus(std::uint64_t seed, std::size_t count, std::size_t classes, std::size_t size,
                                      std::size_t channels, std::size_t first_index) {
  if (classes == 0 || classes > kShapeClasses) {
    throw std::invalid_argument("make_shape_corpus: classes must be in [1, " + std::to_string(kShapeClasses) + "]");
  }
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = first_index; i < first_index + count; ++i) {
    const int label = static_cast<int>(i % classes);
    out.push_back({make_shape_image(seed, i, label, size, channels), label});
  }
  return out;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<Sample>& samples) {
  std::filesystem::create_directories(dir);
  const auto manifest = dir / "manifest.txt";
  std::ofstream out(manifest, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("write_corpus: cannot write " + manifest.string());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    const bool ppm = samples[i].image.channels == 3;
    std::snprintf(name, sizeof name, "img_%06zu.%s", i, ppm ? "ppm" : "f32");
    if (ppm) {
      write_ppm(dir / name, samples[i].image);
    } else {
      write_raw_tensor(dir / name, samples[i].image);
    }
    out << name << ' ' << samples[i].label << '\n';
  }
  if (!out) throw std::runtime_error("write_corpus: write failed for " + manifest.string());
  return manifest;
}

std::vector<Sample> read_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("read_corpus: no directory " + dir.string());
  std::vector<Sample> out;
  const auto manifest = dir / "manifest.txt";
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string name;
      int label = 0;
      if (!(ls >> name >> label)) {
        throw std::runtime_error(manifest.string() + ":" + std::to_string(line_no) + ": expected 'filename label'");
      }
      out.push_back({read_image(dir / name), label});
    }
    return out;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext == ".ppm" || ext == ".f32") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) out.push_back({read_image(f), 0});
  return out;
}

Image augment(const Image& image, std::size_t pad, bool flip, Rng& rng) {
  Image out = image;
  if (pad > 0) {
    const long p = static_cast<long>(pad);
    const long top = static_cast<long>(rng.below(2 * pad + 1)) - p;
    const long left = static_cast<long>(rng.below(2 * pad + 1)) - p;
    out = crop(image, top, left, image.height, image.width);
  }
  if (flip && rng.below(2) == 1) out = flip_horizontal(out);
  return out;
}

}  // namespace clusterar
