// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "clusterar/data.hpp"
#include "oracles.hpp"

using namespace clusterar;

TEST_CASE("corpus is deterministic per seed and labels cycle") {
  const auto a = make_shape_corpus(7, 12, 4, 16, 3);
  const auto b = make_shape_corpus(7, 12, 4, 16, 3);
  const auto c = make_shape_corpus(8, 12, 4, 16, 3);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(a[i].image == b[i].image);
    CHECK(a[i].label == static_cast<int>(i % 4));
  }
  CHECK_FALSE(a[0].image == c[0].image);
  // Images are addressed by index, so a later slice matches the full run.
  const auto tail = make_shape_corpus(7, 4, 4, 16, 3, 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(tail[i].image == a[8 + i].image);
}

TEST_CASE("class counts over 400 images") {
  const auto s = make_shape_corpus(1, 400, 4, 16, 1);
  std::vector<int> counts(4, 0);
  for (const auto& x : s) ++counts[static_cast<std::size_t>(x.label)];
  CHECK(counts == std::vector<int>{100, 100, 100, 100});
}

TEST_CASE("shapes have a visible foreground") {
  for (const auto& s : make_shape_corpus(3, 8, 4, 32, 3)) {
    float lo = 1.0f, hi = 0.0f;
    for (float v : s.image.pixels) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(hi - lo > 0.2f);
  }
}

TEST_CASE("write and read a PPM corpus") {
  oracle::TempDir dir("corpus_ppm");
  const auto s = make_shape_corpus(2, 6, 3, 8, 3);
  write_corpus(dir.path(), s);
  const auto back = read_corpus(dir.path());
  REQUIRE(back.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(back[i].label == s[i].label);
    for (std::size_t k = 0; k < s[i].image.pixels.size(); ++k) {
      CHECK(std::abs(back[i].image.pixels[k] - s[i].image.pixels[k]) <= 0.5f / 255.0f + 1e-6f);
    }
  }
}

TEST_CASE("write and read a raw-tensor corpus exactly") {
  oracle::TempDir dir("corpus_f32");
  const auto s = make_shape_corpus(2, 5, 4, 8, 1);
  write_corpus(dir.path(), s);
  const auto back = read_corpus(dir.path());
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back[i].image == s[i].image);
    CHECK(back[i].label == s[i].label);
  }
}

TEST_CASE("empty corpus") {
  oracle::TempDir dir("corpus_empty");
  const auto manifest = write_corpus(dir / "c", {});
  CHECK(oracle::slurp(manifest).empty());
  CHECK(read_corpus(dir / "c").empty());
}

TEST_CASE("folder without a manifest is read with label 0") {
  oracle::TempDir dir("corpus_folder");
  Image img(4, 4, 3, 0.5f);
  write_ppm(dir / "b.ppm", img);
  write_ppm(dir / "a.ppm", img);
  const auto s = read_corpus(dir.path());
  REQUIRE(s.size() == 2);
  CHECK(s[0].label == 0);
}

TEST_CASE("malformed image files are rejected") {
  oracle::TempDir dir("corpus_bad");
  std::ofstream(dir / "x.ppm") << "P3\n1 1\n255\n0 0 0\n";
  CHECK_THROWS(read_ppm(dir / "x.ppm"));
  std::ofstream(dir / "y.f32") << "junk";
  CHECK_THROWS(read_raw_tensor(dir / "y.f32"));
}

TEST_CASE("flip and crop") {
  Image img(2, 3, 1);
  for (std::size_t i = 0; i < 6; ++i) img.pixels[i] = static_cast<float>(i);
  const Image f = flip_horizontal(img);
  CHECK(f.pixels == std::vector<float>{2, 1, 0, 5, 4, 3});
  CHECK(flip_horizontal(f) == img);
  const Image c = crop(img, -1, 1, 2, 3);
  CHECK(c.pixels == std::vector<float>{1, 2, 2, 1, 2, 2});
}

TEST_CASE("augment keeps the size and is seed-deterministic") {
  const Image img = make_shape_image(1, 0, 2, 16, 3);
  Rng a(5), b(5);
  const Image x = augment(img, 2, true, a);
  const Image y = augment(img, 2, true, b);
  CHECK(x == y);
  CHECK(x.height == 16);
  CHECK(x.width == 16);
  Rng r(9);
  CHECK(augment(img, 0, false, r) == img);
}
