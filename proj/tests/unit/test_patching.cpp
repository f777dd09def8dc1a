// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>
#include <set>

#include "clusterar/patching.hpp"

using namespace clusterar;

namespace {

Image ramp(std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i) / 4096.0f;
  return img;
}

// (cluster row, cluster col, inner row, inner col), all row-major.
std::vector<std::uint32_t> nested_order(std::size_t gh, std::size_t gw, std::size_t side) {
  std::vector<std::uint32_t> out;
  for (std::size_t cr = 0; cr < gh / side; ++cr)
    for (std::size_t cc = 0; cc < gw / side; ++cc)
      for (std::size_t ir = 0; ir < side; ++ir)
        for (std::size_t ic = 0; ic < side; ++ic)
          out.push_back(static_cast<std::uint32_t>((cr * side + ir) * gw + cc * side + ic));
  return out;
}

}  // namespace

TEST_CASE("patchify: 192x192x3 gives a 12x12 grid of 768-vectors") {
  const PatchGrid g = patchify(Image(192, 192, 3, 0.25f), 16);
  CHECK(g.grid_h == 12);
  CHECK(g.grid_w == 12);
  CHECK(g.count() == 144);
  CHECK(g.patch_dim() == 768);
}

TEST_CASE("patchify: single zero patch") {
  const PatchGrid g = patchify(Image(16, 16, 1, 0.0f), 16);
  REQUIRE(g.count() == 1);
  for (float v : g.patches.data) CHECK(v == 0.0f);
}

TEST_CASE("patchify: matches nested-loop extraction") {
  const Image img = ramp(32, 32, 1);
  const PatchGrid g = patchify(img, 16);
  REQUIRE(g.count() == 4);
  for (std::size_t pr = 0; pr < 2; ++pr)
    for (std::size_t pc = 0; pc < 2; ++pc)
      for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
          const float want = static_cast<float>((pr * 16 + r) * 32 + pc * 16 + c) / 4096.0f;
          CHECK(g.patches(pr * 2 + pc, r * 16 + c) == want);
        }
}

TEST_CASE("patchify: multichannel element order is (row, col, channel)") {
  const Image img = ramp(8, 8, 3);
  const PatchGrid g = patchify(img, 4);
  const auto p = g.patches.row(3);  // grid (1, 1)
  CHECK(p[0] == img.at(4, 4, 0));
  CHECK(p[2] == img.at(4, 4, 2));
  CHECK(p[3] == img.at(4, 5, 0));
  CHECK(p[47] == img.at(7, 7, 2));
}

TEST_CASE("patchify: non-divisible axis is named") {
  CHECK_THROWS_WITH_AS(patchify(Image(16, 18, 1), 4), doctest::Contains("width"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(patchify(Image(18, 16, 1), 4), doctest::Contains("height"), std::invalid_argument);
}

TEST_CASE("cluster order: 12x12 grid, side 4") {
  const ClusterSequence s = clusterize(patchify(Image(192, 192, 3), 16), 4);
  CHECK(s.cluster_count() == 9);
  CHECK(s.tokens_per_cluster() == 16);
  CHECK(s.token_count() == 144);
}

TEST_CASE("cluster order: one cluster is the identity") {
  const auto order = cluster_priority_order(4, 4, 4);
  std::vector<std::uint32_t> id(16);
  std::iota(id.begin(), id.end(), 0u);
  CHECK(order == id);
}

TEST_CASE("cluster order: 8x8 grid matches nested enumeration") {
  const auto order = cluster_priority_order(8, 8, 4);
  CHECK(order[16] == 4);
  CHECK(order == nested_order(8, 8, 4));
}

TEST_CASE("cluster order: bijection for rectangular grids") {
  for (auto [gh, gw, side] : {std::tuple{6, 9, 3}, {4, 8, 2}, {2, 2, 1}, {12, 12, 4}}) {
    const auto order = cluster_priority_order(gh, gw, side);
    CHECK(order == nested_order(gh, gw, side));
    const std::set<std::uint32_t> seen(order.begin(), order.end());
    CHECK(seen.size() == static_cast<std::size_t>(gh * gw));
    CHECK(*seen.rbegin() == static_cast<std::uint32_t>(gh * gw - 1));
  }
}

TEST_CASE("clusterize: non-divisible grid rejected") {
  CHECK_THROWS_AS(clusterize(patchify(Image(12, 12, 1), 4), 2), std::invalid_argument);
}

TEST_CASE("clusterize then unclusterize is the identity") {
  const PatchGrid g = patchify(ramp(24, 48, 2), 4);
  const ClusterSequence s = clusterize(g, 3);
  CHECK(s.cluster_count() == 8);
  CHECK(unclusterize(s) == g);
}

TEST_CASE("clusters hold the patches named by the order") {
  const PatchGrid g = patchify(ramp(16, 16, 1), 2);
  const ClusterSequence s = image_to_clusters(ramp(16, 16, 1), 2, 2);
  for (std::size_t l = 0; l < s.cluster_count(); ++l)
    for (std::size_t j = 0; j < 4; ++j) {
      const auto want = g.patches.row(s.order[l * 4 + j]);
      const auto got = s.clusters[l].row(j);
      CHECK(std::equal(want.begin(), want.end(), got.begin()));
    }
}
