// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/patching.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace clusterar {

PatchGrid patchify(const Image& image, std::size_t patch_size) {
  if (patch_size == 0) throw std::invalid_argument("patchify: patch_size must be positive");
  if (image.channels == 0) throw std::invalid_argument("patchify: image has no channels");
  if (image.height % patch_size != 0) {
    throw std::invalid_argument("patchify: height " + std::to_string(image.height) + " not divisible by patch_size " +
                                std::to_string(patch_size));
  }
  if (image.width % patch_size != 0) {
    throw std::invalid_argument("patchify: width " + std::to_string(image.width) + " not divisible by patch_size " +
                                std::to_string(patch_size));
  }
  PatchGrid grid;
  grid.grid_h = image.height / patch_size;
  grid.grid_w = image.width / patch_size;
  grid.patch_size = patch_size;
  grid.channels = image.channels;
  const std::size_t row_len = patch_size * image.channels;
  grid.patches = Matrix<float>(grid.count(), patch_size * row_len);
  for (std::size_t gr = 0; gr < grid.grid_h; ++gr) {
    for (std::size_t gc = 0; gc < grid.grid_w; ++gc) {
      auto dst = grid.patches.row(gr * grid.grid_w + gc);
      for (std::size_t pr = 0; pr < patch_size; ++pr) {
        // A patch row is contiguous in the interleaved image layout.
        const float* src = &image.pixels[((gr * patch_size + pr) * image.width + gc * patch_size) * image.channels];
        std::copy_n(src, row_len, dst.begin() + static_cast<std::ptrdiff_t>(pr * row_len));
      }
    }
  }
  return grid;
}

std::vector<std::uint32_t> cluster_priority_order(std::size_t grid_h, std::size_t grid_w, std::size_t cluster_side) {
  if (cluster_side == 0) throw std::invalid_argument("clusterize: cluster_side must be positive");
  if (grid_h % cluster_side != 0 || grid_w % cluster_side != 0) {
    throw std::invalid_argument("clusterize: grid " + shape_string(grid_h, grid_w) + " not divisible by cluster_side " +
                                std::to_string(cluster_side));
  }
  std::vector<std::uint32_t> order;
  order.reserve(grid_h * grid_w);
  for (std::size_t cr = 0; cr < grid_h / cluster_side; ++cr)
    for (std::size_t cc = 0; cc < grid_w / cluster_side; ++cc)
      for (std::size_t ir = 0; ir < cluster_side; ++ir)
        for (std::size_t ic = 0; ic < cluster_side; ++ic)
          order.push_back(static_cast<std::uint32_t>((cr * cluster_side + ir) * grid_w + cc * cluster_side + ic));
  return order;
}

ClusterSequence clusterize(const PatchGrid& grid, std::size_t cluster_side) {
  ClusterSequence seq;
  seq.order = cluster_priority_order(grid.grid_h, grid.grid_w, cluster_side);
  seq.grid_h = grid.grid_h;
  seq.grid_w = grid.grid_w;
  seq.cluster_side = cluster_side;
  seq.patch_size = grid.patch_size;
  seq.channels = grid.channels;
  const std::size_t per = cluster_side * cluster_side;
  const std::size_t L = seq.order.size() / per;
  seq.clusters.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    Matrix<float> cluster(per, grid.patch_dim());
    for (std::size_t j = 0; j < per; ++j) {
      auto src = grid.patches.row(seq.order[l * per + j]);
      std::copy(src.begin(), src.end(), cluster.row(j).begin());
    }
    seq.clusters.push_back(std::move(cluster));
  }
  return seq;
}

PatchGrid unclusterize(const ClusterSequence& seq) {
  PatchGrid grid;
  grid.grid_h = seq.grid_h;
  grid.grid_w = seq.grid_w;
  grid.patch_size = seq.patch_size;
  grid.channels = seq.channels;
  grid.patches = Matrix<float>(seq.token_count(), seq.patch_dim());
  const std::size_t per = seq.tokens_per_cluster();
  for (std::size_t l = 0; l < seq.cluster_count(); ++l) {
    for (std::size_t j = 0; j < per; ++j) {
      auto src = seq.clusters[l].row(j);
      std::copy(src.begin(), src.end(), grid.patches.row(seq.order[l * per + j]).begin());
    }
  }
  return grid;
}

ClusterSequence image_to_clusters(const Image& image, std::size_t patch_size, std::size_t cluster_side) {
  return clusterize(patchify(image, patch_size), cluster_side);
}

}  // namespace clusterar
