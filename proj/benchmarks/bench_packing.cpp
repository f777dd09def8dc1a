// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "clusterar/decoder.hpp"
#include "clusterar/model.hpp"
#include "clusterar/objective.hpp"

namespace {

using namespace clusterar;

// Full geometry, N images per sequence.
void BM_PackImages(benchmark::State& state) {
  Config cfg = Config::preset("full");
  const Geometry g = geometry_from(cfg);
  const Image img(g.image_size, g.image_size, g.channels, 0.25f);
  const std::vector<const Image*> imgs(static_cast<std::size_t>(state.range(0)), &img);
  for (auto _ : state) benchmark::DoNotOptimize(pack_images(imgs, cfg));
  state.counters["tokens"] = static_cast<double>(160 * state.range(0));
}
BENCHMARK(BM_PackImages)->RangeMultiplier(2)->Range(1, 16)->Unit(benchmark::kMicrosecond);

void BM_BuildMask(benchmark::State& state) {
  std::vector<std::uint32_t> ids;
  for (std::int64_t i = 0; i < 160 * state.range(0); ++i) ids.push_back(static_cast<std::uint32_t>(i / 16));
  for (auto _ : state) benchmark::DoNotOptimize(build_mask(ids));
  state.SetComplexityN(static_cast<std::int64_t>(ids.size()));
}
BENCHMARK(BM_BuildMask)->RangeMultiplier(2)->Range(1, 16)->Unit(benchmark::kMicrosecond)->Complexity(benchmark::oNSquared);

void BM_BuildTargets(benchmark::State& state) {
  Config cfg = Config::preset("full");
  const Geometry g = geometry_from(cfg);
  Image img(g.image_size, g.image_size, g.channels);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>(i % 251) / 251.0f;
  const std::vector<const Image*> imgs(8, &img);
  const auto packed = pack_images(imgs, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(build_targets(packed));
}
BENCHMARK(BM_BuildTargets)->Unit(benchmark::kMicrosecond);

}  // namespace
