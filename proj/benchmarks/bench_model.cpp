// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "clusterar/model.hpp"
#include "clusterar/objective.hpp"

namespace {

using namespace clusterar;

Config desk_with_images(std::int64_t n) {
  Config cfg = Config::preset("desk");
  cfg.set("separator.images", std::to_string(n));
  return cfg;
}

std::vector<Image> images(const Geometry& g, std::size_t n) {
  std::vector<Image> out;
  for (std::size_t k = 0; k < n; ++k) {
    Image img(g.image_size, g.image_size, g.channels);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<float>((i * 31 + k) % 97) / 97.0f;
    out.push_back(std::move(img));
  }
  return out;
}

// Encoder forward pass over a packed sequence of N desk images.
void BM_Encode(benchmark::State& state) {
  const Config cfg = desk_with_images(state.range(0));
  PretrainModel<float> model(cfg);
  const auto imgs = images(geometry_from(cfg), static_cast<std::size_t>(state.range(0)));
  std::vector<const Image*> ptrs;
  for (const auto& i : imgs) ptrs.push_back(&i);
  const auto packed = pack_images(ptrs, cfg);
  for (auto _ : state) {
    Tape<float> t;
    benchmark::DoNotOptimize(t.value(model.encoder.encode(t, packed)));
  }
  state.counters["tokens"] = static_cast<double>(packed.token_count());
}
BENCHMARK(BM_Encode)->RangeMultiplier(2)->Range(1, 16)->Unit(benchmark::kMillisecond);

// One pretraining loss plus backward pass.
void BM_LossBackward(benchmark::State& state) {
  const Config cfg = desk_with_images(state.range(0));
  PretrainModel<float> model(cfg);
  const auto imgs = images(geometry_from(cfg), static_cast<std::size_t>(state.range(0)));
  std::vector<const Image*> ptrs;
  for (const auto& i : imgs) ptrs.push_back(&i);
  const auto packed = pack_images(ptrs, cfg);
  const auto plan = build_targets(packed, target_options_from(cfg));
  for (auto _ : state) {
    model.store.zero_grad();
    Tape<float> t;
    const Var l = model.loss(t, packed, plan);
    t.backward(l);
    benchmark::DoNotOptimize(t.value(l));
  }
}
BENCHMARK(BM_LossBackward)->Arg(1)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
