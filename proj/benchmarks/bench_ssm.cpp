// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "clusterar/ssm.hpp"

namespace {

using namespace clusterar;

SsmParams random_system(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-2.0, -0.01), u(-1.0, 1.0);
  SsmParams p;
  for (std::size_t i = 0; i < d; ++i) {
    p.A.push_back(a(rng));
    p.B.push_back(u(rng));
    p.C.push_back(u(rng));
  }
  p.delta = 0.1;
  return p;
}

std::vector<double> random_input(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

void BM_ScanRecurrent(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto sys = discretize(random_system(16, rng));
  const auto x = random_input(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(scan_recurrent(sys, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScanRecurrent)->RangeMultiplier(4)->Range(64, 4096);

void BM_KernelConv(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto sys = discretize(random_system(16, rng));
  const auto x = random_input(static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_conv(sys, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KernelConv)->RangeMultiplier(4)->Range(64, 4096);

template <typename T>
void BM_SelectiveScan(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const std::size_t D = 64, d = 16;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.1);
  auto fill = [&](Matrix<T>& m) {
    for (auto& v : m.data) v = static_cast<T>(n(rng));
  };
  auto w = SelectiveScanWeights<T>::zeros(D, d);
  for (auto* m : {&w.delta_w, &w.delta_b, &w.b_w, &w.b_b, &w.c_w, &w.c_b, &w.a_log}) fill(*m);
  Matrix<T> x(L, D);
  fill(x);
  for (auto _ : state) benchmark::DoNotOptimize(selective_scan(x, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(L));
}
BENCHMARK(BM_SelectiveScan<float>)->Arg(160)->Arg(640)->Arg(1280)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SelectiveScan<double>)->Arg(160)->Arg(1280)->Unit(benchmark::kMicrosecond);

}  // namespace
