// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>

#include "clusterar/ssm.hpp"
#include "clusterar/zoh.hpp"
#include "oracles.hpp"

using namespace clusterar;

namespace {

SsmParams random_stable(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> a(0.05, 2.0), bc(-1.0, 1.0), dt(0.01, 1.0);
  SsmParams p;
  for (std::size_t i = 0; i < d; ++i) {
    p.A.push_back(-a(rng));
    p.B.push_back(bc(rng));
    p.C.push_back(bc(rng));
  }
  p.delta = dt(rng);
  return p;
}

std::vector<double> random_input(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> dist;
  std::vector<double> x(n);
  for (auto& v : x) v = dist(rng);
  return x;
}

SelectiveScanWeights<double> random_weights(std::mt19937_64& rng, std::size_t D, std::size_t d) {
  SelectiveScanWeights<double> w = SelectiveScanWeights<double>::zeros(D, d);
  for (auto* m : {&w.delta_w, &w.b_w, &w.c_w, &w.b_b, &w.c_b}) *m = oracle::random_mat(rng, m->rows, m->cols, 0.4);
  w.delta_b = oracle::random_mat(rng, 1, D, 0.5);
  w.a_log = oracle::random_mat(rng, D, d, 0.5);
  return w;
}

}  // namespace

TEST_CASE("discretize: A=-1, B=1, dt=ln 2") {
  const auto s = discretize({{-1.0}, {1.0}, {1.0}, std::log(2.0)});
  CHECK(s.Abar[0] == doctest::Approx(0.5).epsilon(1e-15));
  const double closed = (1.0 / -std::log(2.0)) * (0.5 - 1.0) * std::log(2.0);
  CHECK(s.Bbar[0] == doctest::Approx(closed).epsilon(1e-14));
  CHECK(closed == doctest::Approx(0.5));
}

TEST_CASE("discretize: dt -> 0 limit") {
  const auto s = discretize({{-1.0, -3.0}, {1.0, 2.0}, {1.0, 1.0}, 1e-8});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(s.Abar[i] - 1.0) < 1e-7);
    CHECK(std::abs(s.Bbar[i]) < 1e-7);
  }
}

TEST_CASE("discretize: rejects bad input") {
  CHECK_THROWS_AS(discretize({{}, {}, {}, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(discretize({{-1.0}, {1.0}, {1.0}, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(discretize({{-1.0}, {1.0, 2.0}, {1.0}, 1.0}), std::invalid_argument);
  CHECK_THROWS_WITH_AS(discretize({{-1.0, 800.0}, {1.0, 1.0}, {1.0, 1.0}, 1.0}), doctest::Contains("channel 1"),
                       std::domain_error);
}

TEST_CASE("zoh gain is continuous across the series cutoffs") {
  for (double z : {-2e-2, -1.0001e-2, -0.9999e-2, -1.0001e-4, -0.9999e-4, -1e-9, 1e-9, 5e-3, 3.0}) {
    CAPTURE(z);
    const long double ref = z == 0.0 ? 1.0L : std::expm1(static_cast<long double>(z)) / z;
    CHECK(zoh_phi(z) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-14));
    // d/dz (e^z - 1)/z by a centered difference in long double
    const long double h = 1e-6L;
    auto f = [](long double v) { return std::expm1(v) / v; };
    const long double num = (f(z + h) - f(z - h)) / (2 * h);
    CHECK(zoh_phi_derivative(z) == doctest::Approx(static_cast<double>(num)).epsilon(1e-7));
  }
}

TEST_CASE("scan: memoryless identity and running count") {
  const DiscreteSsm id{{0.0}, {1.0}, {1.0}};
  const std::vector<double> x{0.5, -2.0, 3.0, 7.0};
  CHECK(scan_recurrent(id, x) == x);
  const DiscreteSsm count{{1.0}, {1.0}, {1.0}};
  const auto y = scan_recurrent(count, std::vector<double>(6, 1.0));
  for (std::size_t t = 0; t < 6; ++t) CHECK(y[t] == static_cast<double>(t + 1));
}

TEST_CASE("kernel: Abar=0 keeps only the first tap") {
  const DiscreteSsm s{{0.0, 0.0}, {2.0, 1.0}, {0.5, 3.0}};
  const auto k = ssm_kernel(s, 5);
  CHECK(k[0] == 4.0);
  for (std::size_t j = 1; j < 5; ++j) CHECK(k[j] == 0.0);
  const std::vector<double> x{1.0, -1.0, 2.0};
  CHECK(kernel_conv(s, x) == std::vector<double>{4.0, -4.0, 8.0});
}

TEST_CASE("kernel: geometric series") {
  const auto k = ssm_kernel({{0.5}, {1.0}, {1.0}}, 4);
  CHECK(k == std::vector<double>{1.0, 0.5, 0.25, 0.125});
}

TEST_CASE("kernel_conv rejects input-dependent parameters") {
  const std::vector<DiscreteSsm> steps{{{0.5}, {1.0}, {1.0}}, {{0.4}, {1.0}, {1.0}}};
  CHECK_THROWS_AS(kernel_conv(steps, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  const std::vector<DiscreteSsm> same(2, DiscreteSsm{{0.5}, {1.0}, {1.0}});
  CHECK(kernel_conv(same, std::vector<double>{1.0, 2.0}) == std::vector<double>{1.0, 2.5});
}

TEST_CASE("recurrence and convolution agree on random stable systems") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng() % 8, L = 1 + rng() % 64;
    const auto p = discretize(random_stable(rng, d));
    const auto x = random_input(rng, L);
    CHECK(oracle::max_rel_diff(scan_recurrent(p, x), kernel_conv(p, x)) < 1e-10);
  }
}

TEST_CASE("selective scan: zero projections give zero output") {
  std::mt19937_64 rng(3);
  const auto w = SelectiveScanWeights<double>::zeros(5, 3);
  const auto y = selective_scan(oracle::random_mat(rng, 7, 5), w);
  for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("selective scan: matches the definition") {
  std::mt19937_64 rng(5);
  const auto w = random_weights(rng, 6, 4);
  const auto x = oracle::random_mat(rng, 12, 6);
  const auto got = selective_scan(x, w);
  const auto want = oracle::selective_scan(x, {w.delta_w, w.delta_b, w.b_w, w.b_b, w.c_w, w.c_b, w.a_log});
  CHECK(oracle::max_rel_diff(got.data, want.data) < 1e-12);
}

TEST_CASE("selective scan: later inputs never change earlier outputs") {
  std::mt19937_64 rng(9);
  const auto w = random_weights(rng, 4, 3);
  const auto x = oracle::random_mat(rng, 16, 4);
  const auto base = selective_scan(x, w);
  for (std::size_t t : {0u, 5u, 14u}) {
    auto x2 = x;
    for (std::size_t r = t + 1; r < x.rows; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) x2(r, c) += 3.0;
    const auto y = selective_scan(x2, w);
    for (std::size_t r = 0; r <= t; ++r)
      for (std::size_t c = 0; c < x.cols; ++c) CHECK(y(r, c) == base(r, c));
  }
}

TEST_CASE("selective scan: frozen projections reduce to the induced LTI system") {
  std::mt19937_64 rng(13);
  auto w = SelectiveScanWeights<double>::zeros(4, 3);
  w.delta_b = oracle::random_mat(rng, 1, 4, 0.5);
  w.b_b = oracle::random_mat(rng, 1, 3);
  w.c_b = oracle::random_mat(rng, 1, 3);
  w.a_log = oracle::random_mat(rng, 4, 3, 0.5);
  const auto x = oracle::random_mat(rng, 20, 4);
  const auto y = selective_scan(x, w);
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> col(x.rows), got(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t) {
      col[t] = x(t, c);
      got[t] = y(t, c);
    }
    CHECK(oracle::max_rel_diff(got, scan_recurrent(induced_lti(w, c), col)) < 1e-6);
  }
}

TEST_CASE("selective scan: float and double agree") {
  std::mt19937_64 rng(17);
  const auto w = random_weights(rng, 4, 4);
  const auto x = oracle::random_mat(rng, 10, 4);
  const SelectiveScanWeights<float> wf{w.delta_w.cast<float>(), w.delta_b.cast<float>(), w.b_w.cast<float>(),
                                       w.b_b.cast<float>(),     w.c_w.cast<float>(),     w.c_b.cast<float>(),
                                       w.a_log.cast<float>()};
  const auto yd = selective_scan(x, w);
  const auto yf = oracle::to_double(selective_scan(x.cast<float>(), wf));
  CHECK(oracle::max_rel_diff(yd.data, yf.data) < 1e-4);
}
