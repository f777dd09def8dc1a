// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "clusterar/autograd.hpp"
#include "clusterar/decoder.hpp"
#include "clusterar/gradcheck.hpp"
#include "oracles.hpp"

using namespace clusterar;
using oracle::Mat;

namespace {

struct Bench {
  ParamStore<double> store;
  std::mt19937_64 rng{42};

  Parameter<double>& param(const std::string& name, std::size_t r, std::size_t c, double scale = 1.0) {
    auto& p = store.add(name, r, c, Init::Zeros, true, 0);
    p.value = oracle::random_mat(rng, r, c, scale);
    return p;
  }

  // Scalarizes `out` against a fixed random target so every output
  // element reaches the loss with a distinct weight.
  template <typename F>
  GradCheckReport check(F build, double tol = 1e-6) {
    Mat target;
    return grad_check(
        store,
        [&](Tape<double>& t) {
          const Var out = build(t);
          const auto& v = t.value(out);
          if (target.rows != v.rows || target.cols != v.cols) {
            std::mt19937_64 r(7);
            target = oracle::random_mat(r, v.rows, v.cols);
          }
          std::vector<double> w(v.rows);
          for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 0.25 * static_cast<double>(i);
          return weighted_mse(t, out, target, w);
        },
        1e-5, tol);
  }
};

}  // namespace

TEST_CASE("gradients: linear, add, scale") {
  Bench b;
  auto& x = b.param("x", 5, 4);
  auto& w = b.param("w", 3, 4);
  auto& bias = b.param("b", 1, 3);
  auto& y = b.param("y", 5, 3);
  const auto r = b.check([&](Tape<double>& t) {
    return scale(t, add(t, linear(t, t.param(x), t.param(w), t.param(bias)), t.param(y)), 0.75);
  });
  CHECK(r.pass);
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("gradients: layer_norm") {
  Bench b;
  auto& x = b.param("x", 4, 6);
  auto& g = b.param("g", 1, 6);
  auto& beta = b.param("beta", 1, 6);
  CHECK(b.check([&](Tape<double>& t) { return layer_norm(t, t.param(x), t.param(g), t.param(beta)); }).pass);
}

TEST_CASE("gradients: elementwise nonlinearities") {
  Bench b;
  auto& x = b.param("x", 3, 5, 2.0);
  CHECK(b.check([&](Tape<double>& t) { return gelu(t, t.param(x)); }).pass);
  CHECK(b.check([&](Tape<double>& t) { return softplus(t, t.param(x)); }).pass);
  CHECK(b.check([&](Tape<double>& t) { return neg_exp(t, scale(t, t.param(x), 0.5)); }).pass);
}

TEST_CASE("gradients: gather with repeats and concat") {
  Bench b;
  auto& x = b.param("x", 4, 3);
  auto& y = b.param("y", 2, 3);
  CHECK(b.check([&](Tape<double>& t) {
           return gather_rows(t, concat_rows(t, {t.param(x), t.param(y)}), {5, 0, 0, 3, 4, 1});
         }).pass);
}

TEST_CASE("gradients: selective scan in every input") {
  Bench b;
  const std::size_t L = 7, D = 3, d = 4;
  auto& u = b.param("u", L, D);
  auto& delta = b.param("delta", L, D, 0.5);
  auto& a_log = b.param("a_log", D, d, 0.5);
  auto& B = b.param("B", L, d);
  auto& C = b.param("C", L, d);
  const auto r = b.check([&](Tape<double>& t) {
    return selective_scan(t, t.param(u), softplus(t, t.param(delta)), neg_exp(t, t.param(a_log)), t.param(B),
                          t.param(C));
  });
  CHECK(r.pass);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradients: selective scan near the series cutoff") {
  // Tiny steps put dt * A inside the series branch of the input gain.
  Bench b;
  auto& u = b.param("u", 5, 2);
  auto& delta = b.store.add("delta", 5, 2, Init::Zeros, true, 0);
  for (std::size_t i = 0; i < delta.value.size(); ++i) delta.value.data[i] = 1e-3 * static_cast<double>(i + 1);
  auto& A = b.store.add("A", 2, 3, Init::Zeros, true, 0);
  A.value = Mat(2, 3, std::vector<double>{-1.0, -2.0, -0.5, -3.0, -1.5, -0.25});
  auto& B = b.param("B", 5, 3);
  auto& C = b.param("C", 5, 3);
  const auto r = b.check([&](Tape<double>& t) {
    return selective_scan(t, t.param(u), t.param(delta), t.param(A), t.param(B), t.param(C));
  }, 1e-5);
  CHECK(r.pass);
}

TEST_CASE("gradients: masked multi-head attention") {
  Bench b;
  auto& q = b.param("q", 6, 4);
  auto& k = b.param("k", 6, 4);
  auto& v = b.param("v", 6, 4);
  const auto mask = build_mask(std::vector<std::uint32_t>{0, 0, 1, 1, 1, 2});
  CHECK(b.check([&](Tape<double>& t) { return attention(t, t.param(q), t.param(k), t.param(v), mask.allow, 2); })
            .pass);
}

TEST_CASE("attention matches the reference with a mask") {
  std::mt19937_64 rng(3);
  const Mat q = oracle::random_mat(rng, 5, 6), k = oracle::random_mat(rng, 5, 6), v = oracle::random_mat(rng, 5, 6);
  const std::vector<std::uint32_t> ids{0, 1, 1, 2, 2};
  const auto mask = build_mask(ids);
  Tape<double> t;
  const Mat got = t.value(attention(t, t.constant(q), t.constant(k), t.constant(v), mask.allow, 3));
  CHECK(oracle::max_rel_diff(got.data, oracle::attention(q, k, v, oracle::le_rule(ids), 3).data) < 1e-13);
}

TEST_CASE("cross entropy value and gradient") {
  Bench b;
  auto& z = b.param("z", 3, 4);
  const std::vector<int> labels{2, 0, 3};
  Tape<double> t;
  const double got = t.value(cross_entropy(t, t.param(z), labels))(0, 0);
  double want = 0.0;
  for (std::size_t r = 0; r < 3; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 4; ++c) s += std::exp(z.value(r, c));
    want += std::log(s) - z.value(r, static_cast<std::size_t>(labels[r]));
  }
  CHECK(got == doctest::Approx(want / 3.0).epsilon(1e-14));
  const auto r = grad_check(b.store, [&](Tape<double>& tp) { return cross_entropy(tp, tp.param(z), labels); }, 1e-5,
                            1e-6);
  CHECK(r.pass);
  CHECK_THROWS_AS(cross_entropy(t, t.param(z), {0, 1, 4}), std::invalid_argument);
}

TEST_CASE("shape mismatches throw") {
  Tape<double> t;
  const Var a = t.constant(Mat(2, 3)), b = t.constant(Mat(3, 2));
  CHECK_THROWS_AS(add(t, a, b), std::invalid_argument);
  CHECK_THROWS_AS(linear(t, a, b), std::invalid_argument);
  CHECK_THROWS_AS(gather_rows(t, a, {2}), std::invalid_argument);
}

TEST_CASE("gradients accumulate across uses of one parameter") {
  ParamStore<double> store;
  auto& p = store.add("p", 1, 2, Init::Zeros, true, 0);
  p.value = Mat(1, 2, std::vector<double>{1.0, -2.0});
  Tape<double> t;
  const Var x = t.param(p);
  const Var y = add(t, x, scale(t, x, 2.0));
  t.backward(weighted_mse(t, y, Mat(1, 2), {1.0}));
  // loss = (9 p0^2 + 9 p1^2) / 2 -> grad = 9 p
  CHECK(p.grad(0, 0) == doctest::Approx(9.0));
  CHECK(p.grad(0, 1) == doctest::Approx(-18.0));
}
