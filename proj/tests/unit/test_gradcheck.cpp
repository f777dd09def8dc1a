// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "clusterar/gradcheck.hpp"
#include "clusterar/model.hpp"
#include "clusterar/verify.hpp"
#include "oracles.hpp"

using namespace clusterar;

TEST_CASE("linear head alone is exact up to rounding") {
  ParamStore<double> store;
  auto& w = store.add("head.weight", 3, 5, Init::Xavier, true, 0);
  auto& b = store.add("head.bias", 1, 3, Init::Zeros, false, 0);
  store.initialize(1);
  std::mt19937_64 rng(1);
  const auto x = oracle::random_mat(rng, 4, 5);
  const auto target = oracle::random_mat(rng, 4, 3);
  const auto r = grad_check(
      store,
      [&](Tape<double>& t) {
        return weighted_mse(t, linear(t, t.constant(x), t.param(w), t.param(b)), target, {1.0, 1.0, 1.0, 1.0});
      },
      1e-4, 1e-8);
  CHECK(r.pass);
  CHECK(r.entries.size() == 2);
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("zero-parameter model gives an empty passing report") {
  ParamStore<double> store;
  const auto r = grad_check(store, [](Tape<double>& t) { return t.constant(Matrix<double>(1, 1, 2.0)); }, 1e-4, 1e-4);
  CHECK(r.pass);
  CHECK(r.entries.empty());
}

TEST_CASE("a wrong backward is caught") {
  ParamStore<double> store;
  auto& p = store.add("p", 1, 3, Init::Zeros, true, 0);
  p.value = Matrix<double>(1, 3, std::vector<double>{0.5, -1.0, 2.0});
  // y = p^2 with a backward that forgets the factor 2.
  const auto r = grad_check(
      store,
      [&](Tape<double>& t) {
        const Var x = t.param(p);
        Matrix<double> sq = t.value(x);
        double s = 0.0;
        for (double v : sq.data) s += v * v;
        return t.push(Matrix<double>(1, 1, s), true, [x](Tape<double>& tp, const Matrix<double>& g) {
          auto& gx = tp.grad(x);
          for (std::size_t i = 0; i < gx.size(); ++i) gx.data[i] += g(0, 0) * tp.value(x).data[i];
        });
      },
      1e-5, 1e-4);
  CHECK_FALSE(r.pass);
  CHECK(r.max_rel_error == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("full pretraining graph on a micro pack") {
  Config cfg = micro_config();
  CHECK(cfg.integer("model.depth") == 2);
  CHECK(cfg.integer("model.width") == 8);
  CHECK(cfg.integer("decoder.layers") == 1);
  CHECK(cfg.integer("separator.images") == 2);
  PretrainModel<double> model(cfg);
  const Geometry g = geometry_from(cfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image a(g.image_size, g.image_size, g.channels), b = a;
  for (auto& v : a.pixels) v = u(rng);
  for (auto& v : b.pixels) v = u(rng);
  const auto packed = pack_images({&a, &b}, cfg);
  const auto plan = build_targets(packed, target_options_from(cfg));
  const auto r = grad_check(model.store, [&](Tape<double>& t) { return model.loss(t, packed, plan); }, 1e-4, 1e-4);
  CHECK(r.pass);
  CHECK(r.entries.size() == model.store.size());
  MESSAGE("max relative error " << r.max_rel_error);
}
