// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "clusterar/gradcheck.hpp"
#include "clusterar/model.hpp"
#include "clusterar/patching.hpp"
#include "clusterar/ssm.hpp"

namespace clusterar {
namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

ClusterSequence blank_clusters(std::size_t grid, std::size_t side) {
  return image_to_clusters(Image(grid, grid, 1), 1, side);
}

Image random_image(const Geometry& g, Rng& rng) {
  Image img(g.image_size, g.image_size, g.channels);
  for (auto& p : img.pixels) p = static_cast<float>(rng.uniform());
  return img;
}

CheckResult check_discretize() {
  CheckResult r{"zoh_discretization", true, "", 0};
  const DiscreteSsm d = discretize({{-1.0}, {1.0}, {1.0}, std::log(2.0)});
  const double e1 = std::max(std::abs(d.Abar[0] - 0.5), std::abs(d.Bbar[0] - 0.5));
  const DiscreteSsm z = discretize({{-1.0}, {1.0}, {1.0}, 1e-8});
  const double e2 = std::abs(z.Abar[0] - 1.0);
  r.pass = e1 < 1e-12 && e2 < 1e-7 && std::abs(z.Bbar[0]) < 1e-7;
  r.detail = "closed-form error " + fmt(e1) + ", small-step |Abar-1| " + fmt(e2);
  return r;
}

CheckResult check_scan_kernel(std::uint64_t seed) {
  CheckResult r{"scan_kernel_equivalence", true, "", seed};
  double worst = 0.0;
  for (std::size_t inst = 0; inst < 100; ++inst) {
    Rng rng(derive_seed(seed, 0x5ca, inst));
    const std::size_t d = 1 + rng.below(8);
    const std::size_t L = 1 + rng.below(64);
    SsmParams p;
    for (std::size_t i = 0; i < d; ++i) {
      p.A.push_back(-rng.uniform(0.05, 2.0));
      p.B.push_back(rng.uniform(-1.0, 1.0));
      p.C.push_back(rng.uniform(-1.0, 1.0));
    }
    p.delta = rng.uniform(0.01, 1.0);
    std::vector<double> x(L);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    const DiscreteSsm ds = discretize(p);
    const auto a = scan_recurrent(ds, x);
    const auto b = kernel_conv(ds, x);
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
      diff = std::max(diff, std::abs(a[t] - b[t]));
      scale = std::max(scale, std::abs(a[t]));
    }
    worst = std::max(worst, diff / std::max(scale, 1e-300));
  }
  r.pass = worst < 1e-5;
  r.detail = "100 instances, max relative deviation " + fmt(worst);
  return r;
}

CheckResult check_causality(std::uint64_t seed) {
  CheckResult r{"encoder_causality", true, "", seed};
  Config cfg = micro_config();
  PretrainModel<float> model(cfg);
  const Geometry g = geometry_from(cfg);
  Rng rng(derive_seed(seed, 0xca5));
  Image a = random_image(g, rng);
  Image b = random_image(g, rng);
  auto encode = [&](const Image& i0, const Image& i1) {
    Tape<float> t;
    return t.value(model.encoder.encode(t, pack_images({&i0, &i1}, cfg), EncodeOptions::with_mode(ScanMode::OneScan)));
  };
  const Matrix<float> base = encode(a, b);
  const std::size_t per_image = base.rows / 2;
  Image b2 = random_image(g, rng);
  const Matrix<float> other = encode(a, b2);
  std::size_t violations = 0;
  for (std::size_t i = 0; i < per_image; ++i) {
    for (std::size_t c = 0; c < base.cols; ++c) violations += base(i, c) != other(i, c);
  }
  // Per position inside image 0: perturb one pixel token, rows before it must not move.
  const PackedSequence packed = pack_images({&a, &b}, cfg);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    PackedSequence p = packed;
    const std::size_t pos = 1 + rng.below(per_image - 1);
    if (p.tokens[pos].meta.is_separator) continue;
    for (auto& v : p.tokens[pos].values) v += 0.5f;
    Tape<float> t;
    const auto& out = t.value(model.encoder.encode(t, p, EncodeOptions::with_mode(ScanMode::OneScan)));
    for (std::size_t i = 0; i < pos; ++i) {
      for (std::size_t c = 0; c < out.cols; ++c) violations += base(i, c) != out(i, c);
    }
  }
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " earlier outputs changed";
  return r;
}

CheckResult check_mask(bool corrupt) {
  CheckResult r{"mask_oracle", true, "", 0};
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  for (std::size_t N : {1, 2}) {
    for (std::size_t L : {1, 9}) {
      for (std::size_t side : {1, 4}) {
        for (LayoutKind kind : {LayoutKind::SC, LayoutKind::CS, LayoutKind::SCS, LayoutKind::CSC}) {
          if ((kind == LayoutKind::SCS || kind == LayoutKind::CSC) && L % side != 0) continue;
          const std::size_t cgrid = L == 9 ? 3 : 1;
          std::vector<ClusterSequence> imgs(N, blank_clusters(cgrid * side, side));
          const PackedSequence p = pack(imgs, SeparatorSpec::square(SeparatorValue::Zeros, side, 1), kind);
          const auto ids = p.cluster_ids();
          const BlockCausalMask m = build_mask(ids);
          ++cases;
          for (std::size_t q = 0; q < ids.size(); ++q) {
            for (std::size_t k = 0; k < ids.size(); ++k) {
              const bool candidate = corrupt ? ids[k] < ids[q] : m(q, k);
              mismatches += candidate != (ids[k] <= ids[q]);
            }
          }
        }
      }
    }
  }
  r.pass = mismatches == 0;
  r.detail = std::to_string(cases) + " layouts, " + std::to_string(mismatches) + " mismatched entries" +
             (corrupt ? " (corrupted rule)" : "");
  return r;
}

CheckResult check_decoder_causality(std::uint64_t seed) {
  CheckResult r{"decoder_causality", true, "", seed};
  Config cfg = micro_config();
  PretrainModel<float> model(cfg);
  const Geometry g = geometry_from(cfg);
  Rng rng(derive_seed(seed, 0xdec));
  Image a = random_image(g, rng);
  Image b = random_image(g, rng);
  const PackedSequence packed = pack_images({&a, &b}, cfg);
  const auto ids = packed.cluster_ids();
  const BlockCausalMask mask = build_mask(ids);
  Matrix<float> feats(packed.token_count(), model.encoder.config().width);
  for (auto& v : feats.data) v = static_cast<float>(rng.normal());
  auto decode = [&](const Matrix<float>& f) {
    Tape<float> t;
    return t.value(model.decoder.decode(t, t.constant(f), mask));
  };
  const Matrix<float> base = decode(feats);
  std::size_t violations = 0;
  const std::uint32_t clusters = ids.back() + 1;
  for (std::uint32_t cut = 0; cut + 1 < clusters; ++cut) {
    Matrix<float> f = feats;
    for (std::size_t i = 0; i < f.rows; ++i) {
      if (ids[i] > cut) {
        for (std::size_t c = 0; c < f.cols; ++c) f(i, c) += static_cast<float>(rng.normal());
      }
    }
    const Matrix<float> out = decode(f);
    for (std::size_t i = 0; i < out.rows; ++i) {
      if (ids[i] > cut) continue;
      for (std::size_t c = 0; c < out.cols; ++c) violations += out(i, c) != base(i, c);
    }
  }
  r.pass = violations == 0;
  r.detail = std::to_string(clusters - 1) + " cut points, " + std::to_string(violations) + " earlier predictions changed";
  return r;
}

CheckResult check_gradients(std::uint64_t seed) {
  CheckResult r{"gradient_check", true, "", seed};
  Config cfg = micro_config();
  cfg.set("seed", std::to_string(seed));
  PretrainModel<double> model(cfg);
  const Geometry g = geometry_from(cfg);
  Rng rng(derive_seed(seed, 0x96c));
  Image a = random_image(g, rng);
  Image b = random_image(g, rng);
  const PackedSequence packed = pack_images({&a, &b}, cfg);
  const TargetPlan plan = build_targets(packed, target_options_from(cfg));
  const auto report = grad_check(
      model.store, [&](Tape<double>& t) { return model.loss(t, packed, plan); }, 1e-4, 1e-4);
  const auto worst = std::max_element(report.entries.begin(), report.entries.end(),
                                      [](const auto& x, const auto& y) { return x.rel_error < y.rel_error; });
  r.pass = report.pass;
  r.detail = std::to_string(report.entries.size()) + " tensors, max relative error " + fmt(report.max_rel_error) +
             (worst != report.entries.end() ? " (" + worst->name + ")" : "");
  return r;
}

CheckResult check_normalization(std::uint64_t seed) {
  CheckResult r{"target_normalization", true, "", seed};
  Rng rng(derive_seed(seed, 0x402));
  double worst = 0.0;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    // The eps term shifts outputs by about eps / (2 var), so patches are
    // drawn with unit-scale variance.
    std::vector<double> p(16 + rng.below(49));
    for (auto& v : p) v = rng.normal();
    const double a = rng.uniform(0.5, 10.0);
    const double b = rng.uniform(-5.0, 5.0);
    std::vector<double> q(p.size());
    std::transform(p.begin(), p.end(), q.begin(), [&](double v) { return a * v + b; });
    const auto np = normalize_target(p);
    const auto nq = normalize_target(q);
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(np[i] - nq[i]));
  }
  const auto flat = normalize_target(std::vector<double>(16, 0.7));
  double flat_max = 0.0;
  for (double v : flat) flat_max = std::max(flat_max, std::abs(v));
  r.pass = worst < 1e-5 && flat_max < 1e-2;
  r.detail = "affine deviation " + fmt(worst) + ", constant patch max " + fmt(flat_max);
  return r;
}

CheckResult check_separators() {
  CheckResult r{"separator_patterns", true, "", 0};
  const auto id = make_separator(SeparatorSpec::square(SeparatorValue::Identity, 4, 8));
  std::size_t ones_rows = 0;
  bool ok = true;
  for (std::size_t i = 0; i < id.rows; ++i) {
    const bool diag = i / 4 == i % 4;
    const auto row = id.row(i);
    const bool all_one = std::all_of(row.begin(), row.end(), [](float v) { return v == 1.0f; });
    const bool all_zero = std::all_of(row.begin(), row.end(), [](float v) { return v == 0.0f; });
    ones_rows += all_one;
    ok = ok && (diag ? all_one : all_zero);
  }
  const auto zeros = make_separator(SeparatorSpec::square(SeparatorValue::Zeros, 4, 8));
  const auto ones = make_separator(SeparatorSpec::square(SeparatorValue::Ones, 4, 8));
  ok = ok && std::all_of(zeros.data.begin(), zeros.data.end(), [](float v) { return v == 0.0f; });
  ok = ok && std::all_of(ones.data.begin(), ones.data.end(), [](float v) { return v == 1.0f; });
  r.pass = ok && ones_rows == 4;
  r.detail = std::to_string(ones_rows) + " diagonal ones-tokens in the identity separator";
  return r;
}

CheckResult check_packing() {
  CheckResult r{"packing_arithmetic", true, "", 0};
  std::string detail;
  for (std::size_t N : {1, 2, 4, 8, 16}) {
    std::vector<ClusterSequence> imgs(N, blank_clusters(12, 4));
    const auto p = pack(imgs, SeparatorSpec::square(SeparatorValue::Identity, 4, 1), LayoutKind::SC);
    r.pass = r.pass && p.token_count() == 160 * N;
    detail += (detail.empty() ? "" : " ") + std::to_string(p.token_count());
  }
  r.detail = "totals " + detail;
  return r;
}

}  // namespace

Config micro_config() {
  Config cfg = Config::preset("desk");
  cfg.set("model.width", "8");
  cfg.set("model.depth", "2");
  cfg.set("model.state_dim", "4");
  cfg.set("decoder.layers", "1");
  cfg.set("decoder.width", "8");
  cfg.set("decoder.heads", "2");
  cfg.set("separator.images", "2");
  return cfg;
}

std::vector<CheckResult> run_verify(const VerifyOptions& options) {
  const std::uint64_t s = options.seed;
  std::vector<std::function<CheckResult()>> checks = {
      [] { return check_discretize(); },
      [s] { return check_scan_kernel(s); },
      [s] { return check_causality(s); },
      [&] { return check_mask(options.corrupt_mask); },
      [s] { return check_decoder_causality(s); },
      [s] { return check_gradients(s); },
      [s] { return check_normalization(s); },
      [] { return check_separators(); },
      [] { return check_packing(); },
  };
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what(), s});
    }
  }
  return out;
}

std::string format_check(const CheckResult& r) {
  return std::string(r.pass ? "PASS" : "FAIL") + "  " + r.name + "  " + r.detail + "  (seed " +
         std::to_string(r.seed) + ")";
}

}  // namespace clusterar
