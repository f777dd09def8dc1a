// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "clusterar/data.hpp"
#include "clusterar/decoder.hpp"
#include "clusterar/gradcheck.hpp"
#include "clusterar/model.hpp"
#include "clusterar/objective.hpp"
#include "clusterar/separator.hpp"
#include "clusterar/ssm.hpp"
#include "clusterar/training.hpp"
#include "clusterar/verify.hpp"

using namespace clusterar;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("clusterar_accept_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Image noise_image(std::mt19937_64& rng, std::size_t size, std::size_t channels) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image img(size, size, channels);
  for (auto& v : img.pixels) v = u(rng);
  return img;
}

// 1. Recurrence and convolution agree on random time-invariant systems.
Outcome scan_kernel() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> dd(1, 8), ll(1, 64);
  std::uniform_real_distribution<double> a(-2.0, -0.01), bc(-1.0, 1.0), logd(std::log(1e-3), std::log(1.0));
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t d = dd(rng), L = ll(rng);
    SsmParams p;
    for (std::size_t i = 0; i < d; ++i) {
      p.A.push_back(a(rng));
      p.B.push_back(bc(rng));
      p.C.push_back(bc(rng));
    }
    p.delta = std::exp(logd(rng));
    std::vector<double> x(L);
    for (auto& v : x) v = bc(rng);
    const DiscreteSsm disc = discretize(p);
    const auto y_rec = scan_recurrent(disc, x);
    const auto y_conv = kernel_conv(disc, x);
    double diff = 0.0, scale = 1e-300;
    for (std::size_t t = 0; t < L; ++t) {
      diff = std::max(diff, std::abs(y_rec[t] - y_conv[t]));
      scale = std::max(scale, std::abs(y_rec[t]));
    }
    worst = std::max(worst, diff / scale);
  }
  return {worst < 1e-5, fmt("max relative deviation %.2e over 100 systems", worst)};
}

// 2. One-scan encoder causality across images and across positions.
Outcome causality() {
  const Config cfg = Config::preset("desk");
  PretrainModel<float> model(cfg);
  const Geometry g = geometry_from(cfg);
  std::mt19937_64 rng(202);
  const Image a = noise_image(rng, g.image_size, g.channels);
  const Image b = noise_image(rng, g.image_size, g.channels);
  const Image b2 = noise_image(rng, g.image_size, g.channels);
  auto encode = [&](const PackedSequence& p) {
    Tape<float> t;
    return t.value(model.encoder.encode(t, p, EncodeOptions::with_mode(ScanMode::OneScan)));
  };
  const PackedSequence packed = pack_images({&a, &b}, cfg);
  const Matrix<float> base = encode(packed);
  const Matrix<float> other = encode(pack_images({&a, &b2}, cfg));
  std::size_t image_one = 0, cross = 0;
  for (std::size_t r = 0; r < packed.token_count(); ++r) {
    if (packed.tokens[r].meta.image_index != 0) continue;
    ++image_one;
    for (std::size_t c = 0; c < base.cols; ++c) cross += base(r, c) != other(r, c);
  }
  std::vector<std::size_t> pixel_rows;
  for (std::size_t r = 0; r < image_one; ++r)
    if (!packed.tokens[r].meta.is_separator) pixel_rows.push_back(r);
  std::size_t within = 0, moved = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t pos = pixel_rows[std::uniform_int_distribution<std::size_t>(0, pixel_rows.size() - 1)(rng)];
    PackedSequence p = packed;
    for (auto& v : p.tokens[pos].values) v += 0.5f;
    const Matrix<float> y = encode(p);
    for (std::size_t r = 0; r < pos; ++r)
      for (std::size_t c = 0; c < y.cols; ++c) within += y(r, c) != base(r, c);
    for (std::size_t c = 0; c < y.cols; ++c) moved += y(pos, c) != base(pos, c);
  }
  const bool ok = image_one > 0 && cross == 0 && within == 0 && moved > 0;
  return {ok, "image-1 rows changed " + std::to_string(cross) + ", earlier rows changed " + std::to_string(within) +
                  " over 20 positions"};
}

// 3. Mask equals the brute-force rule on every defined configuration, and
// perturbing later clusters leaves earlier predictions untouched.
Outcome mask_oracle() {
  std::size_t cases = 0, skipped = 0, mismatches = 0;
  for (std::size_t n : {1, 2}) {
    for (std::size_t L : {1, 9}) {
      for (std::size_t side : {1, 4}) {
        for (LayoutKind kind : {LayoutKind::SC, LayoutKind::CS, LayoutKind::SCS, LayoutKind::CSC}) {
          const bool dense = kind == LayoutKind::SCS || kind == LayoutKind::CSC;
          if (dense && L % side != 0) {
            ++skipped;
            continue;
          }
          const std::size_t grid = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(L)))) * side;
          std::vector<ClusterSequence> imgs;
          std::mt19937_64 rng(n * 1000 + L * 10 + side);
          for (std::size_t k = 0; k < n; ++k) imgs.push_back(image_to_clusters(noise_image(rng, grid, 1), 1, side));
          const auto p = pack(imgs, SeparatorSpec::square(SeparatorValue::Identity, side, 4), kind);
          const std::size_t per = side * side;
          const auto mask = build_mask(p.cluster_ids());
          const std::size_t T = p.token_count();
          for (std::size_t q = 0; q < T; ++q)
            for (std::size_t k = 0; k < T; ++k) mismatches += mask(q, k) != (k / per <= q / per);
          ++cases;
        }
      }
    }
  }

  Config cfg = Config::preset("desk");
  PretrainModel<float> model(cfg);
  const Geometry g = geometry_from(cfg);
  std::mt19937_64 rng(303);
  const Image a = noise_image(rng, g.image_size, g.channels), b = noise_image(rng, g.image_size, g.channels);
  const PackedSequence packed = pack_images({&a, &b}, cfg);
  auto predict = [&](const PackedSequence& p) {
    Tape<float> t;
    return t.value(model.predict(t, p));
  };
  const Matrix<float> base = predict(packed);
  std::size_t leaks = 0;
  for (std::uint32_t j = 1; j < packed.cluster_count(); ++j) {
    PackedSequence p = packed;
    for (auto& tok : p.tokens)
      if (tok.meta.cluster_index >= j && !tok.meta.is_separator)
        for (auto& v : tok.values) v = 1.0f - v;
    const Matrix<float> y = predict(p);
    for (std::size_t r = 0; r < p.token_count(); ++r) {
      if (p.tokens[r].meta.cluster_index >= j) continue;
      for (std::size_t c = 0; c < y.cols; ++c) leaks += y(r, c) != base(r, c);
    }
  }
  return {mismatches == 0 && leaks == 0 && cases == 24,
          std::to_string(cases) + " configurations (" + std::to_string(skipped) + " undefined), " +
              std::to_string(mismatches) + " mask mismatches, " + std::to_string(leaks) + " prediction leaks"};
}

// 4. Token arithmetic of the default geometry.
Outcome packing() {
  const Config cfg = Config::preset("full");
  const Geometry g = geometry_from(cfg);
  const Image img(g.image_size, g.image_size, g.channels, 0.5f);
  bool ok = true;
  std::string totals;
  for (std::size_t n : {1, 2, 4, 8, 16}) {
    const std::vector<const Image*> imgs(n, &img);
    const auto p = pack_images(imgs, cfg);
    std::size_t sep = 0, pix = 0;
    for (const auto& t : p.tokens) (t.meta.is_separator ? sep : pix) += 1;
    ok = ok && p.token_count() == 160 * n && pix == 144 * n && sep == 16 * n;
    totals += (totals.empty() ? "" : ", ") + std::to_string(p.token_count());
  }
  return {ok, "totals {" + totals + "}"};
}

// 5. Gradient check on the full pretraining graph.
Outcome gradients() {
  const Config cfg = micro_config();
  PretrainModel<double> model(cfg);
  const Geometry g = geometry_from(cfg);
  std::mt19937_64 rng(505);
  const Image a = noise_image(rng, g.image_size, g.channels), b = noise_image(rng, g.image_size, g.channels);
  const auto packed = pack_images({&a, &b}, cfg);
  const auto plan = build_targets(packed, target_options_from(cfg));
  const auto r = grad_check(model.store, [&](Tape<double>& t) { return model.loss(t, packed, plan); }, 1e-4, 1e-4);
  return {r.pass && r.max_rel_error < 1e-4,
          fmt("max relative error %.2e over %.0f tensors", r.max_rel_error, static_cast<double>(r.entries.size()))};
}

// Mean loss of `model` over the fixed pairs of `images`.
double fixed_set_loss(const PretrainModel<float>& model, const std::vector<Sample>& images, const Config& cfg) {
  const TargetOptions opts = target_options_from(cfg);
  const std::size_t N = cfg.count("separator.images");
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + N <= images.size(); i += N) {
    std::vector<const Image*> ptrs;
    for (std::size_t k = 0; k < N; ++k) ptrs.push_back(&images[i + k].image);
    const auto packed = pack_images(ptrs, cfg, model.separator_embedding());
    Tape<float> t;
    total += t.value(model.loss(t, packed, build_targets(packed, opts)))(0, 0);
    ++count;
  }
  return total / static_cast<double>(count);
}

// 6. Overfitting 32 fixed images.
Outcome overfit() {
  const fs::path dir = scratch("overfit");
  Config cfg = Config::preset("desk");
  cfg.set("aug.crop_pad", "0");
  cfg.set("aug.flip", "false");
  cfg.set("train.shuffle", "false");
  cfg.set("optim.epochs", "250");  // 2 steps per epoch
  cfg.set("optim.max_steps", "500");
  const auto images = make_shape_corpus(606, 32, 4, 16, 3);
  const PretrainModel<float> init(cfg);
  const double before = fixed_set_loss(init, images, cfg);
  const auto r = pretrain(cfg, images, dir);
  PretrainModel<float> trained(cfg);
  restore_params(trained.store, load_checkpoint(r.checkpoint));
  const double after = fixed_set_loss(trained, images, cfg);
  fs::remove_all(dir);
  const double ratio = after / before;
  return {r.end_step <= 500 && ratio <= 0.10 && r.losses.back() <= 0.10 * r.losses.front(),
          fmt("fixed-set loss %.4f -> %.4f (ratio %.3f)", before, after, ratio) +
              fmt(", logged step 0 %.4f, last %.4f", r.losses.front(), r.losses.back()) + ", " +
              std::to_string(r.end_step) + " steps"};
}

// 7. Target normalization.
Outcome normalization() {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> px(0.0, 1.0), sa(0.5, 10.0), sb(-5.0, 5.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(768), q(768);
    for (auto& v : p) v = px(rng);
    const double a = sa(rng), b = sb(rng);
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = a * p[i] + b;
    const auto np = normalize_target(p), nq = normalize_target(q);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      diff = std::max(diff, std::abs(np[i] - nq[i]));
      scale = std::max(scale, std::abs(np[i]));
    }
    worst = std::max(worst, diff / scale);
  }
  double constant = 0.0;
  for (double c : {0.0, 0.3, 1.0, 255.0}) {
    for (double v : normalize_target(std::vector<double>(768, c))) constant = std::max(constant, std::abs(v));
  }
  return {worst < 1e-5 && constant <= 1e-2, fmt("shift/scale deviation %.2e, constant patch max %.2e", worst, constant)};
}

// 8. Constant separator patterns.
Outcome separators() {
  const auto id = make_separator(SeparatorSpec::square(SeparatorValue::Identity, 4, 16));
  std::size_t ones_tokens = 0;
  bool ok = id.rows == 16;
  for (std::size_t r = 0; r < id.rows; ++r) {
    const bool diag = r % 5 == 0;
    const bool all_one = std::all_of(id.row(r).begin(), id.row(r).end(), [](float v) { return v == 1.0f; });
    const bool all_zero = std::all_of(id.row(r).begin(), id.row(r).end(), [](float v) { return v == 0.0f; });
    ones_tokens += all_one;
    ok = ok && (diag ? all_one : all_zero);
  }
  for (auto [kind, want] : {std::pair{SeparatorValue::Zeros, 0.0f}, {SeparatorValue::Ones, 1.0f}}) {
    const auto m = make_separator(SeparatorSpec::square(kind, 4, 16));
    ok = ok && m.rows == 16 && std::all_of(m.data.begin(), m.data.end(), [&](float v) { return v == want; });
  }
  return {ok && ones_tokens == 4, std::to_string(ones_tokens) + " ones-tokens on the diagonal, Zeros/Ones constant"};
}

// Writes and reads back a corpus so images take the on-disk 8-bit form.
std::vector<Sample> through_disk(const std::vector<Sample>& s, const fs::path& dir) {
  write_corpus(dir, s);
  return read_corpus(dir);
}

// 9. Pretrained init versus random init on a low-label task.
Outcome finetune_direction() {
  const fs::path dir = scratch("finetune");
  Config base = Config::preset("desk");
  base.set("optim.epochs", "8");
  base.set("finetune.epochs", "40");
  int wins = 0;
  std::string detail;
  for (int s = 1; s <= 3; ++s) {
    Config cfg = base;
    cfg.set("seed", std::to_string(s));
    const fs::path run = dir / ("seed" + std::to_string(s));
    const auto unlabeled = through_disk(make_shape_corpus(s + 200, 1024, 4, 16, 3), run / "unlabeled");
    const auto train = through_disk(make_shape_corpus(s, 128, 4, 16, 3), run / "train");
    const auto eval = through_disk(make_shape_corpus(s + 100, 256, 4, 16, 3), run / "eval");
    const auto pre = pretrain(cfg, unlabeled, run / "pre");
    const auto scratch_run = finetune(cfg, train, eval, run / "random");
    Config warm = cfg;
    warm.set("finetune.checkpoint", pre.checkpoint.string());
    const auto warm_run = finetune(warm, train, eval, run / "pretrained");
    const bool win = warm_run.eval_accuracy >= scratch_run.eval_accuracy;
    wins += win;
    detail += fmt("seed %.0f: %.3f vs %.3f; ", s, warm_run.eval_accuracy, scratch_run.eval_accuracy);
  }
  const auto n = geometry_from(base).pixel_tokens();
  bool lengths = true;
  for (const char* policy : {"tail", "middle"}) {
    Config cfg = base;
    cfg.set("finetune.class_token", policy);
    cfg.set("finetune.max_steps", "2");
    const auto few = make_shape_corpus(9, 32, 4, 16, 3);
    const auto r = finetune(cfg, few, few, dir / policy);
    lengths = lengths && r.sequence_length == n + 1;
  }
  fs::remove_all(dir);
  return {wins >= 2 && lengths,
          detail + std::to_string(wins) + "/3 pretrained >= random; tail and middle lengths " +
              (lengths ? "n+1" : "wrong")};
}

// 10. Seeded runs and resumed runs reproduce the metrics file.
Outcome determinism() {
  const fs::path dir = scratch("determinism");
  Config cfg = Config::preset("desk");
  cfg.set("optim.epochs", "3");
  cfg.set("checkpoint.every", "5");
  const auto corpus = make_shape_corpus(1010, 64, 4, 16, 3);
  const auto a = pretrain(cfg, corpus, dir / "a");
  const auto b = pretrain(cfg, corpus, dir / "b");
  Config head = cfg;
  head.set("optim.max_steps", "5");
  pretrain(head, corpus, dir / "c");
  Config tail = cfg;
  tail.set("train.resume", (dir / "c" / "step_5.ckpt").string());
  const auto c = pretrain(tail, corpus, dir / "c");
  const bool same = slurp(a.metrics) == slurp(b.metrics) && !slurp(a.metrics).empty();
  const bool resumed = slurp(c.metrics) == slurp(a.metrics) &&
                       load_checkpoint(c.checkpoint).tensors == load_checkpoint(a.checkpoint).tensors;
  fs::remove_all(dir);
  return {same && resumed && a.end_step > 5,
          std::string("repeat ") + (same ? "identical" : "differs") + ", resume at step 5 " +
              (resumed ? "identical" : "differs") + " over " + std::to_string(a.end_step) + " steps"};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "scan/kernel equivalence", 5.0, scan_kernel},
      {2, "one-scan causality", 10.0, causality},
      {3, "mask oracle and decoder causality", 0.0, mask_oracle},
      {4, "packing arithmetic", 0.0, packing},
      {5, "gradient check", 60.0, gradients},
      {6, "overfit smoke", 300.0, overfit},
      {7, "normalization identities", 0.0, normalization},
      {8, "separator structure", 0.0, separators},
      {9, "fine-tune direction", 600.0, finetune_direction},
      {10, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s budget", c.limit_s);
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
