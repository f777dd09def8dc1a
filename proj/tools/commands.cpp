// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <spdlog/spdlog.h>

#include <filesystem>

#include "clusterar/data.hpp"
#include "clusterar/model.hpp"
#include "clusterar/pack_io.hpp"
#include "clusterar/patching.hpp"
#include "clusterar/training.hpp"
#include "clusterar/verify.hpp"

namespace clusterar::cli {
namespace {

std::uint64_t seed_of(const Config& cfg) { return static_cast<std::uint64_t>(cfg.integer("seed")); }

std::vector<Sample> load(const Config& cfg, const std::string& key) {
  const std::string dir = cfg.str(key);
  if (dir.empty()) return {};
  spdlog::info("reading corpus {}", dir);
  return read_corpus(dir);
}

}  // namespace

int cmd_gen(const Config& cfg, std::ostream& out) {
  const Geometry g = geometry_from(cfg);
  const auto samples =
      make_shape_corpus(seed_of(cfg), cfg.count("data.count"), cfg.count("data.classes"), g.image_size, g.channels);
  const auto manifest = write_corpus(cfg.str("paths.corpus"), samples);
  out << "wrote " << samples.size() << " images to " << cfg.str("paths.corpus") << " (" << manifest.filename().string()
      << ")\n";
  return kExitOk;
}

int cmd_pack(const Config& cfg, const PackArgs& args, std::ostream& out) {
  const Geometry g = geometry_from(cfg);
  const std::size_t N = cfg.count("separator.images");
  std::vector<Sample> corpus;
  if (args.synthetic) {
    corpus = make_shape_corpus(seed_of(cfg), N, cfg.count("data.classes"), g.image_size, g.channels);
  } else {
    corpus = load(cfg, "paths.corpus");
  }
  if (corpus.size() < N) {
    throw ConfigError("pack needs " + std::to_string(N) + " images, corpus has " + std::to_string(corpus.size()));
  }
  std::vector<const Image*> images;
  for (std::size_t i = 0; i < N; ++i) images.push_back(&corpus[i].image);
  const PackedSequence packed = pack_images(images, cfg);
  std::vector<std::size_t> per_image(N, 0);
  for (const auto& t : packed.tokens) ++per_image[t.meta.image_index];
  for (std::size_t i = 0; i < N; ++i) out << "image " << i << ": " << per_image[i] << " tokens\n";
  out << "total " << packed.token_count() << "\n";
  write_pack_dump(std::filesystem::path(cfg.str("paths.pack_out")), packed);
  spdlog::info("wrote {}", cfg.str("paths.pack_out"));
  return kExitOk;
}

int cmd_inspect(const Config& cfg, const std::string& dump, std::size_t max_tokens, std::ostream& out) {
  const std::string path = dump.empty() ? cfg.str("paths.pack_out") : dump;
  const PackedSequence p = read_pack_dump(std::filesystem::path(path));
  out << "images " << p.num_images << ", clusters/image " << p.clusters_per_image << ", cluster_side "
      << p.cluster_side << ", layout " << to_string(p.layout) << ", separator " << to_string(p.separator.value_kind)
      << ", width " << p.separator.embed_dim << ", tokens " << p.token_count() << "\n";
  out << "token image cluster slot position kind\n";
  for (std::size_t i = 0; i < std::min(max_tokens, p.token_count()); ++i) {
    const auto& m = p.tokens[i].meta;
    out << i << ' ' << m.image_index << ' ' << m.cluster_index << ' ' << m.within_cluster_index << ' '
        << m.position_id << ' ' << (m.is_separator ? "sep" : "pix") << "\n";
  }
  if (max_tokens < p.token_count()) out << "... " << p.token_count() - max_tokens << " more\n";
  return kExitOk;
}

int cmd_inspect_mask(const Config& cfg, std::ostream& out) {
  const Geometry g = geometry_from(cfg);
  const std::size_t N = cfg.count("separator.images");
  const Image blank(g.image_size, g.image_size, g.channels);
  const std::vector<const Image*> images(N, &blank);
  const PackedSequence p = pack_images(images, cfg);
  const auto mask = build_mask(p.cluster_ids());
  out << mask.size() << " tokens, " << p.cluster_count() << " clusters\n" << mask.render();
  return kExitOk;
}

int cmd_pretrain(const Config& cfg, std::ostream& out) {
  const auto corpus = load(cfg, "paths.corpus");
  const auto r = pretrain(cfg, corpus, cfg.str("paths.out"));
  out << "steps " << r.start_step << ".." << r.end_step << " of " << r.total_steps << ", tokens/sequence "
      << r.tokens_per_sequence << "\n";
  if (!r.losses.empty()) out << "loss " << r.losses.front() << " -> " << r.losses.back() << "\n";
  out << "metrics " << r.metrics.string() << "\ncheckpoint " << r.checkpoint.string() << "\n";
  return kExitOk;
}

int cmd_finetune(const Config& cfg, std::ostream& out) {
  const auto train = load(cfg, "paths.corpus");
  const auto eval = load(cfg, "paths.eval_corpus");
  const auto r = finetune(cfg, train, eval, cfg.str("paths.out"));
  out << "steps " << r.steps << ", sequence length " << r.sequence_length << ", encoder tensors loaded "
      << r.encoder_tensors_loaded << "\n";
  out << "train accuracy " << r.train_accuracy << "\n";
  if (!eval.empty()) out << "eval accuracy " << r.eval_accuracy << " (ema " << r.ema_eval_accuracy << ")\n";
  out << "checkpoint " << r.checkpoint.string() << "\n";
  return kExitOk;
}

int cmd_verify(const Config& cfg, std::ostream& out) {
  VerifyOptions opts;
  opts.seed = seed_of(cfg);
  opts.corrupt_mask = cfg.boolean("verify.corrupt_mask");
  const auto results = run_verify(opts);
  std::size_t failed = 0;
  for (const auto& r : results) {
    out << format_check(r) << "\n";
    failed += !r.pass;
  }
  out << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace clusterar::cli
