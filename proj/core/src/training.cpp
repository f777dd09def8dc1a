// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#include "clusterar/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "clusterar/patching.hpp"

namespace clusterar {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch, bool shuffle) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(derive_seed(seed, 0x5bf, epoch));
    rng.shuffle(order.begin(), order.end());
  }
  return order;
}

/// Keeps records with step < `keep_below` and returns an append stream.
std::ofstream open_metrics(const std::filesystem::path& path, std::size_t keep_below) {
  std::vector<std::string> kept;
  if (keep_below > 0 && std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto rec = nlohmann::json::parse(line, nullptr, false);
      if (rec.is_discarded() || !rec.contains("step")) continue;
      if (rec["step"].get<std::size_t>() < keep_below) kept.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TrainingError("cannot write metrics file " + path.string());
  for (const auto& l : kept) out << l << '\n';
  return out;
}

std::string step_checkpoint_name(std::size_t step) { return "step_" + std::to_string(step) + ".ckpt"; }

}  // namespace

std::string metrics_line(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["loss"] = m.loss;
  j["lr"] = m.lr;
  j["grad_norm"] = m.grad_norm;
  j["wall_ms"] = m.wall_ms;
  return j.dump();
}

OptimHyper pretrain_hyper_from(const Config& cfg) {
  OptimHyper h;
  h.batch_size = std::max<std::size_t>(1, cfg.count("optim.batch_size"));
  h.base_lr = OptimHyper::scaled_lr(cfg.real("optim.lr_per_256"), h.batch_size);
  h.weight_decay = cfg.real("optim.weight_decay");
  h.beta1 = cfg.real("optim.beta1");
  h.beta2 = cfg.real("optim.beta2");
  h.warmup_epochs = cfg.real("optim.warmup_epochs");
  h.total_epochs = cfg.real("optim.epochs");
  h.layer_decay = 1.0;
  return h;
}

OptimHyper finetune_hyper_from(const Config& cfg) {
  OptimHyper h;
  h.batch_size = std::max<std::size_t>(1, cfg.count("finetune.batch_size"));
  h.base_lr = OptimHyper::scaled_lr(cfg.real("finetune.lr_per_256"), h.batch_size);
  h.weight_decay = cfg.real("finetune.weight_decay");
  h.beta1 = cfg.real("finetune.beta1");
  h.beta2 = cfg.real("finetune.beta2");
  h.warmup_epochs = cfg.real("finetune.warmup_epochs");
  h.total_epochs = cfg.real("finetune.epochs");
  h.layer_decay = cfg.real("finetune.layer_decay");
  return h;
}

std::size_t images_per_step(const Config& cfg) {
  return std::max<std::size_t>(1, cfg.count("optim.batch_size")) * cfg.count("separator.images");
}

std::size_t pretrain_steps_per_epoch(const Config& cfg, std::size_t corpus_size) {
  return std::max<std::size_t>(1, corpus_size / images_per_step(cfg));
}

std::vector<std::string> resume_keys() {
  static const std::vector<std::string> skip_prefix = {"paths.", "finetune.", "data.", "verify."};
  static const std::vector<std::string> skip = {"train.resume", "optim.max_steps", "checkpoint.every",
                                                "log.wall_clock"};
  std::vector<std::string> keys;
  for (const auto& k : config_keys()) {
    if (std::find(skip.begin(), skip.end(), k.name) != skip.end()) continue;
    if (std::any_of(skip_prefix.begin(), skip_prefix.end(),
                    [&](const std::string& p) { return k.name.rfind(p, 0) == 0; })) {
      continue;
    }
    keys.push_back(k.name);
  }
  return keys;
}

void require_compatible(const Config& current, const Checkpoint& ckpt, const std::vector<std::string>& keys) {
  Config saved = Config::preset("full");
  for (const auto& [k, v] : parse_config_text(ckpt.config, "checkpoint config")) {
    try {
      saved.set(k, v);
    } catch (const ConfigError&) {
      // Keys this build no longer knows cannot affect compatibility.
    }
  }
  const auto differing = current.diff(saved, keys);
  if (!differing.empty()) {
    const auto& k = differing.front();
    throw TrainingError("checkpoint configuration mismatch on " + k + ": checkpoint has '" + saved.str(k) +
                        "', run has '" + current.str(k) + "'");
  }
}

Checkpoint capture_pretrain(const PretrainModel<float>& model, const AdamW<float>& opt, const Config& cfg,
                            std::size_t step, std::size_t total_steps) {
  Checkpoint c;
  c.kind = "pretrain";
  c.step = step;
  c.total_steps = total_steps;
  c.config = cfg.snapshot();
  const auto& m = opt.first_moments();
  const auto& v = opt.second_moments();
  for (std::size_t i = 0; i < model.store.size(); ++i) {
    const auto& p = model.store[i];
    c.tensors.push_back({p.name, TensorRole::Param, p.value});
    c.tensors.push_back({p.name, TensorRole::AdamM, m[i]});
    c.tensors.push_back({p.name, TensorRole::AdamV, v[i]});
  }
  return c;
}

std::size_t restore_params(ParamStore<float>& store, const Checkpoint& ckpt, TensorRole role,
                           const std::string& prefix) {
  std::size_t copied = 0;
  for (const auto& t : ckpt.tensors) {
    if (t.role != role || t.name.rfind(prefix, 0) != 0) continue;
    auto* p = store.find(t.name);
    if (p == nullptr) continue;
    if (!p->value.same_shape(t.value)) {
      throw CheckpointError("checkpoint tensor " + t.name + " is " + shape_string(t.value) + ", model expects " +
                            shape_string(p->value));
    }
    p->value = t.value;
    ++copied;
  }
  return copied;
}

PretrainResult pretrain(const Config& cfg, const std::vector<Sample>& corpus, const std::filesystem::path& out_dir) {
  const std::size_t N = cfg.count("separator.images");
  const std::size_t B = std::max<std::size_t>(1, cfg.count("optim.batch_size"));
  if (N == 0) throw ConfigError("config: separator.images must be positive");
  if (corpus.size() < N) {
    throw TrainingError("corpus has " + std::to_string(corpus.size()) + " images, one sequence needs " +
                        std::to_string(N));
  }
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  const std::size_t spe = pretrain_steps_per_epoch(cfg, corpus.size());
  const OptimHyper hyper = pretrain_hyper_from(cfg);
  const LrSchedule sched = make_schedule(hyper, spe);
  const std::size_t cap = cfg.count("optim.max_steps");
  const std::size_t end = cap > 0 ? std::min(cap, sched.total_steps) : sched.total_steps;
  const std::size_t every = cfg.count("checkpoint.every");
  const std::size_t pad = cfg.count("aug.crop_pad");
  const bool flip = cfg.boolean("aug.flip");
  const bool shuffle = cfg.boolean("train.shuffle");
  const bool wall = cfg.boolean("log.wall_clock");
  const TargetOptions target_opts = target_options_from(cfg);

  PretrainModel<float> model(cfg);
  AdamW<float> opt(model.store, hyper, 0);

  PretrainResult result;
  result.total_steps = sched.total_steps;
  const std::string resume = cfg.str("train.resume");
  if (!resume.empty()) {
    const Checkpoint ck = load_checkpoint(resume);
    if (ck.kind != "pretrain") throw TrainingError("resume: " + resume + " is a " + ck.kind + " checkpoint");
    require_compatible(cfg, ck, resume_keys());
    restore_params(model.store, ck, TensorRole::Param);
    for (std::size_t i = 0; i < model.store.size(); ++i) {
      const auto& name = model.store[i].name;
      const NamedTensor* m = ck.find(name, TensorRole::AdamM);
      const NamedTensor* v = ck.find(name, TensorRole::AdamV);
      if (m == nullptr || v == nullptr) throw CheckpointError("resume: no optimizer moments for " + name);
      opt.first_moments()[i] = m->value;
      opt.second_moments()[i] = v->value;
    }
    opt.set_step_count(ck.step);
    result.start_step = ck.step;
  }

  std::filesystem::create_directories(out_dir);
  result.metrics = out_dir / "metrics.jsonl";
  std::ofstream metrics = open_metrics(result.metrics, result.start_step);

  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;
  for (std::size_t step = result.start_step; step < end; ++step) {
    const auto t0 = Clock::now();
    const std::size_t epoch = step / spe;
    if (epoch != cached_epoch) {
      order = epoch_order(corpus.size(), seed, epoch, shuffle);
      cached_epoch = epoch;
    }
    const std::size_t base = (step % spe) * N * B;
    model.store.zero_grad();
    double loss = 0.0;
    const std::vector<float> sep_embed = model.separator_embedding();
    for (std::size_t k = 0; k < B; ++k) {
      std::vector<Image> images;
      images.reserve(N);
      for (std::size_t i = 0; i < N; ++i) {
        const Sample& s = corpus[order[(base + k * N + i) % corpus.size()]];
        Rng rng(derive_seed(seed, 0xa09, step, k * N + i));
        images.push_back(augment(s.image, pad, flip, rng));
      }
      std::vector<const Image*> ptrs;
      for (const auto& im : images) ptrs.push_back(&im);
      const PackedSequence packed = pack_images(ptrs, cfg, sep_embed);
      result.tokens_per_sequence = packed.token_count();
      const TargetPlan plan = build_targets(packed, target_opts);
      Tape<float> tape;
      const Var l = model.loss(tape, packed, plan);
      loss += static_cast<double>(tape.value(l)(0, 0));
      tape.backward(l, 1.0f / static_cast<float>(B));
    }
    loss /= static_cast<double>(B);
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss at step " + std::to_string(step));
    const double gn = grad_norm(model.store);
    const double lr = lr_at(step + 1, sched);
    try {
      opt.step(lr);
    } catch (const NonFiniteError& e) {
      throw TrainingError("step " + std::to_string(step) + ": " + e.what());
    }
    StepMetrics m{step, loss, lr, gn, 0.0};
    if (wall) m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    metrics << metrics_line(m) << '\n';
    metrics.flush();
    result.losses.push_back(loss);
    if (every > 0 && (step + 1) % every == 0) {
      save_checkpoint(out_dir / step_checkpoint_name(step + 1),
                      capture_pretrain(model, opt, cfg, step + 1, sched.total_steps));
    }
  }
  result.end_step = std::max(end, result.start_step);
  result.checkpoint = out_dir / "final.ckpt";
  save_checkpoint(result.checkpoint, capture_pretrain(model, opt, cfg, result.end_step, sched.total_steps));
  return result;
}

std::vector<double> drop_path_scales(std::size_t depth, double rate, Rng& rng) {
  std::vector<double> keep(2 * depth, 1.0);
  if (rate <= 0.0) return keep;
  for (std::size_t b = 0; b < depth; ++b) {
    const double p = depth > 1 ? rate * static_cast<double>(b) / static_cast<double>(depth - 1) : rate;
    for (std::size_t j = 0; j < 2; ++j) {
      const double u = rng.uniform();
      if (p > 0.0) keep[2 * b + j] = u < p ? 0.0 : 1.0 / (1.0 - p);
    }
  }
  return keep;
}

namespace {

PackedSequence classifier_input(const Image& image, const Config& cfg) {
  const Geometry g = geometry_from(cfg);
  if (image.height != g.image_size || image.width != g.image_size || image.channels != g.channels) {
    throw ConfigError("image is " + std::to_string(image.height) + "x" + std::to_string(image.width) + "x" +
                      std::to_string(image.channels) + ", configuration expects " + std::to_string(g.image_size) +
                      "x" + std::to_string(g.image_size) + "x" + std::to_string(g.channels));
  }
  return pack_single(image_to_clusters(image, g.patch_size, g.cluster_side));
}

}  // namespace

double accuracy(const Classifier<float>& model, const std::vector<Sample>& samples, const Config& cfg) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    Tape<float> t;
    const auto& logits = t.value(model.logits(t, classifier_input(s.image, cfg)));
    const auto best = std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin();
    if (best == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

FinetuneResult finetune(const Config& cfg, const std::vector<Sample>& train, const std::vector<Sample>& eval,
                        const std::filesystem::path& out_dir) {
  if (train.empty()) throw TrainingError("finetune: empty training corpus");
  const auto policy = parse_class_token(cfg.str("finetune.class_token"));
  if (!policy) throw ConfigError("config: finetune.class_token must be tail or middle");
  const std::size_t classes = cfg.count("data.classes");
  for (const auto* set : {&train, &eval}) {
    for (const auto& s : *set) {
      if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes) {
        throw ConfigError("label " + std::to_string(s.label) + " outside data.classes = " + std::to_string(classes));
      }
    }
  }
  const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  Classifier<float> model(cfg, classes, *policy);

  FinetuneResult result;
  const std::string ckpt_path = cfg.str("finetune.checkpoint");
  if (!ckpt_path.empty()) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    require_compatible(cfg, ck, architecture_keys());
    result.encoder_tensors_loaded = restore_params(model.store, ck, TensorRole::Param, "encoder.");
  }

  const OptimHyper hyper = finetune_hyper_from(cfg);
  const std::size_t B = hyper.batch_size;
  const std::size_t spe = std::max<std::size_t>(1, train.size() / B);
  const LrSchedule sched = make_schedule(hyper, spe);
  const std::size_t cap = cfg.count("finetune.max_steps");
  const std::size_t end = cap > 0 ? std::min(cap, sched.total_steps) : sched.total_steps;
  const std::size_t pad = cfg.count("aug.crop_pad");
  const bool flip = cfg.boolean("aug.flip");
  const bool shuffle = cfg.boolean("train.shuffle");
  const bool wall = cfg.boolean("log.wall_clock");
  const double drop = cfg.real("finetune.drop_path");
  const double ema_decay = cfg.real("finetune.ema_decay");
  const std::size_t depth = model.encoder.config().depth;

  AdamW<float> opt(model.store, hyper, model.max_layer());
  std::vector<Matrix<float>> ema;
  for (std::size_t i = 0; i < model.store.size(); ++i) ema.push_back(model.store[i].value);

  std::filesystem::create_directories(out_dir);
  result.metrics = out_dir / "finetune_metrics.jsonl";
  std::ofstream metrics = open_metrics(result.metrics, 0);

  std::size_t cached_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < end; ++step) {
    const auto t0 = Clock::now();
    const std::size_t epoch = step / spe;
    if (epoch != cached_epoch) {
      order = epoch_order(train.size(), seed, epoch, shuffle);
      cached_epoch = epoch;
    }
    model.store.zero_grad();
    double loss = 0.0;
    for (std::size_t k = 0; k < B; ++k) {
      const Sample& s = train[order[((step % spe) * B + k) % train.size()]];
      Rng rng(derive_seed(seed, 0xf17e, step, k));
      const PackedSequence input = classifier_input(augment(s.image, pad, flip, rng), cfg);
      result.sequence_length = input.token_count() + 1;
      Tape<float> t;
      const Var ce = cross_entropy(t, model.logits(t, input, drop_path_scales(depth, drop, rng)), {s.label});
      loss += static_cast<double>(t.value(ce)(0, 0));
      t.backward(ce, 1.0f / static_cast<float>(B));
    }
    loss /= static_cast<double>(B);
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss at fine-tune step " + std::to_string(step));
    const double gn = grad_norm(model.store);
    const double lr = lr_at(step + 1, sched);
    try {
      opt.step(lr);
    } catch (const NonFiniteError& e) {
      throw TrainingError("fine-tune step " + std::to_string(step) + ": " + e.what());
    }
    for (std::size_t i = 0; i < model.store.size(); ++i) {
      auto& e = ema[i].data;
      const auto& p = model.store[i].value.data;
      for (std::size_t j = 0; j < e.size(); ++j) {
        e[j] = static_cast<float>(ema_decay * e[j] + (1.0 - ema_decay) * p[j]);
      }
    }
    StepMetrics m{step, loss, lr, gn, 0.0};
    if (wall) m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    metrics << metrics_line(m) << '\n';
    metrics.flush();
    result.losses.push_back(loss);
  }
  result.steps = end;
  if (result.sequence_length == 0) result.sequence_length = geometry_from(cfg).pixel_tokens() + 1;

  result.train_accuracy = accuracy(model, train, cfg);
  result.eval_accuracy = accuracy(model, eval, cfg);
  for (std::size_t i = 0; i < model.store.size(); ++i) std::swap(model.store[i].value, ema[i]);
  result.ema_eval_accuracy = accuracy(model, eval, cfg);
  for (std::size_t i = 0; i < model.store.size(); ++i) std::swap(model.store[i].value, ema[i]);

  Checkpoint c;
  c.kind = "finetune";
  c.step = end;
  c.total_steps = sched.total_steps;
  c.config = cfg.snapshot();
  for (std::size_t i = 0; i < model.store.size(); ++i) {
    c.tensors.push_back({model.store[i].name, TensorRole::Param, model.store[i].value});
    c.tensors.push_back({model.store[i].name, TensorRole::Ema, ema[i]});
  }
  result.checkpoint = out_dir / "finetune.ckpt";
  save_checkpoint(result.checkpoint, c);
  return result;
}

}  // namespace clusterar
