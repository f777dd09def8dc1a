// Copyright 2026 The clusterar Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "clusterar/checkpoint.hpp"
#include "clusterar/config.hpp"
#include "clusterar/data.hpp"
#include "clusterar/model.hpp"
#include "clusterar/optim.hpp"

namespace clusterar {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StepMetrics {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  double wall_ms = 0.0;
};

/// One JSON object per line: {"step","loss","lr","grad_norm","wall_ms"}.
std::string metrics_line(const StepMetrics& m);

OptimHyper pretrain_hyper_from(const Config& cfg);
OptimHyper finetune_hyper_from(const Config& cfg);

/// Images consumed by one pretraining step: batch_size sequences of
/// separator.images images.
std::size_t images_per_step(const Config& cfg);
std::size_t pretrain_steps_per_epoch(const Config& cfg, std::size_t corpus_size);

struct PretrainResult {
  std::size_t start_step = 0;
  std::size_t end_step = 0;
  std::size_t total_steps = 0;
  std::size_t tokens_per_sequence = 0;
  std::vector<double> losses;  // one per step run
  std::filesystem::path metrics;
  std::filesystem::path checkpoint;
};

/// Pretraining on `corpus`. Writes out_dir/metrics.jsonl, periodic
/// out_dir/step_<k>.ckpt, and out_dir/final.ckpt. With train.resume set,
/// parameters, moments, and the step counter are restored, the metrics file
/// is cut back to the resumed step, and training continues. A non-finite
/// loss or gradient raises TrainingError and leaves earlier checkpoints.
PretrainResult pretrain(const Config& cfg, const std::vector<Sample>& corpus, const std::filesystem::path& out_dir);

Checkpoint capture_pretrain(const PretrainModel<float>& model, const AdamW<float>& opt, const Config& cfg,
                            std::size_t step, std::size_t total_steps);

/// Copies parameter tensors into `store` by name. Returns tensors copied.
/// Throws CheckpointError on a same-named tensor of a different shape.
std::size_t restore_params(ParamStore<float>& store, const Checkpoint& ckpt, TensorRole role = TensorRole::Param,
                           const std::string& prefix = "");

/// Throws TrainingError naming the first differing key.
void require_compatible(const Config& current, const Checkpoint& ckpt, const std::vector<std::string>& keys);

/// Keys a resumed pretraining run must share with its checkpoint.
std::vector<std::string> resume_keys();

struct FinetuneResult {
  std::size_t steps = 0;
  std::vector<double> losses;
  double train_accuracy = 0.0;  // raw weights, unaugmented training set
  double eval_accuracy = 0.0;   // raw weights, held-out set (0 when none)
  double ema_eval_accuracy = 0.0;
  std::size_t sequence_length = 0;  // tokens including the class token
  std::size_t encoder_tensors_loaded = 0;
  std::filesystem::path metrics;
  std::filesystem::path checkpoint;
};

/// Fine-tunes a four-scan classifier. Encoder weights come from
/// finetune.checkpoint when set (its architecture keys must match).
FinetuneResult finetune(const Config& cfg, const std::vector<Sample>& train, const std::vector<Sample>& eval,
                        const std::filesystem::path& out_dir);

/// Fraction of samples whose argmax logit equals the label.
double accuracy(const Classifier<float>& model, const std::vector<Sample>& samples, const Config& cfg);

/// Residual keep scales for stochastic depth: block b drops each branch
/// with probability rate * b / (depth - 1) and rescales survivors.
std::vector<double> drop_path_scales(std::size_t depth, double rate, Rng& rng);

}  // namespace clusterar
