// musesvs/trainer.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_TRAINER_HPP_
#define MUSESVS_TRAINER_HPP_

#include <string>

#include "musesvs/checkpoint.hpp"
#include "musesvs/corpus.hpp"
#include "musesvs/losses.hpp"
#include "musesvs/model.hpp"

namespace musesvs {

struct TrainConfig {
  std::string preset = "toy";
  SyntheticCorpusConfig corpus;
  std::string corpus_dir;  // when set, load instead of generating
  LossWeights weights;
  int max_steps = 800;
  int batch_size = 8;
  int lr_warmup = 200;
  double peak_lr = 1e-3;
  double clip_norm = 1.0;
  double soft_dtw_gamma = 1.0;
  // Adversarial losses run on a centered mel crop of at most this many
  // frames (0 = full length). Teacher forcing keeps real/fake lengths
  // equal, so both sides get the same crop.
  int disc_crop_frames = 64;
  std::uint64_t seed = 7;
  int log_every = 10;
  bool freeze_style_teacher = false;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& json_text);
  std::uint64_t hash() const;
};

struct StepLosses {
  int step = 0;
  LossParts parts;        // mel / pitch / energy / duration / adversarial
  double total = 0.0;     // weighted generator total
  double disc = 0.0;      // discriminator loss
  double distill = 0.0;
  double baseline_note_norm = 0.0;
  double baseline_syllable = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  int steps_done = 0;
  bool aborted_non_finite = false;
  double first_mel_loss = 0.0;
  double last_mel_loss = 0.0;
  std::string checkpoint_path;
  std::string loss_csv_path;
};

// Alternating generator/discriminator training over the synthetic corpus.
// Deterministic given (config, seed): batches, dropout and the style
// running mean all derive from the stored RNG state, so a run resumed from
// a checkpoint replays the continuing run bit-identically.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);
  Trainer(const TrainConfig& cfg, Corpus corpus);

  StepLosses step_once();
  void save(const std::string& path);
  void load(const std::string& path);

  // Runs to cfg.max_steps writing loss_curve.csv and checkpoint.msvs under
  // out_dir. A non-finite loss aborts, keeping the last good checkpoint.
  TrainResult run(const std::string& out_dir);

  MuseSvs& model() { return model_; }
  const Corpus& corpus() const { return corpus_; }
  int step() const { return step_; }
  int num_threads() const { return threads_; }

 private:
  struct SampleResult;
  SampleResult compute_sample(int sample_index, int slot, double lambda_adv);

  TrainConfig cfg_;
  MuseSvs model_;
  Corpus corpus_;
  Adam opt_g_, opt_d_;
  Rng rng_;
  RunningMean style_mean_;
  int step_ = 0;
  int threads_ = 1;
};

// MUSESVS_NUM_THREADS caps internal parallelism; defaults to 1.
int env_num_threads();

}  // namespace musesvs

#endif  // MUSESVS_TRAINER_HPP_
