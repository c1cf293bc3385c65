// musesvs/adaptor.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_ADAPTOR_HPP_
#define MUSESVS_ADAPTOR_HPP_

#include <optional>
#include <vector>

#include "musesvs/blocks.hpp"

namespace musesvs {

// Per-phoneme pitch statistics in Hz. `cv` is the coefficient of variation
// sigma/mu; rests are marked unvoiced and excluded from losses and metrics.
struct PitchStats {
  std::vector<double> note_hz;
  std::vector<double> mean_hz;
  std::vector<double> cv;
  std::vector<bool> voiced;

  int length() const { return static_cast<int>(mean_hz.size()); }
  void validate() const;
};

// Pitch loss: lambda_pm * mean |mu_hat - mu| + lambda_pcv * mean
// |cv_hat - cv| over voiced phonemes.
double pitch_loss(const PitchStats& pred, const PitchStats& target,
                  double lambda_pm, double lambda_pcv);

struct DurationPlan {
  std::vector<double> predicted;  // d_hat, real frames
  std::vector<int> note;          // d_bar
  std::vector<double> sync_err;   // SyncErr(i), real frames

  int length() const { return static_cast<int>(predicted.size()); }
  static DurationPlan from_predictions(std::vector<double> predicted,
                                       std::vector<int> note);
  void validate() const;  // checks the SyncErr recurrence exactly
};

// Duration loss: (1/N) [sum (d_hat - d)^2 +
// lambda_sync * |sum_i SyncErr(i)|]. The second term penalizes the
// accumulated difference against the note durations, not per-phoneme
// deviations from them.
double duration_loss(const DurationPlan& plan, const std::vector<int>& target,
                     double lambda_sync);

// Rounds real-valued frame durations to integers >= 1, carrying the
// cumulative remainder so rounding never accumulates drift.
std::vector<int> round_durations_with_carry(const std::vector<double>& pred);

// Frame-level F0 realization: vibrato sine per phoneme with amplitude
// sqrt(2) * cv * mu (so the per-phoneme standard deviation tends to
// mu * cv), random phase per phoneme. Unvoiced phonemes emit 0.
std::vector<double> realize_f0(const PitchStats& stats,
                               const std::vector<int>& durations,
                               double vibrato_rate_hz, std::uint64_t rng_seed,
                               double frame_rate = kFrameRate);

// Ground-truth per-phoneme energy: mean over the phoneme's frames of the
// Euclidean norm of mel columns.
std::vector<double> energy_from_mel(const Tensor& mel,
                                    const std::vector<int>& durations);

// Small conv tower (kernel 3) with an affine head, the shape shared by the
// variance-adaptor predictors.
struct ConvPredictor {
  std::vector<Conv1d> convs;
  Linear head;
  double dropout_p = 0.0;
  static ConvPredictor create(ParamStore& ps, const std::string& prefix,
                              int dim, int layers, int kernel, int filters,
                              int out_dim, double dropout, Rng& rng);
  Var forward(const Var& x, Rng* rng = nullptr, bool training = false) const;
};

// Statistical pitch predictor: a residual head (mu_hat = note + r_hat) and
// a softplus CV head, both conditioned on E(y_i, z_1, z_2).
struct PitchPredictor {
  ConvPredictor mean_head;
  ConvPredictor cv_head;
  bool statistical = true;

  static PitchPredictor create(ParamStore& ps, const std::string& prefix,
                               const ModelConfig& cfg, Rng& rng);
  // Returns (mean_hz Lx1, cv Lx1) with mean = note + residual.
  std::pair<Var, Var> forward(const Var& e2, const std::vector<double>& note_hz,
                              Rng* rng = nullptr, bool training = false) const;
};

// Pitch loss on graph values for training. Masked mean over voiced
// phonemes; N is the voiced count.
Var pitch_loss_var(const Var& mean_hz, const Var& cv,
                   const PitchStats& target, double lambda_pm,
                   double lambda_pcv);

// Context-aware residual duration predictor: GRU + affine head, consuming
// [E(y_i, z1, z2) ; SyncErr(i-1) in seconds], emitting the residual s_hat
// with d_hat = note + s_hat.
struct Crdp {
  GruCell cell;
  Linear head;
  double frame_rate = kFrameRate;

  static Crdp create(ParamStore& ps, const std::string& prefix,
                     const ModelConfig& cfg, Rng& rng);

  struct StepResult {
    Var d_hat;  // 1x1
    Var state;  // 1xh
  };
  StepResult step(const Var& state, const Var& e2_row, const Var& sync_prev,
                  double note_frames) const;
  Var initial_state() const;
};

// Graph-connected rollout result; `plan()` snapshots the values.
struct DurationRollout {
  Var predicted;  // Lx1
  Var sync_err;   // Lx1
  std::vector<int> note;
  DurationPlan plan() const;
};

DurationRollout crdp_rollout(const Crdp& crdp, const Var& e2,
                             const std::vector<int>& note);

Var duration_loss_var(const DurationRollout& rollout,
                      const std::vector<int>& target, double lambda_sync);

// Baseline 1: predicts the ratio d / d_bar, d_hat = ratio * d_bar.
struct NoteNormBaseline {
  ConvPredictor pred;
  static NoteNormBaseline create(ParamStore& ps, const std::string& prefix,
                                 const ModelConfig& cfg, Rng& rng);
  DurationRollout rollout(const Var& e2, const std::vector<int>& note,
                          Rng* rng = nullptr, bool training = false) const;
  Var loss(const DurationRollout& r, const std::vector<int>& target) const;
};

// Baseline 2: predicts d_hat directly; trained with phoneme MSE plus MSE of
// per-syllable sums.
struct SyllableBaseline {
  ConvPredictor pred;
  static SyllableBaseline create(ParamStore& ps, const std::string& prefix,
                                 const ModelConfig& cfg, Rng& rng);
  DurationRollout rollout(const Var& e2, const std::vector<int>& note,
                          Rng* rng = nullptr, bool training = false) const;
  Var loss(const DurationRollout& r, const std::vector<int>& target,
           const std::vector<std::pair<int, int>>& syllables) const;
};

struct TeacherSignals {
  std::vector<double> pitch_mean_hz;
  std::vector<double> pitch_cv;
  std::vector<double> energy;
  std::vector<int> durations;  // ground-truth d_i
};

struct AdaptorOutput {
  JointEmbeddingSeq joint;  // stage 4
  std::vector<int> stage_trace;  // stages seen while accumulating
  Var e2;                   // E(y_i, z1, z2), input of pitch/duration heads
  Var pitch_mean;           // Lx1, Hz
  Var pitch_cv;             // Lx1
  Var energy;               // Lx1
  DurationRollout durations;
  Var singer_residual;      // L x d
  Var emotion_residual;     // L x d
  PitchStats pitch_stats(const std::vector<double>& note_hz,
                         const std::vector<bool>& voiced) const;
};

// The variance adaptor: accumulates singer, emotion, pitch and energy
// residuals onto E(y_i) in that order, predicting attribute values along
// the way (teacher-forced when signals are provided).
struct VarianceAdaptor {
  ResidualAttributeEncoder enc_singer, enc_emotion, enc_pitch, enc_energy;
  AttributeTable singer_table, emotion_table;
  PitchPredictor pitch_pred;
  ConvPredictor energy_pred;
  Linear pitch_cond;   // (mu, cv) -> d
  Linear energy_cond;  // energy -> d
  Crdp crdp;
  NoteNormBaseline baseline_note_norm;
  SyllableBaseline baseline_syllable;

  static VarianceAdaptor create(ParamStore& ps, const ModelConfig& cfg,
                                Rng& rng);

  AdaptorOutput forward(const JointEmbeddingSeq& e0,
                        const AttributeContext& ctx,
                        const std::vector<double>& note_hz,
                        const std::vector<bool>& voiced,
                        const std::vector<int>& note_durations,
                        const TeacherSignals* teacher = nullptr,
                        Rng* rng = nullptr, bool training = false) const;
};

}  // namespace musesvs

#endif  // MUSESVS_ADAPTOR_HPP_
