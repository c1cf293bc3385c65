// src/adaptor.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/adaptor.hpp"

#include <cmath>

namespace musesvs {

void PitchStats::validate() const {
  const size_t n = mean_hz.size();
  check(note_hz.size() == n && cv.size() == n && voiced.size() == n,
        "pitch stats: field length mismatch");
  for (size_t i = 0; i < n; ++i) {
    check(cv[i] >= 0.0, "pitch stats: cv must be >= 0");
    if (voiced[i]) check(mean_hz[i] > 0.0, "pitch stats: voiced mean must be > 0");
  }
}

double pitch_loss(const PitchStats& pred, const PitchStats& target,
                  double lambda_pm, double lambda_pcv) {
  check(pred.length() == target.length(), "pitch_loss: length mismatch");
  double sum_m = 0.0, sum_cv = 0.0;
  int n = 0;
  for (int i = 0; i < pred.length(); ++i) {
    if (!target.voiced[i]) continue;
    sum_m += std::fabs(pred.mean_hz[i] - target.mean_hz[i]);
    sum_cv += std::fabs(pred.cv[i] - target.cv[i]);
    ++n;
  }
  check(n > 0, "pitch_loss: no voiced phonemes");
  return lambda_pm * sum_m / n + lambda_pcv * sum_cv / n;
}

DurationPlan DurationPlan::from_predictions(std::vector<double> predicted,
                                            std::vector<int> note) {
  check(predicted.size() == note.size() && !predicted.empty(),
        "duration plan: length mismatch");
  DurationPlan p;
  p.predicted = std::move(predicted);
  p.note = std::move(note);
  p.sync_err.resize(p.predicted.size());
  double acc = 0.0;
  for (size_t i = 0; i < p.predicted.size(); ++i) {
    acc += p.predicted[i] - p.note[i];
    p.sync_err[i] = acc;
  }
  return p;
}

void DurationPlan::validate() const {
  check(predicted.size() == note.size() && predicted.size() == sync_err.size(),
        "duration plan: field length mismatch");
  double prev = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const double expect = prev + (predicted[i] - note[i]);
    check(sync_err[i] == expect, "duration plan: SyncErr recurrence violated");
    prev = sync_err[i];
  }
}

double duration_loss(const DurationPlan& plan, const std::vector<int>& target,
                     double lambda_sync) {
  check(plan.predicted.size() == target.size(),
        "duration_loss: length mismatch");
  const int n = plan.length();
  double sq = 0.0, sync_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = plan.predicted[i] - target[i];
    sq += d * d;
    sync_sum += plan.sync_err[i];
  }
  return (sq + lambda_sync * std::fabs(sync_sum)) / n;
}

std::vector<int> round_durations_with_carry(const std::vector<double>& pred) {
  std::vector<int> out;
  out.reserve(pred.size());
  double target_cum = 0.0;
  double emitted = 0.0;
  for (double p : pred) {
    target_cum += p;
    const long d = std::lround(target_cum - emitted);
    const int di = static_cast<int>(std::max(1L, d));
    out.push_back(di);
    emitted += di;
  }
  return out;
}

std::vector<double> realize_f0(const PitchStats& stats,
                               const std::vector<int>& durations,
                               double vibrato_rate_hz, std::uint64_t rng_seed,
                               double frame_rate) {
  check(static_cast<int>(durations.size()) == stats.length(),
        "realize_f0: durations do not align with stats");
  Rng rng(rng_seed);
  std::vector<double> f0;
  int frame = 0;
  for (int i = 0; i < stats.length(); ++i) {
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int k = 0; k < durations[i]; ++k, ++frame) {
      if (!stats.voiced[i]) {
        f0.push_back(0.0);
        continue;
      }
      const double t = frame / frame_rate;
      const double s =
          std::sin(2.0 * M_PI * vibrato_rate_hz * t + phase);
      f0.push_back(stats.mean_hz[i] *
                   (1.0 + std::sqrt(2.0) * stats.cv[i] * s));
    }
  }
  return f0;
}

std::vector<double> energy_from_mel(const Tensor& mel,
                                    const std::vector<int>& durations) {
  check(mel.ndim() == 2, "energy_from_mel: mel must be T x n_mels");
  int total = 0;
  for (int d : durations) total += d;
  check(total == mel.rows(), "energy_from_mel: durations do not cover mel");
  std::vector<double> out;
  out.reserve(durations.size());
  int t = 0;
  for (int d : durations) {
    double s = 0.0;
    for (int k = 0; k < d; ++k, ++t) {
      double norm2 = 0.0;
      for (int m = 0; m < mel.cols(); ++m) norm2 += mel.at(t, m) * mel.at(t, m);
      s += std::sqrt(norm2);
    }
    out.push_back(s / d);
  }
  return out;
}

ConvPredictor ConvPredictor::create(ParamStore& ps, const std::string& prefix,
                                    int dim, int layers, int kernel,
                                    int filters, int out_dim, double dropout,
                                    Rng& rng) {
  ConvPredictor p;
  int in = dim;
  for (int i = 0; i < layers; ++i) {
    p.convs.push_back(Conv1d::create(ps, prefix + ".conv" + std::to_string(i),
                                     in, filters, kernel, 1, rng));
    in = filters;
  }
  p.head = Linear::create(ps, prefix + ".head", in, out_dim, rng);
  p.dropout_p = dropout;
  return p;
}

Var ConvPredictor::forward(const Var& x, Rng* rng, bool training) const {
  Var h = x;
  for (const auto& c : convs) {
    h = relu(c.forward(h));
    if (training && rng) h = dropout(h, dropout_p, *rng, true);
  }
  return head.forward(h);
}

PitchPredictor PitchPredictor::create(ParamStore& ps,
                                      const std::string& prefix,
                                      const ModelConfig& cfg, Rng& rng) {
  PitchPredictor p;
  p.statistical = cfg.statistical_pitch;
  p.mean_head =
      ConvPredictor::create(ps, prefix + ".mean", cfg.d_model, cfg.pred_layers,
                            cfg.pred_kernel, cfg.pred_filters, 1,
                            cfg.dropout_va, rng);
  if (p.statistical)
    p.cv_head =
        ConvPredictor::create(ps, prefix + ".cv", cfg.d_model, cfg.pred_layers,
                              cfg.pred_kernel, cfg.pred_filters, 1,
                              cfg.dropout_va, rng);
  return p;
}

std::pair<Var, Var> PitchPredictor::forward(const Var& e2,
                                            const std::vector<double>& note_hz,
                                            Rng* rng, bool training) const {
  check(static_cast<int>(note_hz.size()) == e2.rows(),
        "pitch predictor: note length mismatch");
  Tensor note({e2.rows(), 1});
  for (int i = 0; i < e2.rows(); ++i) note.at(i, 0) = note_hz[i];
  Var residual = mean_head.forward(e2, rng, training);
  Var mean = add(residual, constant(std::move(note)));
  Var cv = statistical
               ? softplus(cv_head.forward(e2, rng, training))
               : constant(Tensor({e2.rows(), 1}));
  return {mean, cv};
}

Var pitch_loss_var(const Var& mean_hz, const Var& cv, const PitchStats& target,
                   double lambda_pm, double lambda_pcv) {
  const int n = target.length();
  check(mean_hz.rows() == n && cv.rows() == n, "pitch loss: length mismatch");
  Tensor mask({n, 1});
  Tensor tgt_m({n, 1}), tgt_cv({n, 1});
  int voiced = 0;
  for (int i = 0; i < n; ++i) {
    mask.at(i, 0) = target.voiced[i] ? 1.0 : 0.0;
    tgt_m.at(i, 0) = target.mean_hz[i];
    tgt_cv.at(i, 0) = target.cv[i];
    voiced += target.voiced[i] ? 1 : 0;
  }
  check(voiced > 0, "pitch loss: no voiced phonemes");
  Var m = constant(std::move(mask));
  Var lm = sum_all(mul(m, abs_op(sub(mean_hz, constant(std::move(tgt_m))))));
  Var lcv = sum_all(mul(m, abs_op(sub(cv, constant(std::move(tgt_cv))))));
  return add(scale(lm, lambda_pm / voiced), scale(lcv, lambda_pcv / voiced));
}

Crdp Crdp::create(ParamStore& ps, const std::string& prefix,
                  const ModelConfig& cfg, Rng& rng) {
  Crdp c;
  c.cell = GruCell::create(ps, prefix + ".gru", cfg.d_model + 1,
                           cfg.crdp_hidden, rng);
  c.head = Linear::create(ps, prefix + ".head", cfg.crdp_hidden, 1, rng,
                          /*gain=*/1.0, /*zero_init=*/true);
  c.frame_rate = cfg.frame_rate;
  return c;
}

Var Crdp::initial_state() const {
  return constant(Tensor({1, cell.hidden}));
}

Crdp::StepResult Crdp::step(const Var& state, const Var& e2_row,
                            const Var& sync_prev, double note_frames) const {
  check(sync_prev.value().numel() == 1, "crdp: sync error must be scalar");
  check_numeric(std::isfinite(sync_prev.item()), "crdp: non-finite sync error");
  // SyncErr is fed in seconds to keep the input O(1).
  Var x = concat_cols({e2_row, scale(sync_prev, 1.0 / frame_rate)});
  Var h = cell.forward(x, state);
  Var s_hat = head.forward(h);
  return {add_const(s_hat, note_frames), h};
}

DurationRollout crdp_rollout(const Crdp& crdp, const Var& e2,
                             const std::vector<int>& note) {
  check(static_cast<int>(note.size()) == e2.rows(),
        "crdp_rollout: note length mismatch");
  Var state = crdp.initial_state();
  Var sync = constant(0.0);
  std::vector<Var> d_rows, sync_rows;
  for (int i = 0; i < e2.rows(); ++i) {
    auto [d_hat, next] = crdp.step(state, slice_rows(e2, i, 1), sync, note[i]);
    state = next;
    sync = add(sync, add_const(d_hat, -static_cast<double>(note[i])));
    d_rows.push_back(d_hat);
    sync_rows.push_back(sync);
  }
  DurationRollout r;
  r.predicted = concat_rows(d_rows);
  r.sync_err = concat_rows(sync_rows);
  r.note = note;
  return r;
}

DurationPlan DurationRollout::plan() const {
  std::vector<double> pred(predicted.value().data);
  return DurationPlan::from_predictions(std::move(pred), note);
}

Var duration_loss_var(const DurationRollout& rollout,
                      const std::vector<int>& target, double lambda_sync) {
  const int n = rollout.predicted.rows();
  check(static_cast<int>(target.size()) == n,
        "duration loss: length mismatch");
  Tensor tgt({n, 1});
  for (int i = 0; i < n; ++i) tgt.at(i, 0) = target[i];
  Var sq = sum_all(square(sub(rollout.predicted, constant(std::move(tgt)))));
  Var sync_total = abs_op(sum_all(rollout.sync_err));
  return scale(add(sq, scale(sync_total, lambda_sync)), 1.0 / n);
}

NoteNormBaseline NoteNormBaseline::create(ParamStore& ps,
                                          const std::string& prefix,
                                          const ModelConfig& cfg, Rng& rng) {
  NoteNormBaseline b;
  b.pred = ConvPredictor::create(ps, prefix, cfg.d_model, cfg.pred_layers,
                                 cfg.pred_kernel, cfg.pred_filters, 1,
                                 cfg.dropout_va, rng);
  return b;
}

DurationRollout NoteNormBaseline::rollout(const Var& e2,
                                          const std::vector<int>& note,
                                          Rng* rng, bool training) const {
  Tensor note_t({e2.rows(), 1});
  for (int i = 0; i < e2.rows(); ++i) {
    check(note[i] >= 1, "note normalization: note duration must be >= 1");
    note_t.at(i, 0) = note[i];
  }
  Var ratio = softplus(pred.forward(e2, rng, training));
  DurationRollout r;
  r.predicted = mul(ratio, constant(std::move(note_t)));
  r.note = note;
  // SyncErr bookkeeping only; the baseline does not consume it.
  Tensor sync({e2.rows(), 1});
  double acc = 0.0;
  for (int i = 0; i < e2.rows(); ++i) {
    acc += r.predicted.value().at(i, 0) - note[i];
    sync.at(i, 0) = acc;
  }
  r.sync_err = constant(std::move(sync));
  return r;
}

Var NoteNormBaseline::loss(const DurationRollout& r,
                           const std::vector<int>& target) const {
  const int n = r.predicted.rows();
  check(static_cast<int>(target.size()) == n,
        "note normalization loss: length mismatch");
  // Squared error on ratios: recover ratio = d_hat / d_bar.
  Tensor inv_note({n, 1}), tgt_ratio({n, 1});
  for (int i = 0; i < n; ++i) {
    inv_note.at(i, 0) = 1.0 / r.note[i];
    tgt_ratio.at(i, 0) = static_cast<double>(target[i]) / r.note[i];
  }
  Var ratio = mul(r.predicted, constant(std::move(inv_note)));
  return mean_all(square(sub(ratio, constant(std::move(tgt_ratio)))));
}

SyllableBaseline SyllableBaseline::create(ParamStore& ps,
                                          const std::string& prefix,
                                          const ModelConfig& cfg, Rng& rng) {
  SyllableBaseline b;
  b.pred = ConvPredictor::create(ps, prefix, cfg.d_model, cfg.pred_layers,
                                 cfg.pred_kernel, cfg.pred_filters, 1,
                                 cfg.dropout_va, rng);
  return b;
}

DurationRollout SyllableBaseline::rollout(const Var& e2,
                                          const std::vector<int>& note,
                                          Rng* rng, bool training) const {
  DurationRollout r;
  r.predicted = pred.forward(e2, rng, training);
  r.note = note;
  Tensor sync({e2.rows(), 1});
  double acc = 0.0;
  for (int i = 0; i < e2.rows(); ++i) {
    acc += r.predicted.value().at(i, 0) - note[i];
    sync.at(i, 0) = acc;
  }
  r.sync_err = constant(std::move(sync));
  return r;
}

Var SyllableBaseline::loss(
    const DurationRollout& r, const std::vector<int>& target,
    const std::vector<std::pair<int, int>>& syllables) const {
  const int n = r.predicted.rows();
  check(static_cast<int>(target.size()) == n,
        "syllable loss: length mismatch");
  check(!syllables.empty(), "syllable loss: missing syllable bounds");
  Tensor tgt({n, 1});
  for (int i = 0; i < n; ++i) tgt.at(i, 0) = target[i];
  Var phoneme_mse = mean_all(square(sub(r.predicted, constant(std::move(tgt)))));

  std::vector<Var> syl_pred;
  Tensor syl_tgt({static_cast<int>(syllables.size()), 1});
  int k = 0;
  for (const auto& [s, e] : syllables) {
    check(s >= 0 && e > s && e <= n, "syllable loss: bad bounds");
    syl_pred.push_back(sum_all(slice_rows(r.predicted, s, e - s)));
    double acc = 0.0;
    for (int i = s; i < e; ++i) acc += target[i];
    syl_tgt.at(k++, 0) = acc;
  }
  Var syl_mse =
      mean_all(square(sub(concat_rows(syl_pred), constant(std::move(syl_tgt)))));
  return add(phoneme_mse, syl_mse);
}

VarianceAdaptor VarianceAdaptor::create(ParamStore& ps, const ModelConfig& cfg,
                                        Rng& rng) {
  VarianceAdaptor va;
  auto res_enc = [&](const char* name) {
    return ResidualAttributeEncoder::create(ps, std::string("va.enc_") + name,
                                            cfg.d_model, cfg.enc_kernel,
                                            cfg.pred_filters, cfg.dropout_va,
                                            rng);
  };
  va.enc_singer = res_enc("singer");
  va.enc_emotion = res_enc("emotion");
  va.enc_pitch = res_enc("pitch");
  va.enc_energy = res_enc("energy");
  va.singer_table =
      AttributeTable::singer_table(ps, cfg.n_singers, cfg.d_model, rng);
  va.emotion_table =
      AttributeTable::emotion_table(ps, cfg.emotion_mode, cfg.d_model, rng);
  va.pitch_pred = PitchPredictor::create(ps, "va.pitch_pred", cfg, rng);
  va.energy_pred =
      ConvPredictor::create(ps, "va.energy_pred", cfg.d_model, cfg.pred_layers,
                            cfg.pred_kernel, cfg.pred_filters, 1,
                            cfg.dropout_va, rng);
  va.pitch_cond = Linear::create(ps, "va.pitch_cond", 2, cfg.d_model, rng);
  va.energy_cond = Linear::create(ps, "va.energy_cond", 1, cfg.d_model, rng);
  va.crdp = Crdp::create(ps, "va.crdp", cfg, rng);
  va.baseline_note_norm =
      NoteNormBaseline::create(ps, "va.baseline_note_norm", cfg, rng);
  va.baseline_syllable =
      SyllableBaseline::create(ps, "va.baseline_syllable", cfg, rng);
  return va;
}

namespace {

// Packs per-phoneme (mean_hz, cv) into conditioning features. Means are
// scaled to O(1) so the conditioning affine map sees balanced inputs.
Var pitch_cond_features(const std::vector<double>& mean_hz,
                        const std::vector<double>& cv) {
  const int n = static_cast<int>(mean_hz.size());
  Tensor f({n, 2});
  for (int i = 0; i < n; ++i) {
    f.at(i, 0) = mean_hz[i] / 400.0;
    f.at(i, 1) = cv[i];
  }
  return constant(std::move(f));
}

}  // namespace

AdaptorOutput VarianceAdaptor::forward(
    const JointEmbeddingSeq& e0, const AttributeContext& ctx,
    const std::vector<double>& note_hz, const std::vector<bool>& voiced,
    const std::vector<int>& note_durations, const TeacherSignals* teacher,
    Rng* rng, bool training) const {
  check(e0.stage == 0, "variance adaptor: expects a stage-0 embedding");
  const int n = e0.values.rows();
  check(static_cast<int>(note_hz.size()) == n &&
            static_cast<int>(voiced.size()) == n &&
            static_cast<int>(note_durations.size()) == n,
        "variance adaptor: per-phoneme input length mismatch");
  if (teacher) {
    check(static_cast<int>(teacher->pitch_mean_hz.size()) == n &&
              static_cast<int>(teacher->pitch_cv.size()) == n &&
              static_cast<int>(teacher->energy.size()) == n &&
              static_cast<int>(teacher->durations.size()) == n,
          "variance adaptor: teacher sequence length mismatch");
  }

  AdaptorOutput out;
  out.stage_trace.push_back(e0.stage);

  // z1: singer.
  const Var& singer_emb = singer_table.entries.at(ctx.singer_id);
  out.singer_residual =
      enc_singer.forward(e0.values, singer_emb, rng, training);
  JointEmbeddingSeq e1 = accumulate_residual(e0, out.singer_residual);
  out.stage_trace.push_back(e1.stage);

  // z2: emotion (interpolated or level-wise base embedding).
  Var emotion_emb = emotion_base_embedding(ctx, emotion_table);
  out.emotion_residual =
      enc_emotion.forward(e1.values, emotion_emb, rng, training);
  JointEmbeddingSeq e2 = accumulate_residual(e1, out.emotion_residual);
  out.stage_trace.push_back(e2.stage);
  out.e2 = e2.values;

  // Duration from E(y_i, z1, z2).
  out.durations = crdp_rollout(crdp, e2.values, note_durations);

  // z3: pitch. The encoder consumes the predictor output (teacher values
  // during training).
  auto [mean_hz, cv] = pitch_pred.forward(e2.values, note_hz, rng, training);
  out.pitch_mean = mean_hz;
  out.pitch_cv = cv;
  Var pitch_feat = (training && teacher)
                       ? pitch_cond_features(teacher->pitch_mean_hz,
                                             teacher->pitch_cv)
                       : pitch_cond_features(mean_hz.value().data,
                                             cv.value().data);
  Var pitch_c = pitch_cond.forward(pitch_feat);
  Var r3 = enc_pitch.forward(e2.values, pitch_c, rng, training);
  JointEmbeddingSeq e3 = accumulate_residual(e2, r3);
  out.stage_trace.push_back(e3.stage);

  // z4: energy.
  Var energy = softplus(energy_pred.forward(e3.values, rng, training));
  out.energy = energy;
  Var energy_feat;
  if (training && teacher) {
    Tensor t({n, 1});
    for (int i = 0; i < n; ++i) t.at(i, 0) = teacher->energy[i];
    energy_feat = constant(std::move(t));
  } else {
    energy_feat = constant(energy.value());
  }
  Var energy_c = energy_cond.forward(energy_feat);
  Var r4 = enc_energy.forward(e3.values, energy_c, rng, training);
  out.joint = accumulate_residual(e3, r4);
  out.stage_trace.push_back(out.joint.stage);
  return out;
}

PitchStats AdaptorOutput::pitch_stats(const std::vector<double>& note_hz,
                                      const std::vector<bool>& voiced) const {
  PitchStats s;
  s.note_hz = note_hz;
  s.voiced = voiced;
  s.mean_hz = pitch_mean.value().data;
  s.cv = pitch_cv.value().data;
  return s;
}

}  // namespace musesvs
