// src/trainer.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/trainer.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "musesvs/arrayio.hpp"

namespace musesvs {

namespace fs = std::filesystem;
using nlohmann::json;

std::string TrainConfig::to_json() const {
  json j;
  j["preset"] = preset;
  j["corpus"] = json::parse(corpus.to_json());
  j["corpus_dir"] = corpus_dir;
  json w;
  w["lambda_m"] = weights.lambda_m;
  w["lambda_p"] = weights.lambda_p;
  w["lambda_e"] = weights.lambda_e;
  w["lambda_d"] = weights.lambda_d;
  w["lambda_adv_start"] = weights.lambda_adv_start;
  w["lambda_adv_end"] = weights.lambda_adv_end;
  w["lambda_pm"] = weights.lambda_pm;
  w["lambda_pcv"] = weights.lambda_pcv;
  w["lambda_sync"] = weights.lambda_sync;
  w["lambda_distill"] = weights.lambda_distill;
  w["adv_warmup_steps"] = weights.adv_warmup_steps;
  w["adv_ramp_steps"] = weights.adv_ramp_steps;
  j["weights"] = w;
  j["max_steps"] = max_steps;
  j["batch_size"] = batch_size;
  j["lr_warmup"] = lr_warmup;
  j["peak_lr"] = peak_lr;
  j["clip_norm"] = clip_norm;
  j["soft_dtw_gamma"] = soft_dtw_gamma;
  j["disc_crop_frames"] = disc_crop_frames;
  j["seed"] = std::to_string(seed);
  j["log_every"] = log_every;
  j["freeze_style_teacher"] = freeze_style_teacher;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  TrainConfig c;
  auto get = [&](const json& src, const char* key, auto& field) {
    if (src.contains(key))
      field = src.at(key).get<std::decay_t<decltype(field)>>();
  };
  get(j, "preset", c.preset);
  if (j.contains("corpus"))
    c.corpus = SyntheticCorpusConfig::from_json(j.at("corpus").dump());
  get(j, "corpus_dir", c.corpus_dir);
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    get(w, "lambda_m", c.weights.lambda_m);
    get(w, "lambda_p", c.weights.lambda_p);
    get(w, "lambda_e", c.weights.lambda_e);
    get(w, "lambda_d", c.weights.lambda_d);
    get(w, "lambda_adv_start", c.weights.lambda_adv_start);
    get(w, "lambda_adv_end", c.weights.lambda_adv_end);
    get(w, "lambda_pm", c.weights.lambda_pm);
    get(w, "lambda_pcv", c.weights.lambda_pcv);
    get(w, "lambda_sync", c.weights.lambda_sync);
    get(w, "lambda_distill", c.weights.lambda_distill);
    get(w, "adv_warmup_steps", c.weights.adv_warmup_steps);
    get(w, "adv_ramp_steps", c.weights.adv_ramp_steps);
  }
  get(j, "max_steps", c.max_steps);
  get(j, "batch_size", c.batch_size);
  get(j, "lr_warmup", c.lr_warmup);
  get(j, "peak_lr", c.peak_lr);
  get(j, "clip_norm", c.clip_norm);
  get(j, "soft_dtw_gamma", c.soft_dtw_gamma);
  get(j, "disc_crop_frames", c.disc_crop_frames);
  if (j.contains("seed")) c.seed = std::stoull(j.at("seed").get<std::string>());
  get(j, "log_every", c.log_every);
  get(j, "freeze_style_teacher", c.freeze_style_teacher);
  return c;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json()); }

int env_num_threads() {
  const char* env = std::getenv("MUSESVS_NUM_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

namespace {

Corpus make_corpus(const TrainConfig& cfg) {
  if (!cfg.corpus_dir.empty()) return load_corpus(cfg.corpus_dir);
  return generate_synthetic_corpus(cfg.corpus);
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg) : Trainer(cfg, make_corpus(cfg)) {}

Trainer::Trainer(const TrainConfig& cfg, Corpus corpus)
    : cfg_(cfg),
      model_(ModelConfig::preset(cfg.preset), Rng::derive(cfg.seed, 42).next_u64()),
      corpus_(std::move(corpus)),
      rng_(Rng::derive(cfg.seed, 7).next_u64()) {
  check(!corpus_.samples.empty(), "trainer: empty corpus");
  opt_g_ = Adam::over(model_.params(), [](const std::string& n) {
    return !MuseSvs::is_discriminator_param(n);
  });
  opt_d_ = Adam::over(model_.params(), [](const std::string& n) {
    return MuseSvs::is_discriminator_param(n);
  });
  style_mean_.mean = Tensor({1, model_.config().d_model});
  threads_ = env_num_threads();

  // Warm-start the direct duration head at the corpus mean duration; a
  // regression head that must climb from zero to several frames would
  // spend most of a short run on its bias.
  double mean_dur = 0.0;
  std::int64_t count = 0;
  for (const auto& s : corpus_.samples) {
    for (int d : s.gt_durations) mean_dur += d;
    count += s.gt_durations.size();
  }
  if (count > 0) {
    Var* bias = model_.params().find("va.baseline_syllable.head.b");
    check(bias != nullptr, "trainer: missing syllable baseline head");
    bias->node()->value.at(0, 0) = mean_dur / count;
  }
}

struct Trainer::SampleResult {
  GradStore g_grads;
  GradStore d_grads;
  LossParts parts;
  double total = 0.0;
  double disc = 0.0;
  double distill = 0.0;
  double baseline_nn = 0.0;
  double baseline_syl = 0.0;
  Tensor style_vec;
};

Trainer::SampleResult Trainer::compute_sample(int sample_index, int slot,
                                              double lambda_adv) {
  const CorpusSample& s = corpus_.samples[sample_index];
  Rng drop = Rng::derive(cfg_.seed ^ 0xD50u, step_, slot);

  TeacherSignals teacher;
  teacher.pitch_mean_hz = s.gt_pitch.mean_hz;
  teacher.pitch_cv = s.gt_pitch.cv;
  teacher.energy = s.gt_energy;
  teacher.durations = s.gt_durations;

  // Corpus contexts carry trained intensity levels, so they are valid in
  // either embedding mode; follow the model's configuration.
  AttributeContext ctx = s.ctx;
  ctx.embedding_mode = model_.config().emotion_mode;

  SampleResult r;
  auto fwd = model_.forward(s.score, ctx, &teacher, &drop, true);

  Var gt_mel = constant(s.gt_mel);
  Var l_mel = soft_dtw(fwd.mel, gt_mel, cfg_.soft_dtw_gamma);
  Var l_pitch = pitch_loss_var(fwd.adaptor.pitch_mean, fwd.adaptor.pitch_cv,
                               s.gt_pitch, cfg_.weights.lambda_pm,
                               cfg_.weights.lambda_pcv);
  Tensor e_tgt({s.score.length(), 1});
  for (int i = 0; i < s.score.length(); ++i) e_tgt.at(i, 0) = s.gt_energy[i];
  Var l_energy =
      mean_all(square(sub(fwd.adaptor.energy, constant(std::move(e_tgt)))));
  Var l_dur = duration_loss_var(fwd.adaptor.durations, s.gt_durations,
                                cfg_.weights.lambda_sync);

  // Style distillation; the reference encoder sees the ground-truth mel.
  Var style = model_.style_encoder().forward(s.gt_mel);
  Var l_distill = distill_step(style, ctx, model_.adaptor().singer_table,
                               model_.adaptor().emotion_table,
                               style_mean_.mean, cfg_.freeze_style_teacher);
  r.style_vec = style.value();

  // Baseline duration predictors are probes: they train on detached trunk
  // features and do not steer the shared model.
  Var e2_detached = detach(fwd.adaptor.e2);
  auto bnn = model_.adaptor().baseline_note_norm.rollout(
      e2_detached, s.score.note_durations, &drop, true);
  Var l_bnn =
      model_.adaptor().baseline_note_norm.loss(bnn, s.gt_durations);
  auto bsyl = model_.adaptor().baseline_syllable.rollout(
      e2_detached, s.score.note_durations, &drop, true);
  Var l_bsyl = model_.adaptor().baseline_syllable.loss(
      bsyl, s.gt_durations, s.score.syllable_bounds.value());

  // The adversarial losses run on a centered crop; real and fake mels have
  // equal lengths under teacher forcing.
  const int t_frames = fwd.mel.rows();
  int crop0 = 0, crop_n = t_frames;
  if (cfg_.disc_crop_frames > 0 && t_frames > cfg_.disc_crop_frames) {
    crop_n = cfg_.disc_crop_frames;
    crop0 = (t_frames - crop_n) / 2;
  }
  Var fake_crop = slice_rows(fwd.mel, crop0, crop_n);
  Var real_crop = slice_rows(gt_mel, crop0, crop_n);

  Var adv_g = lsgan_generator_loss(
      model_.discriminator().forward(fake_crop, /*frozen=*/true));

  Var total = scale(l_mel, cfg_.weights.lambda_m);
  total = add(total, scale(l_pitch, cfg_.weights.lambda_p));
  total = add(total, scale(l_energy, cfg_.weights.lambda_e));
  total = add(total, scale(l_dur, cfg_.weights.lambda_d));
  total = add(total, scale(adv_g, lambda_adv));
  total = add(total, scale(l_distill, cfg_.weights.lambda_distill));
  total = add(total, add(l_bnn, l_bsyl));
  backward(total, r.g_grads);

  Var d_real = model_.discriminator().forward(real_crop);
  Var d_fake = model_.discriminator().forward(detach(fake_crop));
  Var d_loss = lsgan_discriminator_loss(d_real, d_fake);
  backward(d_loss, r.d_grads);

  r.parts.mel = l_mel.item();
  r.parts.pitch = l_pitch.item();
  r.parts.energy = l_energy.item();
  r.parts.duration = l_dur.item();
  r.parts.adversarial = adv_g.item();
  r.total = total.item();
  r.disc = d_loss.item();
  r.distill = l_distill.item();
  r.baseline_nn = l_bnn.item();
  r.baseline_syl = l_bsyl.item();
  return r;
}

StepLosses Trainer::step_once() {
  const double lambda_adv = lambda_adv_schedule(
      step_, cfg_.weights.adv_warmup_steps, cfg_.weights.adv_ramp_steps,
      cfg_.weights.lambda_adv_start, cfg_.weights.lambda_adv_end);

  std::vector<int> batch(cfg_.batch_size);
  for (int& b : batch)
    b = rng_.uniform_int(0, static_cast<int>(corpus_.samples.size()) - 1);

  std::vector<SampleResult> results(batch.size());
  const int workers =
      std::min<int>(threads_, static_cast<int>(batch.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < batch.size(); ++i)
      results[i] = compute_sample(batch[i], static_cast<int>(i), lambda_adv);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < batch.size();
             i = next.fetch_add(1))
          results[i] =
              compute_sample(batch[i], static_cast<int>(i), lambda_adv);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Merge per-sample parameter gradients in slot order (deterministic for
  // any worker count).
  GradStore g_sum, d_sum;
  const double inv_batch = 1.0 / batch.size();
  auto merge = [&](const std::vector<std::pair<std::string, Var>>& params,
                   GradStore& dst, auto member) {
    for (auto& r : results) {
      GradStore& src = r.*member;
      for (const auto& [name, var] : params) {
        const Tensor* g = src.find(var.node().get());
        if (!g) continue;
        Tensor& acc = dst.acc(var.node().get(), g->shape);
        for (std::int64_t i = 0; i < g->numel(); ++i)
          acc.data[i] += g->data[i] * inv_batch;
      }
    }
  };
  merge(opt_g_.params(), g_sum, &SampleResult::g_grads);
  merge(opt_d_.params(), d_sum, &SampleResult::d_grads);

  StepLosses out;
  out.step = step_;
  for (const auto& r : results) {
    out.parts.mel += r.parts.mel * inv_batch;
    out.parts.pitch += r.parts.pitch * inv_batch;
    out.parts.energy += r.parts.energy * inv_batch;
    out.parts.duration += r.parts.duration * inv_batch;
    out.parts.adversarial += r.parts.adversarial * inv_batch;
    out.total += r.total * inv_batch;
    out.disc += r.disc * inv_batch;
    out.distill += r.distill * inv_batch;
    out.baseline_note_norm += r.baseline_nn * inv_batch;
    out.baseline_syllable += r.baseline_syl * inv_batch;
  }
  // Aborts on non-finite parts before any parameter update.
  total_loss(out.parts, cfg_.weights, step_);
  check_numeric(std::isfinite(out.disc) && std::isfinite(out.distill) &&
                    std::isfinite(out.baseline_note_norm) &&
                    std::isfinite(out.baseline_syllable),
                "trainer: non-finite auxiliary loss");

  out.lr = lr_schedule(step_ + 1, cfg_.lr_warmup, cfg_.peak_lr);
  opt_g_.step(g_sum, out.lr, cfg_.clip_norm);
  opt_d_.step(d_sum, out.lr, cfg_.clip_norm);

  for (const auto& r : results) style_mean_.update(r.style_vec);
  ++step_;
  return out;
}

void Trainer::save(const std::string& path) {
  CheckpointMeta meta;
  meta.step = step_;
  meta.seed = cfg_.seed;
  meta.config_hash = cfg_.hash();
  meta.rng_state = rng_.state();
  meta.preset = cfg_.preset;
  json extra;
  round_tensor_to_f32(style_mean_.mean);
  extra["style_mean"] = style_mean_.mean.data;
  extra["style_mean_init"] = style_mean_.initialized;
  meta.extra_json = extra.dump();
  save_checkpoint(path, model_.params(), &opt_g_, &opt_d_, meta);
}

void Trainer::load(const std::string& path) {
  CheckpointMeta meta =
      load_checkpoint(path, model_.params(), &opt_g_, &opt_d_);
  check(meta.config_hash == cfg_.hash(),
        "trainer: checkpoint was written with a different config");
  step_ = meta.step;
  rng_.set_state(meta.rng_state);
  if (!meta.extra_json.empty()) {
    json extra = json::parse(meta.extra_json);
    if (extra.contains("style_mean")) {
      const auto data = extra.at("style_mean").get<std::vector<double>>();
      check(static_cast<std::int64_t>(data.size()) ==
                style_mean_.mean.numel(),
            "trainer: style mean size mismatch");
      style_mean_.mean.data = data;
      style_mean_.initialized = extra.at("style_mean_init").get<bool>();
    }
  }
}

TrainResult Trainer::run(const std::string& out_dir) {
  fs::create_directories(out_dir);
  const std::string csv_path = out_dir + "/loss_curve.csv";
  const std::string ckpt_path = out_dir + "/checkpoint.msvs";
  std::ofstream csv(csv_path);
  check(csv.good(), "trainer: cannot write " + csv_path);
  csv << "step,total,mel,pitch,energy,duration,adversarial,disc,distill,"
         "baseline_note_norm,baseline_syllable,lr\n";

  TrainResult result;
  result.loss_csv_path = csv_path;
  bool first = true;
  const int ckpt_every = std::max(50, cfg_.max_steps / 4);
  save(ckpt_path);  // last-good state exists from step 0 onward
  while (step_ < cfg_.max_steps) {
    StepLosses l;
    try {
      l = step_once();
    } catch (const std::runtime_error& e) {
      // Non-finite loss: keep the last good checkpoint and stop.
      result.aborted_non_finite = true;
      result.steps_done = step_;
      if (fs::exists(ckpt_path)) result.checkpoint_path = ckpt_path;
      csv.close();
      return result;
    }
    if (first) {
      result.first_mel_loss = l.parts.mel;
      first = false;
    }
    result.last_mel_loss = l.parts.mel;
    csv << l.step << ',' << l.total << ',' << l.parts.mel << ','
        << l.parts.pitch << ',' << l.parts.energy << ',' << l.parts.duration
        << ',' << l.parts.adversarial << ',' << l.disc << ',' << l.distill
        << ',' << l.baseline_note_norm << ',' << l.baseline_syllable << ','
        << l.lr << '\n';
    if (cfg_.log_every > 0 && l.step % cfg_.log_every == 0) csv.flush();
    if (step_ % ckpt_every == 0 && step_ < cfg_.max_steps) save(ckpt_path);
  }
  save(ckpt_path);
  result.steps_done = step_;
  result.checkpoint_path = ckpt_path;
  return result;
}

}  // namespace musesvs
