// tools/musesvs.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "musesvs/arrayio.hpp"
#include "musesvs/evaluation.hpp"
#include "musesvs/plots.hpp"
#include "musesvs/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace musesvs;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_path, std::uint64_t seed,
                    std::uint64_t config_hash) {
  json m;
  m["command"] = command;
  m["config"] = config_path;
  m["seed"] = std::to_string(seed);
  m["out"] = out_dir;
  m["config_hash"] = std::to_string(config_hash);
  write_text_file(out_dir + "/manifest.json", m.dump(2));
}

// Rebuilds the model a checkpoint was trained with.
std::unique_ptr<MuseSvs> model_from_checkpoint(const std::string& path,
                                               CheckpointMeta* meta_out) {
  CheckpointMeta meta = peek_checkpoint(path);
  auto model = std::make_unique<MuseSvs>(ModelConfig::preset(meta.preset), 0);
  load_checkpoint(path, model->params());
  if (meta_out) *meta_out = meta;
  return model;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 std::uint64_t seed_override, bool has_seed) {
  SyntheticCorpusConfig cfg;
  if (!config_path.empty())
    cfg = SyntheticCorpusConfig::from_json(read_text_file(config_path));
  if (has_seed) cfg.seed = seed_override;
  cfg.validate();
  Corpus corpus = generate_synthetic_corpus(cfg);
  fs::create_directories(out_dir);
  save_corpus(corpus, out_dir);
  write_manifest(out_dir, "gen-data", config_path, cfg.seed,
                 fnv1a64(cfg.to_json()));
  std::cout << "wrote " << corpus.samples.size() << " samples to " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& preset, std::uint64_t seed_override,
              bool has_seed, int steps_override) {
  TrainConfig cfg;
  if (!config_path.empty())
    cfg = TrainConfig::from_json(read_text_file(config_path));
  if (!preset.empty()) cfg.preset = preset;
  if (has_seed) cfg.seed = seed_override;
  if (steps_override > 0) cfg.max_steps = steps_override;

  Trainer trainer(cfg);
  fs::create_directories(out_dir);
  write_manifest(out_dir, "train", config_path, cfg.seed, cfg.hash());
  write_text_file(out_dir + "/train_config.json", cfg.to_json());
  TrainResult result = trainer.run(out_dir);
  if (result.aborted_non_finite) {
    std::cerr << "training aborted: non-finite loss at step "
              << result.steps_done << "\n";
    return kExitNumeric;
  }
  std::cout << "trained " << result.steps_done << " steps; mel loss "
            << result.first_mel_loss << " -> " << result.last_mel_loss
            << "\ncheckpoint: " << result.checkpoint_path << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& ckpt, const std::string& score_path,
              int singer, const std::string& emotion, double intensity,
              const std::string& mode, const std::string& out_dir,
              std::uint64_t seed) {
  AttributeContext ctx;
  ctx.singer_id = singer;
  ctx.emotion_type = emotion_from_name(emotion);
  ctx.intensity = intensity;
  ctx.embedding_mode = mode == "level_wise" ? EmbeddingMode::kLevelWise
                                            : EmbeddingMode::kInterpolated;

  CheckpointMeta meta;
  auto model = model_from_checkpoint(ckpt, &meta);
  ctx.validate(model->config().n_singers);

  PhonemeVocab vocab = PhonemeVocab::default_vocab();
  Score score = parse_score(read_text_file(score_path), vocab);
  auto result = model->synthesize(score, ctx, seed);

  fs::create_directories(out_dir);
  save_array(out_dir + "/mel.msvs", result.mel.frames);
  Tensor f0({static_cast<int>(result.f0.size()), 1});
  for (size_t i = 0; i < result.f0.size(); ++i)
    f0.at(static_cast<int>(i), 0) = result.f0[i];
  save_array(out_dir + "/f0.msvs", f0);

  json plan;
  plan["predicted"] = result.plan.predicted;
  plan["note"] = result.plan.note;
  plan["sync_err"] = result.plan.sync_err;
  plan["rounded"] = result.durations;
  plan["pitch_mean_hz"] = result.pitch.mean_hz;
  plan["pitch_cv"] = result.pitch.cv;
  plan["voiced"] =
      std::vector<int>(result.pitch.voiced.begin(), result.pitch.voiced.end());
  plan["energy"] = result.energy;
  write_text_file(out_dir + "/duration_plan.json", plan.dump(2));
  write_manifest(out_dir, "synth", score_path, seed, fnv1a64(ckpt));
  std::cout << "synthesized " << result.mel.n_frames() << " frames to "
            << out_dir << "\n";
  return kExitOk;
}

struct EvalAccumulator {
  std::vector<PhonemePitchObservation> pitch_obs;
  std::vector<DurationPair> sync_crdp, sync_nn, sync_syl;
  std::vector<DurationTruthPair> rmse_crdp, rmse_nn, rmse_syl;
};

void eval_sample(const MuseSvs& model, const CorpusSample& s,
                 EvalAccumulator& acc) {
  NoGradScope ng;
  auto fwd = model.forward(s.score, s.ctx);

  PhonemePitchObservation obs;
  obs.voiced = s.gt_pitch.voiced;
  obs.gt_mean = s.gt_pitch.mean_hz;
  for (int i = 0; i < s.score.length(); ++i) {
    obs.gt_sigma.push_back(s.gt_pitch.cv[i] * s.gt_pitch.mean_hz[i]);
    const double mean = fwd.adaptor.pitch_mean.value().at(i, 0);
    obs.syn_mean.push_back(mean);
    obs.syn_sigma.push_back(fwd.adaptor.pitch_cv.value().at(i, 0) * mean);
  }
  acc.pitch_obs.push_back(std::move(obs));

  const auto crdp_plan = fwd.adaptor.durations.plan();
  auto nn = model.adaptor().baseline_note_norm.rollout(
      fwd.adaptor.e2, s.score.note_durations);
  auto syl = model.adaptor().baseline_syllable.rollout(
      fwd.adaptor.e2, s.score.note_durations);
  const auto nn_plan = nn.plan();
  const auto syl_plan = syl.plan();

  acc.sync_crdp.push_back({crdp_plan.predicted, crdp_plan.note});
  acc.sync_nn.push_back({nn_plan.predicted, nn_plan.note});
  acc.sync_syl.push_back({syl_plan.predicted, syl_plan.note});
  acc.rmse_crdp.push_back({crdp_plan.predicted, s.gt_durations});
  acc.rmse_nn.push_back({nn_plan.predicted, s.gt_durations});
  acc.rmse_syl.push_back({syl_plan.predicted, s.gt_durations});
}

int cmd_eval(const std::string& ckpt, const std::string& corpus_dir,
             const std::string& predictor, const std::string& out_dir) {
  auto model = model_from_checkpoint(ckpt, nullptr);
  Corpus corpus = load_corpus(corpus_dir);

  EvalAccumulator acc;
  for (const auto& s : corpus.samples) eval_sample(*model, s, acc);

  auto pick_sync = [&](const std::string& p) -> std::vector<DurationPair>& {
    if (p == "note_norm") return acc.sync_nn;
    if (p == "syllable") return acc.sync_syl;
    return acc.sync_crdp;
  };
  auto pick_rmse =
      [&](const std::string& p) -> std::vector<DurationTruthPair>& {
    if (p == "note_norm") return acc.rmse_nn;
    if (p == "syllable") return acc.rmse_syl;
    return acc.rmse_crdp;
  };

  MetricReport report;
  report.predictor = predictor;
  report.error_p = pitch_error(acc.pitch_obs);
  report.error_s = sync_error(pick_sync(predictor));
  report.rmse_d_frames = duration_rmse(pick_rmse(predictor));
  report.rmse_d_seconds = report.rmse_d_frames / kFrameRate;
  for (const auto& o : acc.pitch_obs)
    report.per_sample_error_p.push_back(pitch_error({o}));
  for (const auto& p : pick_sync(predictor))
    report.per_sample_sync.push_back(sync_error({p}));
  for (const auto& p : pick_rmse(predictor))
    report.per_sample_rmse_frames.push_back(duration_rmse({p}));

  json out = json::parse(report.to_json());
  json cmp;
  for (const std::string p : {"crdp", "note_norm", "syllable"}) {
    cmp[p] = {{"error_s", sync_error(pick_sync(p))},
              {"rmse_d_frames", duration_rmse(pick_rmse(p))},
              {"rmse_d_seconds", duration_rmse(pick_rmse(p)) / kFrameRate}};
  }
  out["comparison"] = cmp;

  fs::create_directories(out_dir);
  write_text_file(out_dir + "/report.json", out.dump(2));
  write_manifest(out_dir, "eval", corpus_dir, 0, fnv1a64(ckpt));
  std::cout << out.dump(2) << "\n";
  return kExitOk;
}

int plot_f0(const std::string& in_dir, const std::string& out_dir) {
  Tensor f0 = load_array(in_dir + "/f0.msvs");
  json plan = json::parse(read_text_file(in_dir + "/duration_plan.json"));
  const auto rounded = plan.at("rounded").get<std::vector<int>>();
  const auto voiced_i = plan.at("voiced").get<std::vector<int>>();
  std::vector<bool> voiced(voiced_i.begin(), voiced_i.end());

  std::vector<double> contour(f0.data.begin(), f0.data.end());
  auto stats = extract_phoneme_pitch_stats(contour, rounded, voiced);

  PlotSeries line;
  line.label = "F0";
  for (size_t i = 0; i < contour.size(); ++i) {
    line.x.push_back(static_cast<double>(i));
    line.y.push_back(contour[i]);
  }
  PlotSeries mean, upper, lower;
  mean.label = "phoneme mean";
  mean.color = "#ff7f0e";
  upper.label = "mean+stdev";
  upper.color = "#555555";
  upper.dashed = true;
  lower.label = "mean-stdev";
  lower.color = "#555555";
  lower.dashed = true;
  std::vector<int> starts(rounded.size() + 1, 0);
  for (size_t i = 0; i < rounded.size(); ++i)
    starts[i + 1] = starts[i] + rounded[i];
  for (const auto& st : stats) {
    const double x0 = starts[st.index], x1 = starts[st.index + 1] - 1;
    for (double x : {x0, x1}) {
      mean.x.push_back(x);
      mean.y.push_back(st.mean);
      upper.x.push_back(x);
      upper.y.push_back(st.mean + st.stdev);
      lower.x.push_back(x);
      lower.y.push_back(st.mean - st.stdev);
    }
  }
  svg_plot(out_dir + "/f0.svg", {line, mean, upper, lower},
           "F0 contour with per-phoneme mean and stdev bands", "frame", "Hz");
  return kExitOk;
}

int plot_energy(const std::string& in_dir, const std::string& out_dir) {
  Tensor mel = load_array(in_dir + "/mel.msvs");
  PlotSeries e;
  e.label = "energy";
  for (int t = 0; t < mel.rows(); ++t) {
    double n2 = 0.0;
    for (int m = 0; m < mel.cols(); ++m) n2 += mel.at(t, m) * mel.at(t, m);
    e.x.push_back(t);
    e.y.push_back(std::sqrt(n2));
  }
  svg_plot(out_dir + "/energy.svg", {e}, "Energy contour", "frame",
           "mel column norm");
  return kExitOk;
}

int plot_embeddings_pca(const std::string& ckpt, const std::string& corpus_dir,
                        const std::string& out_dir) {
  auto model = model_from_checkpoint(ckpt, nullptr);
  Corpus corpus = load_corpus(corpus_dir);
  NoGradScope ng;

  std::vector<std::vector<double>> singer_rows, emotion_rows;
  std::vector<int> singer_labels;
  std::vector<std::string> emotion_labels;
  for (const auto& s : corpus.samples) {
    auto fwd = model->forward(s.score, s.ctx);
    auto mean_row = [](const Var& v) {
      std::vector<double> row(v.cols(), 0.0);
      for (int i = 0; i < v.rows(); ++i)
        for (int j = 0; j < v.cols(); ++j) row[j] += v.value().at(i, j);
      for (auto& x : row) x /= v.rows();
      return row;
    };
    singer_rows.push_back(mean_row(fwd.adaptor.singer_residual));
    singer_labels.push_back(s.ctx.singer_id);
    emotion_rows.push_back(mean_row(fwd.adaptor.emotion_residual));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%g",
                  emotion_name(s.ctx.emotion_type).c_str(), s.ctx.intensity);
    emotion_labels.push_back(buf);
  }

  auto scatter = [&](const std::vector<std::vector<double>>& rows,
                     const std::vector<std::string>& labels,
                     const std::string& path, const std::string& title) {
    auto pts = pca_2d(rows);
    std::vector<std::string> uniq;
    for (const auto& l : labels)
      if (std::find(uniq.begin(), uniq.end(), l) == uniq.end())
        uniq.push_back(l);
    std::vector<PlotSeries> series;
    for (size_t g = 0; g < uniq.size(); ++g) {
      PlotSeries s;
      s.label = uniq[g];
      s.color = plot_palette()[g % plot_palette().size()];
      s.points_only = true;
      for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != uniq[g]) continue;
        s.x.push_back(pts[i][0]);
        s.y.push_back(pts[i][1]);
      }
      series.push_back(std::move(s));
    }
    svg_plot(path, series, title, "PC1", "PC2");
  };

  std::vector<std::string> singer_strs;
  for (int id : singer_labels)
    singer_strs.push_back("singer_" + std::to_string(id));
  scatter(singer_rows, singer_strs, out_dir + "/singer_embeddings_pca.svg",
          "Residual singer embeddings (PCA)");
  scatter(emotion_rows, emotion_labels, out_dir + "/emotion_embeddings_pca.svg",
          "Residual emotion embeddings (PCA)");
  return kExitOk;
}

int plot_sync_accumulation(const std::string& ckpt,
                           const std::string& corpus_dir,
                           const std::string& out_dir) {
  auto model = model_from_checkpoint(ckpt, nullptr);
  Corpus corpus = load_corpus(corpus_dir);
  NoGradScope ng;
  // The longest song shows accumulation best.
  size_t pick = 0;
  for (size_t i = 0; i < corpus.samples.size(); ++i)
    if (corpus.samples[i].score.length() >
        corpus.samples[pick].score.length())
      pick = i;
  const CorpusSample& s = corpus.samples[pick];
  auto fwd = model->forward(s.score, s.ctx);
  auto nn = model->adaptor().baseline_note_norm.rollout(
      fwd.adaptor.e2, s.score.note_durations);
  auto syl = model->adaptor().baseline_syllable.rollout(
      fwd.adaptor.e2, s.score.note_durations);

  auto curve = [](const DurationPlan& p, const std::string& label,
                  const std::string& color) {
    PlotSeries se;
    se.label = label;
    se.color = color;
    for (int i = 0; i < p.length(); ++i) {
      se.x.push_back(i);
      se.y.push_back(p.sync_err[i]);
    }
    return se;
  };
  svg_plot(out_dir + "/sync_accumulation.svg",
           {curve(fwd.adaptor.durations.plan(), "CRDP", "#2ca02c"),
            curve(nn.plan(), "note normalization", "#d62728"),
            curve(syl.plan(), "syllable loss", "#9467bd")},
           "Cumulative synchronization error", "phoneme index",
           "SyncErr (frames)");
  return kExitOk;
}

int plot_erf(const std::string& preset, std::uint64_t seed,
             const std::string& out_dir) {
  ModelConfig cfg = ModelConfig::preset(preset);
  const int t_frames = 140, out_idx = 70;
  Rng init(seed);
  Tensor input = Tensor::randn({t_frames, cfg.d_model}, init);

  auto profile_of = [&](bool use_fft) {
    ModelConfig c = cfg;
    c.decoder_use_fft = use_fft;
    ParamStore ps;
    Rng rng(seed + (use_fft ? 1 : 0));
    Decoder dec = Decoder::create(ps, c, rng);
    return erf_probe(dec, input, out_idx);
  };
  auto aspp = profile_of(false);
  auto fft = profile_of(true);

  auto series = [&](const std::vector<double>& p, const std::string& label,
                    const std::string& color) {
    PlotSeries s;
    s.label = label;
    s.color = color;
    for (size_t i = 0; i < p.size(); ++i) {
      s.x.push_back(static_cast<double>(i));
      s.y.push_back(p[i]);
    }
    return s;
  };
  svg_plot(out_dir + "/erf.svg",
           {series(aspp, "ASPP decoder", "#1f77b4"),
            series(fft, "FFT decoder", "#d62728")},
           "Effective receptive field (gradient L1 norm, output frame 70)",
           "input frame", "|dy70/dx|");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"musesvs: multi-singer emotional singing-voice synthesis"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", preset, score_path, ckpt,
              corpus_dir, predictor = "crdp", emotion = "neutral",
              mode = "interpolated", kind, in_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int steps = 0, singer = 0;
  double intensity = 0.0;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed")
        ->each([&](const std::string&) { seed_set = true; });
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic corpus");
  gen->add_option("--config", config_path, "corpus config JSON");
  gen->add_option("--out", out_dir, "output directory")->required();
  add_seed(gen);

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", config_path, "training config JSON");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--preset", preset, "model preset (toy|full)");
  train->add_option("--steps", steps, "override max steps");
  add_seed(train);

  auto* synth = app.add_subcommand("synth", "synthesize from a score");
  synth->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  synth->add_option("--score", score_path, "score JSON")->required();
  synth->add_option("--singer", singer, "singer id");
  synth->add_option("--emotion", emotion, "neutral|happy|sad");
  synth->add_option("--intensity", intensity, "emotional intensity t >= 0");
  synth->add_option("--mode", mode, "interpolated|level_wise");
  synth->add_option("--out", out_dir, "output directory")->required();
  add_seed(synth);

  auto* eval = app.add_subcommand("eval", "run the quantitative metrics");
  eval->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  eval->add_option("--corpus", corpus_dir, "corpus directory")->required();
  eval->add_option("--predictor", predictor, "crdp|note_norm|syllable");
  eval->add_option("--out", out_dir, "output directory")->required();

  auto* plot = app.add_subcommand("plot", "write diagnostic plots");
  plot->add_option("--kind", kind,
                   "f0|energy|mel|embeddings_pca|sync_accumulation|erf")
      ->required();
  plot->add_option("--in", in_dir, "input directory (synth output)");
  plot->add_option("--checkpoint", ckpt, "checkpoint file");
  plot->add_option("--corpus", corpus_dir, "corpus directory");
  plot->add_option("--preset", preset, "model preset for erf");
  plot->add_option("--out", out_dir, "output directory")->required();
  add_seed(plot);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, seed, seed_set);
    if (train->parsed())
      return cmd_train(config_path, out_dir, preset, seed, seed_set, steps);
    if (synth->parsed())
      return cmd_synth(ckpt, score_path, singer, emotion, intensity, mode,
                       out_dir, seed);
    if (eval->parsed()) return cmd_eval(ckpt, corpus_dir, predictor, out_dir);
    if (plot->parsed()) {
      fs::create_directories(out_dir);
      int rc = kExitConfig;
      if (kind == "f0") rc = plot_f0(in_dir, out_dir);
      else if (kind == "energy") rc = plot_energy(in_dir, out_dir);
      else if (kind == "mel") {
        pgm_heatmap(out_dir + "/mel.pgm", load_array(in_dir + "/mel.msvs"));
        rc = kExitOk;
      } else if (kind == "embeddings_pca")
        rc = plot_embeddings_pca(ckpt, corpus_dir, out_dir);
      else if (kind == "sync_accumulation")
        rc = plot_sync_accumulation(ckpt, corpus_dir, out_dir);
      else if (kind == "erf")
        rc = plot_erf(preset.empty() ? "toy" : preset, seed, out_dir);
      else {
        std::cerr << "unknown plot kind '" << kind << "'\n";
        return kExitConfig;
      }
      write_manifest(out_dir, "plot", in_dir, seed, fnv1a64(kind));
      return rc;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
