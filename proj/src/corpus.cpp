// src/corpus.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/corpus.hpp"

#include <cmath>
#include <filesystem>

#include "json.hpp"
#include "musesvs/arrayio.hpp"

namespace musesvs {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticCorpusConfig::validate() const {
  check(n_samples >= 1, "corpus: n_samples must be >= 1");
  check(min_phonemes >= 1 && max_phonemes >= min_phonemes,
        "corpus: bad phoneme range");
  check(cv_slope > 0.0, "corpus: cv_slope (a1) must be > 0");
  check(min_note_frames >= 1 && max_note_frames >= min_note_frames,
        "corpus: bad note frame range");
  check(!intensity_levels.empty(), "corpus: empty intensity levels");
  check(n_singers >= 1, "corpus: need at least one singer");
  check(duration_jitter >= 0.0, "corpus: duration_jitter must be >= 0");
}

std::string SyntheticCorpusConfig::to_json() const {
  json j;
  j["n_samples"] = n_samples;
  j["min_phonemes"] = min_phonemes;
  j["max_phonemes"] = max_phonemes;
  j["n_singers"] = n_singers;
  j["intensity_levels"] = intensity_levels;
  j["cv_base"] = cv_base;
  j["cv_slope"] = cv_slope;
  j["duration_jitter"] = duration_jitter;
  j["jitter_systematic_w"] = jitter_systematic_w;
  j["jitter_noise_w"] = jitter_noise_w;
  j["song_phoneme_bias"] = song_phoneme_bias;
  j["energy_base"] = energy_base;
  j["energy_fluct_slope"] = energy_fluct_slope;
  j["energy_fluct_rate_hz"] = energy_fluct_rate_hz;
  j["vibrato_rate_hz"] = vibrato_rate_hz;
  j["singer_detune"] = singer_detune;
  j["min_note_frames"] = min_note_frames;
  j["max_note_frames"] = max_note_frames;
  j["min_midi"] = min_midi;
  j["max_midi"] = max_midi;
  j["rest_prob"] = rest_prob;
  j["n_mels"] = n_mels;
  j["seed"] = std::to_string(seed);
  return j.dump(2);
}

SyntheticCorpusConfig SyntheticCorpusConfig::from_json(
    const std::string& json_text) {
  json j = json::parse(json_text);
  SyntheticCorpusConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("n_samples", c.n_samples);
  get("min_phonemes", c.min_phonemes);
  get("max_phonemes", c.max_phonemes);
  get("n_singers", c.n_singers);
  get("intensity_levels", c.intensity_levels);
  get("cv_base", c.cv_base);
  get("cv_slope", c.cv_slope);
  get("duration_jitter", c.duration_jitter);
  get("jitter_systematic_w", c.jitter_systematic_w);
  get("jitter_noise_w", c.jitter_noise_w);
  get("song_phoneme_bias", c.song_phoneme_bias);
  get("energy_base", c.energy_base);
  get("energy_fluct_slope", c.energy_fluct_slope);
  get("energy_fluct_rate_hz", c.energy_fluct_rate_hz);
  get("vibrato_rate_hz", c.vibrato_rate_hz);
  get("singer_detune", c.singer_detune);
  get("min_note_frames", c.min_note_frames);
  get("max_note_frames", c.max_note_frames);
  get("min_midi", c.min_midi);
  get("max_midi", c.max_midi);
  get("rest_prob", c.rest_prob);
  get("n_mels", c.n_mels);
  if (j.contains("seed")) c.seed = std::stoull(j.at("seed").get<std::string>());
  c.validate();
  return c;
}

double hz_to_mel_bin(double hz, int n_mels) {
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const double lo = mel(30.0), hi = mel(12000.0);
  const double m = mel(std::max(hz, 1.0));
  return (n_mels - 1) * (m - lo) / (hi - lo);
}

Tensor render_mel(const std::vector<double>& f0,
                  const std::vector<double>& frame_energy, int n_mels) {
  check(f0.size() == frame_energy.size(), "render_mel: length mismatch");
  const int t_frames = static_cast<int>(f0.size());
  Tensor mel({t_frames, n_mels});
  constexpr int kHarmonics = 4;
  constexpr double kWidth = 1.5;
  for (int t = 0; t < t_frames; ++t) {
    if (f0[t] <= 0.0) {
      for (int m = 0; m < n_mels; ++m) mel.at(t, m) = 0.02;
      continue;
    }
    for (int h = 1; h <= kHarmonics; ++h) {
      const double center = hz_to_mel_bin(h * f0[t], n_mels);
      const double amp = frame_energy[t] / h;
      const int m0 = std::max(0, static_cast<int>(center - 5 * kWidth));
      const int m1 = std::min(n_mels - 1, static_cast<int>(center + 5 * kWidth));
      for (int m = m0; m <= m1; ++m) {
        const double d = (m - center) / kWidth;
        mel.at(t, m) += amp * std::exp(-0.5 * d * d);
      }
    }
  }
  return mel;
}

namespace {

// Per-phoneme systematic duration offsets, exactly zero-mean across the
// non-rest vocabulary.
std::vector<double> systematic_offsets(const PhonemeVocab& vocab, Rng& rng) {
  std::vector<double> delta(vocab.size(), 0.0);
  double mean = 0.0;
  for (int p = 1; p < vocab.size(); ++p) {
    delta[p] = rng.normal();
    mean += delta[p];
  }
  mean /= (vocab.size() - 1);
  for (int p = 1; p < vocab.size(); ++p) delta[p] -= mean;
  return delta;
}

}  // namespace

Corpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.cfg = cfg;
  corpus.vocab = PhonemeVocab::default_vocab();
  const PhonemeVocab& vocab = corpus.vocab;

  Rng corpus_rng = Rng::derive(cfg.seed, 0xC0DE);
  const std::vector<double> delta = systematic_offsets(vocab, corpus_rng);
  std::vector<double> singer_detune(cfg.n_singers);
  for (int s = 0; s < cfg.n_singers; ++s)
    singer_detune[s] = cfg.singer_detune * corpus_rng.normal();
  std::vector<double> phoneme_loudness(vocab.size());
  for (int p = 0; p < vocab.size(); ++p)
    phoneme_loudness[p] = 0.8 + 0.4 * corpus_rng.uniform();

  for (int idx = 0; idx < cfg.n_samples; ++idx) {
    Rng rng = Rng::derive(cfg.seed, 1, static_cast<std::uint64_t>(idx));
    CorpusSample sample;

    // Attributes.
    sample.ctx.singer_id = rng.uniform_int(0, cfg.n_singers - 1);
    const double t = cfg.intensity_levels[rng.uniform_int(
        0, static_cast<int>(cfg.intensity_levels.size()) - 1)];
    sample.ctx.intensity = t;
    sample.ctx.emotion_type =
        t == 0.0 ? EmotionType::kNeutral
                 : (rng.uniform() < 0.5 ? EmotionType::kHappy
                                        : EmotionType::kSad);
    sample.ctx.embedding_mode = EmbeddingMode::kInterpolated;

    // Song-specific phoneme distribution; real lyrics are not uniform over
    // the inventory, and the skew is what makes systematic duration
    // deviations accumulate over a song.
    std::vector<double> weights(vocab.size(), 0.0);
    double wsum = 0.0;
    for (int p = 1; p < vocab.size(); ++p) {
      weights[p] = std::exp(cfg.song_phoneme_bias * rng.normal());
      wsum += weights[p];
    }

    const int n_pho = rng.uniform_int(cfg.min_phonemes, cfg.max_phonemes);
    int midi = rng.uniform_int(cfg.min_midi, cfg.max_midi);
    Score& sc = sample.score;
    for (int i = 0; i < n_pho; ++i) {
      if (rng.uniform() < cfg.rest_prob && i > 0 && !sc.is_rest(i - 1)) {
        sc.phonemes.push_back(PhonemeVocab::kRestId);
        sc.note_pitches.push_back(0);
      } else {
        double u = rng.uniform() * wsum;
        int pick = 1;
        for (int p = 1; p < vocab.size(); ++p) {
          u -= weights[p];
          if (u <= 0.0) {
            pick = p;
            break;
          }
        }
        sc.phonemes.push_back(pick);
        midi += rng.uniform_int(-3, 3);
        midi = std::clamp(midi, cfg.min_midi, cfg.max_midi);
        sc.note_pitches.push_back(midi);
      }
      sc.note_durations.push_back(
          rng.uniform_int(cfg.min_note_frames, cfg.max_note_frames));
    }

    // Syllables: contiguous runs of 1-3 phonemes.
    std::vector<std::pair<int, int>> syllables;
    int cursor = 0;
    while (cursor < n_pho) {
      const int len = std::min(rng.uniform_int(1, 3), n_pho - cursor);
      syllables.emplace_back(cursor, cursor + len);
      cursor += len;
    }
    sc.syllable_bounds = syllables;

    // Ground-truth durations: note +- jitter (systematic + noise).
    for (int i = 0; i < n_pho; ++i) {
      const int note = sc.note_durations[i];
      double jitter = 0.0;
      if (!sc.is_rest(i) && t > 0.0) {
        const double sys = cfg.jitter_systematic_w * delta[sc.phonemes[i]];
        const double noise = cfg.jitter_noise_w * rng.normal();
        jitter = cfg.duration_jitter * t * note * (sys + noise);
        jitter = std::clamp(jitter, -0.4 * note, 0.4 * note);
      }
      sample.gt_durations.push_back(std::max(
          1, static_cast<int>(std::lround(note + jitter))));
    }

    // Ground-truth pitch stats.
    PitchStats& ps = sample.gt_pitch;
    for (int i = 0; i < n_pho; ++i) {
      const bool voiced = !sc.is_rest(i);
      ps.voiced.push_back(voiced);
      const double note_hz = voiced ? midi_to_hz(sc.note_pitches[i]) : 0.0;
      ps.note_hz.push_back(note_hz);
      ps.mean_hz.push_back(
          voiced ? note_hz * (1.0 + singer_detune[sample.ctx.singer_id]) : 0.0);
      ps.cv.push_back(voiced ? cfg.cv_base + cfg.cv_slope * t : 0.0);
    }

    // F0 contour + frame energy envelope + mel.
    const std::uint64_t f0_seed =
        Rng::derive(cfg.seed, 2, static_cast<std::uint64_t>(idx)).next_u64();
    sample.gt_f0 = realize_f0(ps, sample.gt_durations, cfg.vibrato_rate_hz,
                              f0_seed);
    std::vector<double> env;
    int frame = 0;
    for (int i = 0; i < n_pho; ++i) {
      const double base =
          cfg.energy_base * phoneme_loudness[sc.phonemes[i]];
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      for (int k = 0; k < sample.gt_durations[i]; ++k, ++frame) {
        const double tau = frame / kFrameRate;
        const double fluct =
            1.0 + t * cfg.energy_fluct_slope *
                      std::sin(2.0 * M_PI * cfg.energy_fluct_rate_hz * tau +
                               phase);
        env.push_back(sc.is_rest(i) ? 0.0 : base * std::max(0.1, fluct));
      }
    }
    sample.gt_mel = render_mel(sample.gt_f0, env, cfg.n_mels);
    sample.gt_energy = energy_from_mel(sample.gt_mel, sample.gt_durations);

    corpus.samples.push_back(std::move(sample));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(dir);
  json root;
  root["config"] = json::parse(corpus.cfg.to_json());
  root["vocab"] = corpus.vocab.symbols();
  root["n_samples"] = static_cast<int>(corpus.samples.size());
  write_text_file(dir + "/corpus.json", root.dump(2));

  char name[32];
  for (size_t i = 0; i < corpus.samples.size(); ++i) {
    const CorpusSample& s = corpus.samples[i];
    std::snprintf(name, sizeof(name), "sample_%04zu", i);
    const std::string sdir = dir + "/" + name;
    fs::create_directories(sdir);
    write_text_file(sdir + "/score.json",
                    serialize_score(s.score, corpus.vocab));
    json attrs;
    attrs["singer_id"] = s.ctx.singer_id;
    attrs["emotion"] = emotion_name(s.ctx.emotion_type);
    attrs["intensity"] = s.ctx.intensity;
    write_text_file(sdir + "/attrs.json", attrs.dump(2));
    json targets;
    targets["durations"] = s.gt_durations;
    targets["pitch_mean_hz"] = s.gt_pitch.mean_hz;
    targets["pitch_cv"] = s.gt_pitch.cv;
    targets["voiced"] = std::vector<int>(s.gt_pitch.voiced.begin(),
                                         s.gt_pitch.voiced.end());
    targets["energy"] = s.gt_energy;
    write_text_file(sdir + "/targets.json", targets.dump(2));
    Tensor f0({static_cast<int>(s.gt_f0.size()), 1});
    for (size_t k = 0; k < s.gt_f0.size(); ++k) f0.at(static_cast<int>(k), 0) = s.gt_f0[k];
    save_array(sdir + "/f0.msvs", f0);
    save_array(sdir + "/mel.msvs", s.gt_mel);
  }
}

Corpus load_corpus(const std::string& dir) {
  json root = json::parse(read_text_file(dir + "/corpus.json"));
  Corpus corpus;
  corpus.cfg = SyntheticCorpusConfig::from_json(root.at("config").dump());
  corpus.vocab = PhonemeVocab(root.at("vocab").get<std::vector<std::string>>());
  const int n = root.at("n_samples").get<int>();
  char name[32];
  for (int i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "sample_%04d", i);
    const std::string sdir = dir + "/" + name;
    CorpusSample s;
    s.score = parse_score(read_text_file(sdir + "/score.json"), corpus.vocab);
    json attrs = json::parse(read_text_file(sdir + "/attrs.json"));
    s.ctx.singer_id = attrs.at("singer_id").get<int>();
    s.ctx.emotion_type = emotion_from_name(attrs.at("emotion").get<std::string>());
    s.ctx.intensity = attrs.at("intensity").get<double>();
    s.ctx.embedding_mode = EmbeddingMode::kInterpolated;
    json targets = json::parse(read_text_file(sdir + "/targets.json"));
    s.gt_durations = targets.at("durations").get<std::vector<int>>();
    s.gt_pitch.mean_hz = targets.at("pitch_mean_hz").get<std::vector<double>>();
    s.gt_pitch.cv = targets.at("pitch_cv").get<std::vector<double>>();
    for (int v : targets.at("voiced").get<std::vector<int>>())
      s.gt_pitch.voiced.push_back(v != 0);
    s.gt_energy = targets.at("energy").get<std::vector<double>>();
    s.gt_pitch.note_hz.clear();
    for (int k = 0; k < s.score.length(); ++k)
      s.gt_pitch.note_hz.push_back(
          s.score.is_rest(k) ? 0.0 : midi_to_hz(s.score.note_pitches[k]));
    Tensor f0 = load_array(sdir + "/f0.msvs");
    s.gt_f0.assign(f0.data.begin(), f0.data.end());
    s.gt_mel = load_array(sdir + "/mel.msvs");
    corpus.samples.push_back(std::move(s));
  }
  return corpus;
}

}  // namespace musesvs
