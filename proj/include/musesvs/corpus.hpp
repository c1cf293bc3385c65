// musesvs/corpus.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_CORPUS_HPP_
#define MUSESVS_CORPUS_HPP_

#include <string>
#include <vector>

#include "musesvs/adaptor.hpp"

namespace musesvs {

// Synthetic-corpus recipe. Ground-truth pitch CV grows linearly with
// emotional intensity (cv = cv_base + cv_slope * t); phoneme durations
// deviate from the note by a zero-mean jitter whose standard deviation is
// duration_jitter * t * note_frames, split into a per-phoneme systematic
// part (predictable from the phoneme identity, the source of cumulative
// drift) and white noise, clipped at +/-40% of the note.
struct SyntheticCorpusConfig {
  int n_samples = 200;
  int min_phonemes = 10;
  int max_phonemes = 24;
  int n_singers = 2;
  std::vector<double> intensity_levels{0.0, 0.3, 0.7, 1.0};

  double cv_base = 0.01;   // a0
  double cv_slope = 0.06;  // a1, must be > 0

  double duration_jitter = 0.25;       // alpha
  double jitter_systematic_w = 0.8;    // amplitude weight of systematic part
  double jitter_noise_w = 0.6;         // amplitude weight of white noise
  double song_phoneme_bias = 1.2;      // per-song phoneme distribution skew

  double energy_base = 1.0;
  double energy_fluct_slope = 0.5;
  double energy_fluct_rate_hz = 3.0;
  double vibrato_rate_hz = 5.5;
  double singer_detune = 0.005;  // relative per-singer pitch offset

  int min_note_frames = 4;
  int max_note_frames = 10;
  int min_midi = 55;
  int max_midi = 75;
  double rest_prob = 0.06;

  int n_mels = 80;
  std::uint64_t seed = 1234;

  void validate() const;
  std::string to_json() const;
  static SyntheticCorpusConfig from_json(const std::string& json_text);
};

struct CorpusSample {
  Score score;
  AttributeContext ctx;
  std::vector<int> gt_durations;   // d_i, frames
  PitchStats gt_pitch;             // mu_i, CV_i, note_hz, voiced
  std::vector<double> gt_energy;   // per phoneme
  std::vector<double> gt_f0;       // frame contour aligned to gt_durations
  Tensor gt_mel;                   // sum(d_i) x n_mels
};

struct Corpus {
  SyntheticCorpusConfig cfg;
  PhonemeVocab vocab;
  std::vector<CorpusSample> samples;
};

Corpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg);

// Renders the deterministic ground-truth mel: harmonic Gaussian bumps at
// the mel bins of F0 multiples, scaled by the frame energy envelope.
Tensor render_mel(const std::vector<double>& f0,
                  const std::vector<double>& frame_energy, int n_mels);

double hz_to_mel_bin(double hz, int n_mels);

// Directory layout: corpus.json plus one subdirectory per sample holding
// score.json, attrs.json, targets.json, f0.msvs and mel.msvs.
void save_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace musesvs

#endif  // MUSESVS_CORPUS_HPP_
