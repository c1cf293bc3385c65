// musesvs/evaluation.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_EVALUATION_HPP_
#define MUSESVS_EVALUATION_HPP_

#include <string>
#include <vector>

#include "musesvs/score.hpp"

namespace musesvs {

// 2-Wasserstein (Frechet) distance between two univariate Gaussians:
// sqrt((mu1-mu2)^2 + (sigma1-sigma2)^2).
double frechet_gaussian(double mu1, double sigma1, double mu2, double sigma2);

// One sample's synthesized-vs-ground-truth phoneme pitch distributions.
struct PhonemePitchObservation {
  std::vector<double> syn_mean, syn_sigma;
  std::vector<double> gt_mean, gt_sigma;
  std::vector<bool> voiced;
};

// Sum of per-phoneme Frechet distances per sample, averaged over samples.
// The per-sample sum is deliberately not divided by the phoneme count; set
// `normalize_per_phoneme` for the diagnostic variant that is.
double pitch_error(const std::vector<PhonemePitchObservation>& observations,
                   bool normalize_per_phoneme = false);

struct DurationPair {
  std::vector<double> predicted;  // d_hat per phoneme
  std::vector<int> note;          // d_bar per phoneme
};

// Mean over samples of |sum d_hat - sum d_bar| / sum d_bar.
double sync_error(const std::vector<DurationPair>& plans);

struct DurationTruthPair {
  std::vector<double> predicted;
  std::vector<int> truth;  // ground-truth d per phoneme
};

// Mean over samples of per-sample RMSE, in frames.
double duration_rmse(const std::vector<DurationTruthPair>& pairs);

struct PhonemeStat {
  int index = 0;  // phoneme position in the score
  double mean = 0.0;
  double stdev = 0.0;  // population
  double cv = 0.0;
};

// Population mean/stdev of the F0 contour within each voiced phoneme
// interval; masked phonemes are omitted. Intervals shorter than 2 frames
// report stdev 0.
std::vector<PhonemeStat> extract_phoneme_pitch_stats(
    const std::vector<double>& f0, const std::vector<int>& durations,
    const std::vector<bool>& voiced);

struct MetricReport {
  double error_p = 0.0;
  double error_s = 0.0;
  double rmse_d_frames = 0.0;
  double rmse_d_seconds = 0.0;
  std::vector<double> per_sample_error_p;
  std::vector<double> per_sample_sync;
  std::vector<double> per_sample_rmse_frames;
  std::string predictor = "crdp";

  std::string to_json() const;
};

}  // namespace musesvs

#endif  // MUSESVS_EVALUATION_HPP_
