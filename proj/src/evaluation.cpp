// src/evaluation.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/evaluation.hpp"

#include <cmath>

#include "json.hpp"
#include "musesvs/tensor.hpp"

namespace musesvs {

double frechet_gaussian(double mu1, double sigma1, double mu2, double sigma2) {
  check(sigma1 >= 0.0 && sigma2 >= 0.0,
        "frechet_gaussian: negative standard deviation");
  const double dm = mu1 - mu2;
  const double ds = sigma1 - sigma2;
  return std::sqrt(dm * dm + ds * ds);
}

double pitch_error(const std::vector<PhonemePitchObservation>& observations,
                   bool normalize_per_phoneme) {
  check(!observations.empty(), "pitch_error: empty observation set");
  double total = 0.0;
  for (const auto& o : observations) {
    const size_t n = o.syn_mean.size();
    check(o.syn_sigma.size() == n && o.gt_mean.size() == n &&
              o.gt_sigma.size() == n && o.voiced.size() == n,
          "pitch_error: observation field length mismatch");
    double sample_sum = 0.0;
    int voiced = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!o.voiced[i]) continue;
      sample_sum += frechet_gaussian(o.syn_mean[i], o.syn_sigma[i],
                                     o.gt_mean[i], o.gt_sigma[i]);
      ++voiced;
    }
    if (normalize_per_phoneme && voiced > 0) sample_sum /= voiced;
    total += sample_sum;
  }
  return total / observations.size();
}

double sync_error(const std::vector<DurationPair>& plans) {
  check(!plans.empty(), "sync_error: empty plan set");
  double total = 0.0;
  for (const auto& p : plans) {
    check(!p.note.empty() && p.predicted.size() == p.note.size(),
          "sync_error: bad plan");
    double pred = 0.0, note = 0.0;
    for (double d : p.predicted) pred += d;
    for (int d : p.note) note += d;
    check(note > 0.0, "sync_error: zero-length note sequence");
    total += std::fabs(pred - note) / note;
  }
  return total / plans.size();
}

double duration_rmse(const std::vector<DurationTruthPair>& pairs) {
  check(!pairs.empty(), "duration_rmse: empty set");
  double total = 0.0;
  for (const auto& p : pairs) {
    check(!p.truth.empty() && p.predicted.size() == p.truth.size(),
          "duration_rmse: length mismatch");
    double sq = 0.0;
    for (size_t i = 0; i < p.truth.size(); ++i) {
      const double d = p.truth[i] - p.predicted[i];
      sq += d * d;
    }
    total += std::sqrt(sq / p.truth.size());
  }
  return total / pairs.size();
}

std::vector<PhonemeStat> extract_phoneme_pitch_stats(
    const std::vector<double>& f0, const std::vector<int>& durations,
    const std::vector<bool>& voiced) {
  check(durations.size() == voiced.size(),
        "extract_phoneme_pitch_stats: mask length mismatch");
  std::size_t total = 0;
  for (int d : durations) total += d;
  check(total == f0.size(),
        "extract_phoneme_pitch_stats: durations do not cover the contour");
  std::vector<PhonemeStat> out;
  int t = 0;
  for (size_t i = 0; i < durations.size(); ++i) {
    const int d = durations[i];
    if (!voiced[i]) {
      t += d;
      continue;
    }
    double mean = 0.0;
    for (int k = 0; k < d; ++k) mean += f0[t + k];
    mean /= d;
    double var = 0.0;
    if (d >= 2) {
      for (int k = 0; k < d; ++k) {
        const double c = f0[t + k] - mean;
        var += c * c;
      }
      var /= d;  // population
    }
    PhonemeStat st;
    st.index = static_cast<int>(i);
    st.mean = mean;
    st.stdev = std::sqrt(var);
    st.cv = mean != 0.0 ? st.stdev / mean : 0.0;
    out.push_back(st);
    t += d;
  }
  return out;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["predictor"] = predictor;
  j["error_p"] = error_p;
  j["error_s"] = error_s;
  j["rmse_d_frames"] = rmse_d_frames;
  j["rmse_d_seconds"] = rmse_d_seconds;
  j["per_sample"] = {{"error_p", per_sample_error_p},
                     {"sync", per_sample_sync},
                     {"rmse_frames", per_sample_rmse_frames}};
  return j.dump(2);
}

}  // namespace musesvs
