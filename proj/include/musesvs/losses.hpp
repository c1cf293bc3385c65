// musesvs/losses.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_LOSSES_HPP_
#define MUSESVS_LOSSES_HPP_

#include "musesvs/blocks.hpp"

namespace musesvs {

struct LossWeights {
  double lambda_m = 1.0;
  double lambda_p = 1.0;
  double lambda_e = 0.8;
  double lambda_d = 0.8;
  double lambda_adv_start = 0.01;
  double lambda_adv_end = 0.5;
  double lambda_pm = 1.0;
  double lambda_pcv = 10.0;
  double lambda_sync = 0.3;
  double lambda_distill = 1.0;
  int adv_warmup_steps = 200;
  int adv_ramp_steps = 400;
};

// Soft dynamic time warping between two frame sequences with an L1
// frame-pair cost (mean absolute difference). gamma = 0 degenerates to
// classic DTW; gamma > 0 is differentiable in both inputs. The result is
// normalized by max(T_a, T_b).
Var soft_dtw(const Var& a, const Var& b, double gamma);
double soft_dtw_value(const Tensor& a, const Tensor& b, double gamma);

// lambda_adv: `start` until warmup ends, then a linear ramp to `end` over
// ramp_steps, then `end`.
double lambda_adv_schedule(int step, int warmup_steps, int ramp_steps,
                           double start = 0.01, double end = 0.5);

struct LossParts {
  double mel = 0.0;
  double pitch = 0.0;
  double energy = 0.0;
  double duration = 0.0;
  double adversarial = 0.0;
};

// Weighted total loss with lambda_adv drawn from the warm-up schedule.
// Throws on non-finite parts.
double total_loss(const LossParts& parts, const LossWeights& w, int step);

// Least-squares GAN objectives on discriminator score maps.
Var lsgan_discriminator_loss(const Var& d_real, const Var& d_fake);
Var lsgan_generator_loss(const Var& d_fake);

// Transformer-style learning-rate schedule with the peak calibrated to
// `peak_lr` at step == warmup.
double lr_schedule(int step, int warmup, double peak_lr = 1e-3);

}  // namespace musesvs

#endif  // MUSESVS_LOSSES_HPP_
