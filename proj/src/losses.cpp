// src/losses.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/losses.hpp"

#include <cmath>
#include <limits>

namespace musesvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min(a, std::min(b, c));
  if (gamma == 0.0 || m == kInf) return m;
  const double s = std::exp(-(a - m) / gamma) + std::exp(-(b - m) / gamma) +
                   std::exp(-(c - m) / gamma);
  return m - gamma * std::log(s);
}

// Mean absolute difference between frame i of a and frame j of b.
Tensor pairwise_l1(const Tensor& a, const Tensor& b) {
  const int ta = a.rows(), tb = b.rows(), f = a.cols();
  Tensor d({ta, tb});
  for (int i = 0; i < ta; ++i)
    for (int j = 0; j < tb; ++j) {
      double s = 0.0;
      for (int k = 0; k < f; ++k) s += std::fabs(a.at(i, k) - b.at(j, k));
      d.at(i, j) = s / f;
    }
  return d;
}

// DP table R, 1-based with borders at +inf.
Tensor dtw_table(const Tensor& d, double gamma) {
  const int ta = d.rows(), tb = d.cols();
  Tensor r({ta + 1, tb + 1});
  for (int i = 0; i <= ta; ++i)
    for (int j = 0; j <= tb; ++j) r.at(i, j) = kInf;
  r.at(0, 0) = 0.0;
  for (int i = 1; i <= ta; ++i)
    for (int j = 1; j <= tb; ++j)
      r.at(i, j) = d.at(i - 1, j - 1) +
                   softmin3(r.at(i - 1, j - 1), r.at(i - 1, j), r.at(i, j - 1),
                            gamma);
  return r;
}

// dCost/dD. For gamma > 0 this is the smoothed expected alignment; for
// gamma = 0 it is the indicator of one optimal path (diagonal preferred).
Tensor alignment_gradient(const Tensor& d, const Tensor& r, double gamma) {
  const int ta = d.rows(), tb = d.cols();
  Tensor e({ta, tb});
  if (gamma > 0.0) {
    auto w = [&](double r_child, double r_here, double d_child) {
      if (r_child == kInf) return 0.0;
      return std::exp((r_child - r_here - d_child) / gamma);
    };
    // Padded traversal from the bottom-right corner.
    Tensor acc({ta + 2, tb + 2});
    acc.at(ta + 1, tb + 1) = 1.0;
    auto rpad = [&](int i, int j) -> double {
      if (i == ta + 1 && j == tb + 1) return r.at(ta, tb);
      if (i > ta || j > tb) return -kInf;
      return r.at(i, j);
    };
    auto dpad = [&](int i, int j) -> double {
      if (i == ta + 1 && j == tb + 1) return 0.0;
      if (i > ta || j > tb) return 0.0;
      return d.at(i - 1, j - 1);
    };
    for (int i = ta; i >= 1; --i) {
      for (int j = tb; j >= 1; --j) {
        const double here = r.at(i, j);
        const double down = w(rpad(i + 1, j), here, dpad(i + 1, j)) *
                            acc.at(i + 1, j);
        const double right = w(rpad(i, j + 1), here, dpad(i, j + 1)) *
                             acc.at(i, j + 1);
        const double diag = w(rpad(i + 1, j + 1), here, dpad(i + 1, j + 1)) *
                            acc.at(i + 1, j + 1);
        acc.at(i, j) = down + right + diag;
        e.at(i - 1, j - 1) = acc.at(i, j);
      }
    }
    return e;
  }
  // Hard backtrace.
  int i = ta, j = tb;
  while (i >= 1 && j >= 1) {
    e.at(i - 1, j - 1) = 1.0;
    const double diag = r.at(i - 1, j - 1);
    const double up = r.at(i - 1, j);
    const double left = r.at(i, j - 1);
    if (diag <= up && diag <= left) {
      --i;
      --j;
    } else if (up <= left) {
      --i;
    } else {
      --j;
    }
  }
  return e;
}

}  // namespace

double soft_dtw_value(const Tensor& a, const Tensor& b, double gamma) {
  check(a.ndim() == 2 && b.ndim() == 2 && a.rows() >= 1 && b.rows() >= 1,
        "soft_dtw: sequences must be non-empty");
  check(a.cols() == b.cols(), "soft_dtw: feature dims differ");
  check(gamma >= 0.0, "soft_dtw: gamma must be >= 0");
  const Tensor d = pairwise_l1(a, b);
  const Tensor r = dtw_table(d, gamma);
  return r.at(a.rows(), b.rows()) / std::max(a.rows(), b.rows());
}

Var soft_dtw(const Var& a, const Var& b, double gamma) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  check(av.ndim() == 2 && bv.ndim() == 2 && av.rows() >= 1 && bv.rows() >= 1,
        "soft_dtw: sequences must be non-empty");
  check(av.cols() == bv.cols(), "soft_dtw: feature dims differ");
  check(gamma >= 0.0, "soft_dtw: gamma must be >= 0");

  Tensor d = pairwise_l1(av, bv);
  Tensor r = dtw_table(d, gamma);
  const double norm = 1.0 / std::max(av.rows(), bv.rows());
  const double cost = r.at(av.rows(), bv.rows()) * norm;

  auto bw = [d, r, gamma, norm](Node& n, const Tensor& g, GradStore& gs) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    const Tensor e = alignment_gradient(d, r, gamma);
    const double scale = g.data[0] * norm;
    const int f = av.cols();
    if (n.parents[0]->requires_grad) {
      Tensor& ga = gs.acc(n.parents[0].get(), av.shape);
      for (int i = 0; i < av.rows(); ++i)
        for (int j = 0; j < bv.rows(); ++j) {
          const double w = e.at(i, j);
          if (w == 0.0) continue;
          for (int k = 0; k < f; ++k) {
            const double diff = av.at(i, k) - bv.at(j, k);
            const double sg = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            ga.at(i, k) += scale * w * sg / f;
          }
        }
    }
    if (n.parents[1]->requires_grad) {
      Tensor& gb = gs.acc(n.parents[1].get(), bv.shape);
      for (int i = 0; i < av.rows(); ++i)
        for (int j = 0; j < bv.rows(); ++j) {
          const double w = e.at(i, j);
          if (w == 0.0) continue;
          for (int k = 0; k < f; ++k) {
            const double diff = av.at(i, k) - bv.at(j, k);
            const double sg = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            gb.at(j, k) -= scale * w * sg / f;
          }
        }
    }
  };
  return make_op(Tensor::scalar(cost), {a, b}, bw);
}

double lambda_adv_schedule(int step, int warmup_steps, int ramp_steps,
                           double start, double end) {
  check(step >= 0, "lambda_adv_schedule: negative step");
  if (step < warmup_steps) return start;
  if (ramp_steps <= 0 || step >= warmup_steps + ramp_steps) return end;
  const double frac =
      static_cast<double>(step - warmup_steps) / ramp_steps;
  return start + frac * (end - start);
}

double total_loss(const LossParts& parts, const LossWeights& w, int step) {
  auto require_finite = [](double v, const char* name) {
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("total_loss: non-finite ") + name);
  };
  require_finite(parts.mel, "mel loss");
  require_finite(parts.pitch, "pitch loss");
  require_finite(parts.energy, "energy loss");
  require_finite(parts.duration, "duration loss");
  require_finite(parts.adversarial, "adversarial loss");
  const double adv =
      lambda_adv_schedule(step, w.adv_warmup_steps, w.adv_ramp_steps,
                          w.lambda_adv_start, w.lambda_adv_end);
  return w.lambda_m * parts.mel + w.lambda_p * parts.pitch +
         w.lambda_e * parts.energy + w.lambda_d * parts.duration +
         adv * parts.adversarial;
}

Var lsgan_discriminator_loss(const Var& d_real, const Var& d_fake) {
  Var real_term = mean_all(square(add_const(d_real, -1.0)));
  Var fake_term = mean_all(square(d_fake));
  return add(real_term, fake_term);
}

Var lsgan_generator_loss(const Var& d_fake) {
  return mean_all(square(add_const(d_fake, -1.0)));
}

double lr_schedule(int step, int warmup, double peak_lr) {
  check(step >= 1, "lr_schedule: step must be >= 1");
  check(warmup >= 1, "lr_schedule: warmup must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return peak_lr * std::sqrt(w) *
         std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

}  // namespace musesvs
