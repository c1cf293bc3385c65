// src/optim.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/optim.hpp"

#include <cmath>

namespace musesvs {

void round_tensor_to_f32(Tensor& t) {
  for (auto& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

Adam Adam::over(const ParamStore& ps,
                const std::function<bool(const std::string&)>& filter) {
  Adam a;
  for (const auto& [name, var] : ps.all()) {
    if (!filter(name)) continue;
    a.params_.emplace_back(name, var);
    a.m_.emplace(name, Tensor(var.value().shape));
    a.v_.emplace(name, Tensor(var.value().shape));
  }
  return a;
}

void Adam::step(const GradStore& grads, double lr, double clip_norm) {
  double norm2 = 0.0;
  for (const auto& [name, var] : params_) {
    const Tensor* g = grads.find(var.node().get());
    if (!g) continue;
    for (double v : g->data) norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  const double gscale =
      (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, t_);
  const double bc2 = 1.0 - std::pow(beta2, t_);
  for (const auto& [name, var] : params_) {
    const Tensor* g = grads.find(var.node().get());
    if (!g) continue;
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    Tensor& p = var.node()->value;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      const double gi = g->data[i] * gscale;
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * gi;
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * gi * gi;
      const double mhat = m.data[i] / bc1;
      const double vhat = v.data[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void Adam::round_state_to_f32() {
  for (const auto& [name, var] : params_) round_tensor_to_f32(var.node()->value);
  for (auto& [name, t] : m_) round_tensor_to_f32(t);
  for (auto& [name, t] : v_) round_tensor_to_f32(t);
}

}  // namespace musesvs
