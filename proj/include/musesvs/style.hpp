// musesvs/style.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_STYLE_HPP_
#define MUSESVS_STYLE_HPP_

#include <vector>

#include "musesvs/adaptor.hpp"

namespace musesvs {

// Global-style-token reference encoder: strided conv2d stack over the mel,
// GRU summarization over time, then multi-head attention against a bank of
// learned style tokens. Training-only; inference uses the tables.
struct StyleEncoder {
  std::vector<Conv2d> convs;
  GruCell gru;
  Var tokens;  // n_tokens x token_dim
  std::vector<Var> Wq, Wk, Wv;  // per attention head
  Linear out_proj;  // d_model -> d_model
  int heads = 1;
  int head_dim = 0;

  static StyleEncoder create(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

  // mel: T x n_mels. Optionally reports per-head token attention weights
  // (each 1 x n_tokens).
  Var forward(const Tensor& mel,
              std::vector<Tensor>* attention_weights = nullptr) const;
};

// Knowledge-distillation step: pulls (singer entry + emotion base
// embedding) toward the reference style vector. The phoneme-stage running
// mean of style vectors is subtracted from the target first, removing the
// shared component that belongs to no attribute. `freeze_teacher` stops
// gradients at the style vector.
Var distill_step(const Var& style, const AttributeContext& ctx,
                 const AttributeTable& singer_table,
                 const AttributeTable& emotion_table,
                 const Tensor& style_running_mean, bool freeze_teacher);

// Exponential running mean used as the stage-0 normalization statistic.
struct RunningMean {
  Tensor mean;
  double momentum = 0.99;
  bool initialized = false;
  void update(const Tensor& value);
};

}  // namespace musesvs

#endif  // MUSESVS_STYLE_HPP_
