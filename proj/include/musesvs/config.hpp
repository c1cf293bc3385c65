// musesvs/config.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_CONFIG_HPP_
#define MUSESVS_CONFIG_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "musesvs/score.hpp"

namespace musesvs {

struct ModelConfig {
  int d_model = 384;
  int n_heads = 2;
  int enc_layers = 6;
  int dec_layers = 6;

  // FFT feed-forward sublayer: conv kernel 9 -> conv kernel 1.
  int ff_kernel = 9;
  int ff_filters = 1536;

  // ASPP sublayer: parallel dilated convs, wide filters at low rates.
  int aspp_kernel = 9;
  std::vector<int> aspp_dilations{1, 3, 5, 7};
  std::vector<int> aspp_filters{768, 384, 192, 192};

  int n_mels = 80;
  double dropout_enc = 0.2;
  double dropout_va = 0.5;

  // Variance-adaptor predictors/encoders.
  int pred_layers = 2;
  int pred_kernel = 3;
  int pred_filters = 384;
  int enc_kernel = 3;
  int crdp_hidden = 384;

  // Reference encoder + style token layer.
  std::vector<int> refenc_filters{32, 32, 64, 64, 128, 128};
  int refenc_kernel = 3;
  int refenc_stride = 2;
  int refenc_gru_hidden = 192;
  int style_tokens = 10;
  int style_token_dim = 48;
  int style_attn_heads = 8;

  // Discriminator conv2d stack (first entry is the input channel count).
  std::vector<int> disc_filters{1, 64, 64, 64, 64, 64};
  int disc_kernel = 9;

  int vocab_size = 16;
  int n_singers = 4;
  EmbeddingMode emotion_mode = EmbeddingMode::kInterpolated;
  bool statistical_pitch = true;  // false: deterministic mean-only predictor
  bool decoder_use_fft = false;   // true: plain FFT decoder

  // Output projections of attention sublayers are initialized with a small
  // gain; post-norm stacks at this depth are unstable with full-gain
  // residual branches at the start of training.
  double attn_out_gain = 0.05;

  double frame_rate = kFrameRate;
  double vibrato_rate_hz = 5.5;

  static ModelConfig full_size() { return ModelConfig{}; }

  static ModelConfig toy() {
    ModelConfig c;
    c.d_model = 32;
    c.n_heads = 1;
    c.enc_layers = 2;
    c.dec_layers = 2;
    c.ff_filters = 128;
    c.aspp_filters = {64, 32, 16, 16};
    c.n_mels = 80;
    c.dropout_enc = 0.1;
    c.dropout_va = 0.1;
    c.pred_filters = 32;
    c.crdp_hidden = 32;
    c.refenc_filters = {4, 4, 8, 8, 16, 16};
    c.refenc_gru_hidden = 24;
    c.style_token_dim = 12;
    c.style_attn_heads = 2;
    c.disc_filters = {1, 8, 8};
    c.disc_kernel = 5;
    c.n_singers = 2;
    return c;
  }

  static ModelConfig preset(const std::string& name) {
    if (name == "toy") return toy();
    if (name == "full") return full_size();
    throw std::invalid_argument("unknown model preset '" + name + "'");
  }
};

}  // namespace musesvs

#endif  // MUSESVS_CONFIG_HPP_
