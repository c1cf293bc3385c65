// src/blocks.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/blocks.hpp"

#include <cmath>
#include <numeric>

namespace musesvs {

FftBlock FftBlock::create(ParamStore& ps, const std::string& prefix,
                          const ModelConfig& cfg, Rng& rng) {
  FftBlock b;
  b.attn = MultiHeadSelfAttention::create(ps, prefix + ".attn", cfg.d_model,
                                          cfg.n_heads, rng, cfg.attn_out_gain);
  b.ln_attn = LayerNorm::create(ps, prefix + ".ln_attn", cfg.d_model);
  b.conv1 = Conv1d::create(ps, prefix + ".conv1", cfg.d_model, cfg.ff_filters,
                           cfg.ff_kernel, 1, rng);
  b.conv2 = Conv1d::create(ps, prefix + ".conv2", cfg.ff_filters, cfg.d_model,
                           1, 1, rng);
  b.ln_ff = LayerNorm::create(ps, prefix + ".ln_ff", cfg.d_model);
  b.dropout_p = cfg.dropout_enc;
  return b;
}

Var FftBlock::forward(const Var& x, Rng* rng, bool training) const {
  Var a = attn.forward(x);
  if (training && rng) a = dropout(a, dropout_p, *rng, true);
  Var x1 = ln_attn.forward(add(x, a));
  Var f = conv2.forward(relu(conv1.forward(x1)));
  if (training && rng) f = dropout(f, dropout_p, *rng, true);
  return ln_ff.forward(add(x1, f));
}

AsppTransformerBlock AsppTransformerBlock::create(ParamStore& ps,
                                                  const std::string& prefix,
                                                  const ModelConfig& cfg,
                                                  Rng& rng) {
  check(cfg.aspp_dilations.size() == cfg.aspp_filters.size(),
        "aspp: dilations and branch filters must pair up");
  AsppTransformerBlock b;
  b.attn = MultiHeadSelfAttention::create(ps, prefix + ".attn", cfg.d_model,
                                          cfg.n_heads, rng, cfg.attn_out_gain);
  b.ln_attn = LayerNorm::create(ps, prefix + ".ln_attn", cfg.d_model);
  int total = 0;
  for (size_t i = 0; i < cfg.aspp_dilations.size(); ++i) {
    b.branches.push_back(Conv1d::create(
        ps, prefix + ".branch" + std::to_string(i), cfg.d_model,
        cfg.aspp_filters[i], cfg.aspp_kernel, cfg.aspp_dilations[i], rng));
    total += cfg.aspp_filters[i];
  }
  b.fuse = Conv1d::create(ps, prefix + ".fuse", total, cfg.d_model, 1, 1, rng);
  b.ln_ff = LayerNorm::create(ps, prefix + ".ln_ff", cfg.d_model);
  b.dropout_p = cfg.dropout_enc;
  return b;
}

Var AsppTransformerBlock::forward(const Var& x, Rng* rng,
                                  bool training) const {
  Var a = attn.forward(x);
  if (training && rng) a = dropout(a, dropout_p, *rng, true);
  Var x1 = ln_attn.forward(add(x, a));
  std::vector<Var> pooled;
  pooled.reserve(branches.size());
  for (const auto& br : branches) pooled.push_back(relu(br.forward(x1)));
  Var f = fuse.forward(concat_cols(pooled));
  if (training && rng) f = dropout(f, dropout_p, *rng, true);
  return ln_ff.forward(add(x1, f));
}

Encoder Encoder::create(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
  Encoder e;
  for (int i = 0; i < cfg.enc_layers; ++i)
    e.blocks.push_back(
        FftBlock::create(ps, "encoder.block" + std::to_string(i), cfg, rng));
  return e;
}

JointEmbeddingSeq Encoder::forward(const Var& low_level, Rng* rng,
                                   bool training) const {
  Var h = low_level;
  for (const auto& b : blocks) h = b.forward(h, rng, training);
  return JointEmbeddingSeq{h, 0};
}

Decoder Decoder::create(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
  Decoder d;
  d.use_fft = cfg.decoder_use_fft;
  for (int i = 0; i < cfg.dec_layers; ++i) {
    const std::string prefix = "decoder.block" + std::to_string(i);
    if (d.use_fft)
      d.fft_blocks.push_back(FftBlock::create(ps, prefix, cfg, rng));
    else
      d.aspp_blocks.push_back(
          AsppTransformerBlock::create(ps, prefix, cfg, rng));
  }
  d.mel_head =
      Linear::create(ps, "decoder.mel_head", cfg.d_model, cfg.n_mels, rng);
  return d;
}

Var Decoder::forward(const Var& frames, Rng* rng, bool training) const {
  Var h = frames;
  if (use_fft)
    for (const auto& b : fft_blocks) h = b.forward(h, rng, training);
  else
    for (const auto& b : aspp_blocks) h = b.forward(h, rng, training);
  return mel_head.forward(h);
}

Var length_regulate(const Var& e, const std::vector<int>& durations) {
  return length_regulate_op(e, durations);
}

Discriminator Discriminator::create(ParamStore& ps, const ModelConfig& cfg,
                                    Rng& rng) {
  check(cfg.disc_filters.size() >= 2 && cfg.disc_filters[0] == 1,
        "discriminator: filter list must start with 1 input channel");
  Discriminator d;
  for (size_t i = 0; i + 1 < cfg.disc_filters.size(); ++i) {
    d.convs.push_back(Conv2d::create(
        ps, "disc.conv" + std::to_string(i), cfg.disc_filters[i],
        cfg.disc_filters[i + 1], cfg.disc_kernel, cfg.disc_kernel, 1, 1, rng));
  }
  d.score = Conv2d::create(ps, "disc.score", cfg.disc_filters.back(), 1, 1, 1,
                           1, 1, rng);
  return d;
}

Var Discriminator::forward(const Var& mel, bool frozen) const {
  check(mel.value().ndim() == 2, "discriminator: expects T x n_mels");
  Var h = reshape(mel, {mel.rows(), mel.cols(), 1});
  for (const auto& c : convs) h = relu(c.forward(h, frozen));
  Var s = score.forward(h, frozen);
  return reshape(s, {s.value().shape[0], s.value().shape[1]});
}

std::vector<double> erf_probe(const Decoder& decoder, const Tensor& e_frames,
                              int out_index) {
  check(e_frames.ndim() == 2, "erf_probe: expects T x d input");
  const int t_frames = e_frames.rows();
  check(out_index >= 0 && out_index < t_frames,
        "erf_probe: output index out of range");
  Var input = leaf(e_frames, true);
  Var mel = decoder.forward(input);
  Var target = sum_all(slice_rows(mel, out_index, 1));
  GradStore gs;
  backward(target, gs);
  const Tensor* g = gs.find(input.node().get());
  std::vector<double> profile(t_frames, 0.0);
  if (g) {
    for (int i = 0; i < t_frames; ++i) {
      double s = 0.0;
      for (int j = 0; j < g->cols(); ++j) s += std::fabs(g->at(i, j));
      profile[i] = s;
    }
  }
  return profile;
}

int gradient_mass_width(const std::vector<double>& profile, int center,
                        double mass_fraction) {
  const int n = static_cast<int>(profile.size());
  check(center >= 0 && center < n, "gradient_mass_width: bad center");
  const double total = std::accumulate(profile.begin(), profile.end(), 0.0);
  if (total <= 0.0) return 0;
  int lo = center, hi = center;
  double mass = profile[center];
  while (mass < mass_fraction * total && (lo > 0 || hi < n - 1)) {
    const double left = lo > 0 ? profile[lo - 1] : -1.0;
    const double right = hi < n - 1 ? profile[hi + 1] : -1.0;
    if (right > left) {
      mass += profile[++hi];
    } else {
      mass += profile[--lo];
    }
  }
  return hi - lo + 1;
}

}  // namespace musesvs
