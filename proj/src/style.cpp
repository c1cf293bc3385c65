// src/style.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/style.hpp"

#include <cmath>

namespace musesvs {

StyleEncoder StyleEncoder::create(ParamStore& ps, const ModelConfig& cfg,
                                  Rng& rng) {
  StyleEncoder e;
  int c_in = 1;
  for (size_t i = 0; i < cfg.refenc_filters.size(); ++i) {
    e.convs.push_back(Conv2d::create(
        ps, "style.conv" + std::to_string(i), c_in, cfg.refenc_filters[i],
        cfg.refenc_kernel, cfg.refenc_kernel, cfg.refenc_stride,
        cfg.refenc_stride, rng));
    c_in = cfg.refenc_filters[i];
  }
  // GRU input width: collapsed (mel', channels) per reduced-time step.
  int mel_w = cfg.n_mels;
  for (size_t i = 0; i < cfg.refenc_filters.size(); ++i)
    mel_w = (mel_w + 2 * (cfg.refenc_kernel / 2) - cfg.refenc_kernel) /
                cfg.refenc_stride +
            1;
  e.gru = GruCell::create(ps, "style.gru", mel_w * c_in,
                          cfg.refenc_gru_hidden, rng);

  check(cfg.d_model % cfg.style_attn_heads == 0,
        "style encoder: d_model must divide by attention heads");
  e.heads = cfg.style_attn_heads;
  e.head_dim = cfg.d_model / cfg.style_attn_heads;
  e.tokens = ps.create(
      "style.tokens",
      Tensor::randn({cfg.style_tokens, cfg.style_token_dim}, rng, 0.3));
  for (int h = 0; h < e.heads; ++h) {
    const std::string hp = "style.attn.h" + std::to_string(h);
    e.Wq.push_back(ps.create(
        hp + ".wq", xavier_uniform({cfg.refenc_gru_hidden, e.head_dim},
                                   cfg.refenc_gru_hidden, e.head_dim, rng)));
    e.Wk.push_back(ps.create(
        hp + ".wk", xavier_uniform({cfg.style_token_dim, e.head_dim},
                                   cfg.style_token_dim, e.head_dim, rng)));
    e.Wv.push_back(ps.create(
        hp + ".wv", xavier_uniform({cfg.style_token_dim, e.head_dim},
                                   cfg.style_token_dim, e.head_dim, rng)));
  }
  e.out_proj =
      Linear::create(ps, "style.out", cfg.d_model, cfg.d_model, rng);
  return e;
}

Var StyleEncoder::forward(const Tensor& mel,
                          std::vector<Tensor>* attention_weights) const {
  check(mel.ndim() == 2 && mel.rows() >= 1, "style encoder: empty mel");
  // Right-pad the time axis with zeros to a multiple of the stack's total
  // stride. Trailing zero-padding up to that multiple cannot change the
  // output.
  int total_stride = 1;
  for (size_t i = 0; i < convs.size(); ++i) total_stride *= convs[i].sh;
  const int padded =
      ((mel.rows() + total_stride - 1) / total_stride) * total_stride;
  Tensor x({padded, mel.cols()});
  for (int t = 0; t < mel.rows(); ++t)
    for (int m = 0; m < mel.cols(); ++m) x.at(t, m) = mel.at(t, m);
  Var h = constant(std::move(x));
  h = reshape(h, {padded, mel.cols(), 1});
  for (const auto& c : convs) h = relu(c.forward(h));
  const auto& s = h.value().shape;  // {T', M', C}
  Var seq = reshape(h, {s[0], s[1] * s[2]});
  Var summary = gru_last_hidden(gru, seq);  // 1 x gru_hidden

  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int hd = 0; hd < heads; ++hd) {
    Var q = matmul(summary, Wq[hd]);                  // 1 x dh
    Var k = matmul(tokens, Wk[hd]);                   // n_tokens x dh
    Var v = matmul(tokens, Wv[hd]);                   // n_tokens x dh
    Var w = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt));
    if (attention_weights) attention_weights->push_back(w.value());
    outs.push_back(matmul(w, v));  // 1 x dh
  }
  Var cat = heads == 1 ? outs[0] : concat_cols(outs);
  return out_proj.forward(cat);
}

Var distill_step(const Var& style, const AttributeContext& ctx,
                 const AttributeTable& singer_table,
                 const AttributeTable& emotion_table,
                 const Tensor& style_running_mean, bool freeze_teacher) {
  Var target = freeze_teacher ? detach(style) : style;
  check(style_running_mean.same_shape(style.value()),
        "distill_step: running mean shape mismatch");
  target = sub(target, constant(style_running_mean));
  Var pred = add(singer_table.entries.at(ctx.singer_id),
                 emotion_base_embedding(ctx, emotion_table));
  return mean_all(square(sub(pred, target)));
}

void RunningMean::update(const Tensor& value) {
  if (!initialized) {
    mean = value;
    initialized = true;
    return;
  }
  for (std::int64_t i = 0; i < mean.numel(); ++i)
    mean.data[i] = momentum * mean.data[i] + (1.0 - momentum) * value.data[i];
}

}  // namespace musesvs
