// src/embedding.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/embedding.hpp"

#include <cmath>

namespace musesvs {

Tensor positional_encoding(int length, int dim) {
  check(length >= 1, "positional_encoding: length must be >= 1");
  check(dim >= 2 && dim % 2 == 0, "positional_encoding: dim must be even");
  Tensor pe({length, dim});
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double rate = std::pow(10000.0, 2.0 * i / dim);
      pe.at(pos, 2 * i) = std::sin(pos / rate);
      pe.at(pos, 2 * i + 1) = std::cos(pos / rate);
    }
  }
  return pe;
}

JointEmbeddingSeq accumulate_residual(const JointEmbeddingSeq& e,
                                      const Var& residual) {
  check(e.stage < kNumAttributes,
        "accumulate_residual: all attributes already accumulated");
  check(e.values.value().same_shape(residual.value()),
        "accumulate_residual: residual shape mismatch");
  return JointEmbeddingSeq{add(e.values, residual), e.stage + 1};
}

AttributeTable AttributeTable::singer_table(ParamStore& ps, int n_singers,
                                            int dim, Rng& rng) {
  check(n_singers >= 1, "singer table: need at least one singer");
  AttributeTable t;
  t.kind = TableKind::kSinger;
  for (int s = 0; s < n_singers; ++s) {
    t.labels.push_back("singer_" + std::to_string(s));
    t.entries.push_back(ps.create("tables.singer." + std::to_string(s),
                                  Tensor::randn({1, dim}, rng, 0.1)));
  }
  return t;
}

AttributeTable AttributeTable::emotion_table(ParamStore& ps,
                                             EmbeddingMode mode, int dim,
                                             Rng& rng) {
  AttributeTable t;
  t.kind = TableKind::kEmotion;
  t.mode = mode;
  std::vector<std::string> labels;
  if (mode == EmbeddingMode::kInterpolated) {
    labels = {"neutral", "happy_1.0", "sad_1.0"};
  } else {
    labels = {"neutral",  "happy_0.3", "happy_0.7", "happy_1.0",
              "sad_0.3",  "sad_0.7",   "sad_1.0"};
  }
  for (const auto& l : labels) {
    t.labels.push_back(l);
    t.entries.push_back(
        ps.create("tables.emotion." + l, Tensor::randn({1, dim}, rng, 0.1)));
  }
  return t;
}

int AttributeTable::index_of(const std::string& label) const {
  for (size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  fail("attribute table: no entry '" + label + "'");
}

const Var& AttributeTable::entry(const std::string& label) const {
  return entries[index_of(label)];
}

namespace {

std::string level_label(EmotionType type, double t) {
  if (t == 0.0 || type == EmotionType::kNeutral) return "neutral";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", t);
  return emotion_name(type) + "_" + buf;
}

}  // namespace

Var emotion_base_embedding(const AttributeContext& ctx,
                           const AttributeTable& table) {
  check(table.kind == TableKind::kEmotion,
        "emotion_base_embedding: wrong table kind");
  if (table.mode == EmbeddingMode::kLevelWise) {
    check(ctx.embedding_mode == EmbeddingMode::kLevelWise,
          "emotion_base_embedding: context/table mode mismatch");
    return table.entry(level_label(ctx.emotion_type, ctx.intensity));
  }
  const Var& neutral = table.entry("neutral");
  if (ctx.emotion_type == EmotionType::kNeutral || ctx.intensity == 0.0)
    return neutral;
  const Var& full = table.entry(emotion_name(ctx.emotion_type) + "_1.0");
  const double t = ctx.intensity;
  // t may exceed 1: extrapolation beyond the trained range.
  return add(scale(full, t), scale(neutral, 1.0 - t));
}

InputCombiner InputCombiner::create(ParamStore& ps, const std::string& prefix,
                                    int d_embed, int d_model, Rng& rng) {
  InputCombiner c;
  c.proj = Linear::create(ps, prefix + ".proj", 3 * d_embed, d_model, rng);
  return c;
}

Var InputCombiner::forward(const Var& phoneme_emb, const Var& pitch_emb,
                           const Var& duration_emb) const {
  check(phoneme_emb.rows() == pitch_emb.rows() &&
            phoneme_emb.rows() == duration_emb.rows(),
        "combine_inputs: row-count mismatch");
  Var low = proj.forward(concat_cols({phoneme_emb, pitch_emb, duration_emb}));
  Tensor pe = positional_encoding(low.rows(), low.cols());
  return add(low, constant(std::move(pe)));
}

ResidualAttributeEncoder ResidualAttributeEncoder::create(
    ParamStore& ps, const std::string& prefix, int dim, int kernel,
    int filters, double dropout, Rng& rng) {
  ResidualAttributeEncoder e;
  e.conv = Conv1d::create(ps, prefix + ".conv", 2 * dim, filters, kernel, 1, rng);
  e.out = Linear::create(ps, prefix + ".out", filters, dim, rng,
                         /*gain=*/1.0, /*zero_init=*/true);
  e.dropout_p = dropout;
  return e;
}

Var ResidualAttributeEncoder::forward(const Var& e_prev, const Var& cond,
                                      Rng* rng, bool training) const {
  Var c = cond;
  if (cond.rows() == 1 && e_prev.rows() > 1)
    c = repeat_row(cond, e_prev.rows());
  check(c.rows() == e_prev.rows() && c.cols() == e_prev.cols(),
        "residual encoder: conditioning shape mismatch");
  Var h = relu(conv.forward(concat_cols({e_prev, c})));
  if (training && rng) h = dropout(h, dropout_p, *rng, true);
  return out.forward(h);
}

}  // namespace musesvs
