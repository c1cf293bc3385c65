// musesvs/embedding.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_EMBEDDING_HPP_
#define MUSESVS_EMBEDDING_HPP_

#include <string>
#include <vector>

#include "musesvs/nn.hpp"
#include "musesvs/score.hpp"

namespace musesvs {

// Sinusoidal positional encoding, PE(pos, 2i) = sin(pos / 10000^(2i/d)).
Tensor positional_encoding(int length, int dim);

// Per-phoneme joint embedding E(y_i, z_{<=k}). `stage` counts accumulated
// attributes: 0 = phoneme only, then singer, emotion, pitch, energy.
struct JointEmbeddingSeq {
  Var values;  // L x d
  int stage = 0;
};

constexpr int kNumAttributes = 4;

// E(y_i, z_{<=k}) = E(y_i, z_{<k}) + R(z_k | y_i, z_{<k}).
JointEmbeddingSeq accumulate_residual(const JointEmbeddingSeq& e,
                                      const Var& residual);

enum class TableKind { kSinger, kEmotion };

// Mean attribute embeddings E(z_k). The emotion table holds three entries
// in interpolated mode (neutral, happy_1.0, sad_1.0) and seven level-wise.
struct AttributeTable {
  TableKind kind = TableKind::kSinger;
  EmbeddingMode mode = EmbeddingMode::kInterpolated;
  std::vector<std::string> labels;
  std::vector<Var> entries;  // each 1 x d

  static AttributeTable singer_table(ParamStore& ps, int n_singers, int dim,
                                     Rng& rng);
  static AttributeTable emotion_table(ParamStore& ps, EmbeddingMode mode,
                                      int dim, Rng& rng);
  const Var& entry(const std::string& label) const;
  int index_of(const std::string& label) const;
};

// Base emotion embedding r_v for a context. Interpolated mode computes
// t * r_type_1.0 + (1 - t) * r_neutral and accepts any t >= 0 including
// extrapolation t > 1; level-wise mode looks up the exact trained level.
Var emotion_base_embedding(const AttributeContext& ctx,
                           const AttributeTable& table);

// Combines phoneme/pitch/duration embeddings: concatenation, one affine
// map to the model width, then positional encoding.
struct InputCombiner {
  Linear proj;  // 3*d_p -> d
  static InputCombiner create(ParamStore& ps, const std::string& prefix,
                              int d_embed, int d_model, Rng& rng);
  Var forward(const Var& phoneme_emb, const Var& pitch_emb,
              const Var& duration_emb) const;
};

// Residual attribute encoder R_hat_k(E(y_i, z_{<k}), cond). One conv layer
// (kernel 3), ReLU, then a zero-initialized affine output so stacks start
// at the identity joint embedding.
struct ResidualAttributeEncoder {
  Conv1d conv;
  Linear out;
  double dropout_p = 0.0;
  // cond may be 1 x d (table embeddings, broadcast over L) or L x d.
  Var forward(const Var& e_prev, const Var& cond, Rng* rng = nullptr,
              bool training = false) const;
  static ResidualAttributeEncoder create(ParamStore& ps,
                                         const std::string& prefix, int dim,
                                         int kernel, int filters, double dropout,
                                         Rng& rng);
};

}  // namespace musesvs

#endif  // MUSESVS_EMBEDDING_HPP_
