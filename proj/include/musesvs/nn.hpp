// musesvs/nn.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_NN_HPP_
#define MUSESVS_NN_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "musesvs/autograd.hpp"

namespace musesvs {

// Ordered registry of named trainable leaves. Iteration order is the map
// order, which keeps optimizer traversal and checkpoints deterministic.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init);
  const std::map<std::string, Var>& all() const { return params_; }
  Var* find(const std::string& name);
  std::int64_t count() const;

 private:
  std::map<std::string, Var> params_;
};

Tensor xavier_uniform(const std::vector<int>& shape, int fan_in, int fan_out,
                      Rng& rng, double gain = 1.0);

struct Linear {
  Var W;  // in x out
  Var b;  // 1 x out
  static Linear create(ParamStore& ps, const std::string& prefix, int in,
                       int out, Rng& rng, double gain = 1.0,
                       bool zero_init = false);
  Var forward(const Var& x, bool frozen = false) const;
};

// 1-D convolution over sequence rows (LxC), SAME zero padding.
struct Conv1d {
  Var W;  // (C_in * kernel) x C_out
  Var b;
  int kernel = 1;
  int dilation = 1;
  static Conv1d create(ParamStore& ps, const std::string& prefix, int c_in,
                       int c_out, int kernel, int dilation, Rng& rng,
                       double gain = 1.0, bool zero_init = false);
  Var forward(const Var& x) const;
};

// 2-D convolution over {H, W, C} tensors, SAME-style zero padding derived
// from the kernel, arbitrary stride.
struct Conv2d {
  Var W;  // (kh * kw * C_in) x C_out
  Var b;
  int kh = 1, kw = 1, sh = 1, sw = 1, c_out = 1;
  static Conv2d create(ParamStore& ps, const std::string& prefix, int c_in,
                       int c_out, int kh, int kw, int sh, int sw, Rng& rng,
                       double gain = 1.0);
  Var forward(const Var& x, bool frozen = false) const;  // -> {Ho, Wo, C_out}
};

struct LayerNorm {
  Var gain;
  Var bias;
  static LayerNorm create(ParamStore& ps, const std::string& prefix, int dim);
  Var forward(const Var& x) const;
};

struct MultiHeadSelfAttention {
  int heads = 1;
  int dim = 0;
  int head_dim = 0;
  std::vector<Var> Wq, Wk, Wv;
  Var Wo, bo;
  static MultiHeadSelfAttention create(ParamStore& ps,
                                       const std::string& prefix, int dim,
                                       int heads, Rng& rng,
                                       double out_gain = 1.0);
  Var forward(const Var& x) const;
};

struct GruCell {
  int input = 0, hidden = 0;
  Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
  static GruCell create(ParamStore& ps, const std::string& prefix, int input,
                        int hidden, Rng& rng);
  Var forward(const Var& x, const Var& h) const;  // both 1 x dim
};

// Runs the cell over the rows of xs; returns the final hidden state.
Var gru_last_hidden(const GruCell& cell, const Var& xs);

struct Embedding {
  Var table;  // V x d
  static Embedding create(ParamStore& ps, const std::string& name, int vocab,
                          int dim, Rng& rng, double stdev = 0.1);
  Var forward(const std::vector<int>& idx) const;
};

}  // namespace musesvs

#endif  // MUSESVS_NN_HPP_
