// src/nn.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/nn.hpp"

#include <cmath>

namespace musesvs {

Var ParamStore::create(const std::string& name, Tensor init) {
  check(params_.find(name) == params_.end(),
        "ParamStore: duplicate parameter " + name);
  Var v = leaf(std::move(init), true);
  params_.emplace(name, v);
  return v;
}

Var* ParamStore::find(const std::string& name) {
  auto it = params_.find(name);
  return it == params_.end() ? nullptr : &it->second;
}

std::int64_t ParamStore::count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : params_) n += v.value().numel();
  return n;
}

Tensor xavier_uniform(const std::vector<int>& shape, int fan_in, int fan_out,
                      Rng& rng, double gain) {
  const double a = gain * std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(shape);
  for (auto& v : t.data) v = rng.uniform(-a, a);
  return t;
}

Linear Linear::create(ParamStore& ps, const std::string& prefix, int in,
                      int out, Rng& rng, double gain, bool zero_init) {
  Linear l;
  Tensor w = zero_init ? Tensor({in, out})
                       : xavier_uniform({in, out}, in, out, rng, gain);
  l.W = ps.create(prefix + ".w", std::move(w));
  l.b = ps.create(prefix + ".b", Tensor({1, out}));
  return l;
}

Var Linear::forward(const Var& x, bool frozen) const {
  const Var w = frozen ? detach(W) : W;
  const Var bias = frozen ? detach(b) : b;
  return add_rowvec(matmul(x, w), bias);
}

Conv1d Conv1d::create(ParamStore& ps, const std::string& prefix, int c_in,
                      int c_out, int kernel, int dilation, Rng& rng,
                      double gain, bool zero_init) {
  Conv1d c;
  c.kernel = kernel;
  c.dilation = dilation;
  const int fan_in = c_in * kernel;
  Tensor w = zero_init ? Tensor({fan_in, c_out})
                       : xavier_uniform({fan_in, c_out}, fan_in, c_out, rng,
                                        gain);
  c.W = ps.create(prefix + ".w", std::move(w));
  c.b = ps.create(prefix + ".b", Tensor({1, c_out}));
  return c;
}

Var Conv1d::forward(const Var& x) const {
  return add_rowvec(matmul(im2col1d(x, kernel, dilation), W), b);
}

Conv2d Conv2d::create(ParamStore& ps, const std::string& prefix, int c_in,
                      int c_out, int kh, int kw, int sh, int sw, Rng& rng,
                      double gain) {
  Conv2d c;
  c.kh = kh;
  c.kw = kw;
  c.sh = sh;
  c.sw = sw;
  c.c_out = c_out;
  const int fan_in = kh * kw * c_in;
  c.W = ps.create(prefix + ".w",
                  xavier_uniform({fan_in, c_out}, fan_in, c_out, rng, gain));
  // Small positive bias keeps pre-activations off the ReLU kink in
  // zero-padded regions.
  c.b = ps.create(prefix + ".b", Tensor::full({1, c_out}, 0.01));
  return c;
}

Var Conv2d::forward(const Var& x, bool frozen) const {
  int ho = 0, wo = 0;
  Var cols = im2col2d(x, kh, kw, sh, sw, kh / 2, kw / 2, &ho, &wo);
  const Var w = frozen ? detach(W) : W;
  const Var bias = frozen ? detach(b) : b;
  Var y = add_rowvec(matmul(cols, w), bias);
  return reshape(y, {ho, wo, c_out});
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& prefix,
                            int dim) {
  LayerNorm ln;
  ln.gain = ps.create(prefix + ".g", Tensor::full({1, dim}, 1.0));
  ln.bias = ps.create(prefix + ".b", Tensor({1, dim}));
  return ln;
}

Var LayerNorm::forward(const Var& x) const {
  return layer_norm(x, gain, bias);
}

MultiHeadSelfAttention MultiHeadSelfAttention::create(
    ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng,
    double out_gain) {
  check(dim % heads == 0, "attention: dim must divide by heads");
  MultiHeadSelfAttention a;
  a.heads = heads;
  a.dim = dim;
  a.head_dim = dim / heads;
  for (int h = 0; h < heads; ++h) {
    const std::string hp = prefix + ".h" + std::to_string(h);
    a.Wq.push_back(ps.create(
        hp + ".wq", xavier_uniform({dim, a.head_dim}, dim, a.head_dim, rng)));
    a.Wk.push_back(ps.create(
        hp + ".wk", xavier_uniform({dim, a.head_dim}, dim, a.head_dim, rng)));
    a.Wv.push_back(ps.create(
        hp + ".wv", xavier_uniform({dim, a.head_dim}, dim, a.head_dim, rng)));
  }
  a.Wo = ps.create(prefix + ".wo",
                   xavier_uniform({dim, dim}, dim, dim, rng, out_gain));
  a.bo = ps.create(prefix + ".bo", Tensor({1, dim}));
  return a;
}

Var MultiHeadSelfAttention::forward(const Var& x) const {
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Var> outs;
  outs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    Var q = matmul(x, Wq[h]);
    Var k = matmul(x, Wk[h]);
    Var v = matmul(x, Wv[h]);
    Var attn = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt));
    outs.push_back(matmul(attn, v));
  }
  Var cat = heads == 1 ? outs[0] : concat_cols(outs);
  return add_rowvec(matmul(cat, Wo), bo);
}

GruCell GruCell::create(ParamStore& ps, const std::string& prefix, int input,
                        int hidden, Rng& rng) {
  GruCell c;
  c.input = input;
  c.hidden = hidden;
  auto w_in = [&](const char* n) {
    return ps.create(prefix + "." + n,
                     xavier_uniform({input, hidden}, input, hidden, rng));
  };
  auto w_h = [&](const char* n) {
    return ps.create(prefix + "." + n,
                     xavier_uniform({hidden, hidden}, hidden, hidden, rng));
  };
  auto bias = [&](const char* n) {
    return ps.create(prefix + "." + n, Tensor({1, hidden}));
  };
  c.Wz = w_in("wz");
  c.Uz = w_h("uz");
  c.bz = bias("bz");
  c.Wr = w_in("wr");
  c.Ur = w_h("ur");
  c.br = bias("br");
  c.Wh = w_in("wh");
  c.Uh = w_h("uh");
  c.bh = bias("bh");
  return c;
}

Var GruCell::forward(const Var& x, const Var& h) const {
  Var z = sigmoid(add(add(matmul(x, Wz), matmul(h, Uz)), bz));
  Var r = sigmoid(add(add(matmul(x, Wr), matmul(h, Ur)), br));
  Var cand = tanh_op(add(add(matmul(x, Wh), matmul(mul(r, h), Uh)), bh));
  return add(h, mul(z, sub(cand, h)));
}

Var gru_last_hidden(const GruCell& cell, const Var& xs) {
  Var h = constant(Tensor({1, cell.hidden}));
  for (int i = 0; i < xs.rows(); ++i)
    h = cell.forward(slice_rows(xs, i, 1), h);
  return h;
}

Embedding Embedding::create(ParamStore& ps, const std::string& name, int vocab,
                            int dim, Rng& rng, double stdev) {
  Embedding e;
  e.table = ps.create(name, Tensor::randn({vocab, dim}, rng, stdev));
  return e;
}

Var Embedding::forward(const std::vector<int>& idx) const {
  return gather_rows(table, idx);
}

}  // namespace musesvs
