// src/autograd.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <unordered_set>

namespace musesvs {

namespace {

std::atomic<std::uint64_t> g_seq{1};
thread_local int g_no_grad_depth = 0;

NodePtr new_node(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->seq = g_seq.fetch_add(1, std::memory_order_relaxed);
  return n;
}

bool any_requires_grad(const std::vector<Var>& vs) {
  for (const auto& v : vs)
    if (v.requires_grad()) return true;
  return false;
}

}  // namespace

NoGradScope::NoGradScope() { ++g_no_grad_depth; }
NoGradScope::~NoGradScope() { --g_no_grad_depth; }
bool grad_enabled() { return g_no_grad_depth == 0; }

Tensor& GradStore::acc(Node* n, const std::vector<int>& shape) {
  auto it = grads_.find(n);
  if (it == grads_.end()) it = grads_.emplace(n, Tensor(shape)).first;
  return it->second;
}

const Tensor* GradStore::find(const Node* n) const {
  auto it = grads_.find(n);
  return it == grads_.end() ? nullptr : &it->second;
}

Var leaf(Tensor value, bool requires_grad) {
  auto n = new_node(std::move(value));
  n->requires_grad = requires_grad;
  return Var(n);
}

Var constant(Tensor value) { return leaf(std::move(value), false); }
Var constant(double v) { return leaf(Tensor::scalar(v), false); }

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&, const Tensor&, GradStore&)> backward) {
  auto n = new_node(std::move(value));
  if (grad_enabled() && any_requires_grad(parents)) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Var(n);
}

void backward(const Var& root, GradStore& gs, const Tensor* seed) {
  check(root.defined() && root.requires_grad(),
        "backward: root does not require grad");
  Tensor s;
  if (seed) {
    check(seed->shape == root.value().shape, "backward: seed shape mismatch");
    s = *seed;
  } else {
    check(root.value().numel() == 1, "backward: non-scalar root needs a seed");
    s = Tensor::full(root.value().shape, 1.0);
  }

  // Collect the reachable differentiable subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second)
        stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->seq > b->seq; });

  Tensor& rg = gs.acc(root.node().get(), root.value().shape);
  for (std::int64_t i = 0; i < s.numel(); ++i) rg.data[i] += s.data[i];

  for (Node* n : order) {
    if (!n->backward) continue;
    const Tensor* g = gs.find(n);
    if (!g) continue;  // no cotangent reached this node
    n->backward(*n, *g, gs);
  }
}

namespace {

// Accumulates `g` into the store slot of parent `p` if it requires grad.
void push(GradStore& gs, const NodePtr& p, const Tensor& g) {
  if (!p->requires_grad) return;
  Tensor& acc = gs.acc(p.get(), p->value.shape);
  for (std::int64_t i = 0; i < g.numel(); ++i) acc.data[i] += g.data[i];
}

}  // namespace

Var add(const Var& a, const Var& b) {
  check(a.value().same_shape(b.value()),
        "add: shape mismatch " + a.value().shape_str() + " vs " +
            b.value().shape_str());
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] += b.value().data[i];
  return make_op(std::move(out), {a, b},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   push(gs, n.parents[0], g);
                   push(gs, n.parents[1], g);
                 });
}

Var sub(const Var& a, const Var& b) {
  check(a.value().same_shape(b.value()), "sub: shape mismatch");
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] -= b.value().data[i];
  return make_op(std::move(out), {a, b},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   push(gs, n.parents[0], g);
                   if (n.parents[1]->requires_grad) {
                     Tensor neg = g;
                     for (auto& v : neg.data) v = -v;
                     push(gs, n.parents[1], neg);
                   }
                 });
}

Var mul(const Var& a, const Var& b) {
  check(a.value().same_shape(b.value()), "mul: shape mismatch");
  Tensor out = a.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] *= b.value().data[i];
  return make_op(std::move(out), {a, b},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   if (n.parents[0]->requires_grad) {
                     Tensor ga = g;
                     for (std::int64_t i = 0; i < ga.numel(); ++i)
                       ga.data[i] *= n.parents[1]->value.data[i];
                     push(gs, n.parents[0], ga);
                   }
                   if (n.parents[1]->requires_grad) {
                     Tensor gb = g;
                     for (std::int64_t i = 0; i < gb.numel(); ++i)
                       gb.data[i] *= n.parents[0]->value.data[i];
                     push(gs, n.parents[1], gb);
                   }
                 });
}

Var add_rowvec(const Var& a, const Var& row) {
  check(a.value().ndim() == 2 && row.value().ndim() == 2 &&
            row.value().rows() == 1 && row.value().cols() == a.value().cols(),
        "add_rowvec: incompatible shapes");
  Tensor out = a.value();
  const int L = out.rows(), D = out.cols();
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < D; ++j) out.at(i, j) += row.value().at(0, j);
  return make_op(std::move(out), {a, row},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   push(gs, n.parents[0], g);
                   if (n.parents[1]->requires_grad) {
                     Tensor gr({1, g.cols()});
                     for (int i = 0; i < g.rows(); ++i)
                       for (int j = 0; j < g.cols(); ++j)
                         gr.at(0, j) += g.at(i, j);
                     push(gs, n.parents[1], gr);
                   }
                 });
}

Var scale(const Var& a, double c) {
  Tensor out = a.value();
  for (auto& v : out.data) v *= c;
  return make_op(std::move(out), {a},
                 [c](Node& n, const Tensor& g, GradStore& gs) {
                   Tensor ga = g;
                   for (auto& v : ga.data) v *= c;
                   push(gs, n.parents[0], ga);
                 });
}

Var add_const(const Var& a, double c) {
  Tensor out = a.value();
  for (auto& v : out.data) v += c;
  return make_op(std::move(out), {a},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   push(gs, n.parents[0], g);
                 });
}

Var matmul(const Var& a, const Var& b) {
  check(a.value().ndim() == 2 && b.value().ndim() == 2 &&
            a.value().cols() == b.value().rows(),
        "matmul: incompatible shapes " + a.value().shape_str() + " x " +
            b.value().shape_str());
  Tensor out({a.value().rows(), b.value().cols()});
  out.mat().noalias() = a.value().mat() * b.value().mat();
  return make_op(
      std::move(out), {a, b}, [](Node& n, const Tensor& g, GradStore& gs) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
          Tensor& ga = gs.acc(n.parents[0].get(), av.shape);
          ga.mat().noalias() += g.mat() * bv.mat().transpose();
        }
        if (n.parents[1]->requires_grad) {
          Tensor& gb = gs.acc(n.parents[1].get(), bv.shape);
          gb.mat().noalias() += av.mat().transpose() * g.mat();
        }
      });
}

Var transpose(const Var& a) {
  const Tensor& av = a.value();
  check(av.ndim() == 2, "transpose: rank 2 only");
  Tensor out({av.cols(), av.rows()});
  out.mat() = av.mat().transpose();
  return make_op(std::move(out), {a},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   if (!n.parents[0]->requires_grad) return;
                   Tensor& ga =
                       gs.acc(n.parents[0].get(), n.parents[0]->value.shape);
                   ga.mat() += g.mat().transpose();
                 });
}

namespace {

template <class Fwd, class Dfn>
Var unary_op(const Var& a, Fwd f, Dfn dfn) {
  Tensor out = a.value();
  for (auto& v : out.data) v = f(v);
  Tensor saved = out;  // some derivatives are cheaper from the output
  return make_op(std::move(out), {a},
                 [dfn, saved](Node& n, const Tensor& g, GradStore& gs) {
                   if (!n.parents[0]->requires_grad) return;
                   Tensor ga = g;
                   const Tensor& x = n.parents[0]->value;
                   for (std::int64_t i = 0; i < ga.numel(); ++i)
                     ga.data[i] *= dfn(x.data[i], saved.data[i]);
                   push(gs, n.parents[0], ga);
                 });
}

}  // namespace

Var relu(const Var& a) {
  return unary_op(
      a, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh_op(const Var& a) {
  return unary_op(
      a, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
  return unary_op(
      a, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus(const Var& a) {
  return unary_op(
      a,
      [](double v) {
        // log(1+e^v) without overflow
        return v > 30.0 ? v : std::log1p(std::exp(v));
      },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var abs_op(const Var& a) {
  return unary_op(
      a, [](double v) { return std::fabs(v); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(const Var& a) {
  return unary_op(
      a, [](double v) { return v * v; },
      [](double x, double) { return 2.0 * x; });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  return make_op(Tensor::scalar(s), {a},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   if (!n.parents[0]->requires_grad) return;
                   Tensor ga = Tensor::full(n.parents[0]->value.shape,
                                            g.data[0]);
                   push(gs, n.parents[0], ga);
                 });
}

Var mean_all(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a.value().numel());
  return scale(sum_all(a), inv);
}

Var sum_to_row(const Var& a) {
  const Tensor& av = a.value();
  check(av.ndim() == 2, "sum_to_row: rank 2 only");
  Tensor out({1, av.cols()});
  for (int i = 0; i < av.rows(); ++i)
    for (int j = 0; j < av.cols(); ++j) out.at(0, j) += av.at(i, j);
  return make_op(std::move(out), {a},
                 [](Node& n, const Tensor& g, GradStore& gs) {
                   if (!n.parents[0]->requires_grad) return;
                   const Tensor& av = n.parents[0]->value;
                   Tensor ga(av.shape);
                   for (int i = 0; i < av.rows(); ++i)
                     for (int j = 0; j < av.cols(); ++j)
                       ga.at(i, j) = g.at(0, j);
                   push(gs, n.parents[0], ga);
                 });
}

Var softmax_rows(const Var& a) {
  const Tensor& av = a.value();
  check(av.ndim() == 2, "softmax_rows: rank 2 only");
  Tensor out = av;
  for (int i = 0; i < av.rows(); ++i) {
    double m = -1e300;
    for (int j = 0; j < av.cols(); ++j) m = std::max(m, av.at(i, j));
    double z = 0.0;
    for (int j = 0; j < av.cols(); ++j) {
      out.at(i, j) = std::exp(av.at(i, j) - m);
      z += out.at(i, j);
    }
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) /= z;
  }
  Tensor y = out;
  return make_op(std::move(out), {a},
                 [y](Node& n, const Tensor& g, GradStore& gs) {
                   if (!n.parents[0]->requires_grad) return;
                   Tensor ga(y.shape);
                   for (int i = 0; i < y.rows(); ++i) {
                     double dot = 0.0;
                     for (int j = 0; j < y.cols(); ++j)
                       dot += g.at(i, j) * y.at(i, j);
                     for (int j = 0; j < y.cols(); ++j)
                       ga.at(i, j) = y.at(i, j) * (g.at(i, j) - dot);
                   }
                   push(gs, n.parents[0], ga);
                 });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Tensor& xv = x.value();
  check(xv.ndim() == 2, "layer_norm: rank 2 only");
  check(gain.value().rows() == 1 && gain.value().cols() == xv.cols() &&
            bias.value().rows() == 1 && bias.value().cols() == xv.cols(),
        "layer_norm: gain/bias must be 1xD");
  const int L = xv.rows(), D = xv.cols();
  Tensor xhat({L, D});
  Tensor inv_std({L, 1});
  Tensor out({L, D});
  for (int i = 0; i < L; ++i) {
    double mu = 0.0;
    for (int j = 0; j < D; ++j) mu += xv.at(i, j);
    mu /= D;
    double var = 0.0;
    for (int j = 0; j < D; ++j) {
      const double c = xv.at(i, j) - mu;
      var += c * c;
    }
    var /= D;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std.at(i, 0) = is;
    for (int j = 0; j < D; ++j) {
      xhat.at(i, j) = (xv.at(i, j) - mu) * is;
      out.at(i, j) = xhat.at(i, j) * gain.value().at(0, j) +
                     bias.value().at(0, j);
    }
  }
  return make_op(
      std::move(out), {x, gain, bias},
      [xhat, inv_std](Node& n, const Tensor& g, GradStore& gs) {
        const int L = xhat.rows(), D = xhat.cols();
        const Tensor& gv = n.parents[1]->value;
        if (n.parents[1]->requires_grad) {
          Tensor gg({1, D});
          for (int i = 0; i < L; ++i)
            for (int j = 0; j < D; ++j) gg.at(0, j) += g.at(i, j) * xhat.at(i, j);
          push(gs, n.parents[1], gg);
        }
        if (n.parents[2]->requires_grad) {
          Tensor gb({1, D});
          for (int i = 0; i < L; ++i)
            for (int j = 0; j < D; ++j) gb.at(0, j) += g.at(i, j);
          push(gs, n.parents[2], gb);
        }
        if (n.parents[0]->requires_grad) {
          Tensor gx({L, D});
          for (int i = 0; i < L; ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (int j = 0; j < D; ++j) {
              const double dxh = g.at(i, j) * gv.at(0, j);
              m1 += dxh;
              m2 += dxh * xhat.at(i, j);
            }
            m1 /= D;
            m2 /= D;
            for (int j = 0; j < D; ++j) {
              const double dxh = g.at(i, j) * gv.at(0, j);
              gx.at(i, j) =
                  inv_std.at(i, 0) * (dxh - m1 - xhat.at(i, j) * m2);
            }
          }
          push(gs, n.parents[0], gx);
        }
      });
}

Var concat_cols(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_cols: empty");
  const int L = parts[0].value().rows();
  int D = 0;
  for (const auto& p : parts) {
    check(p.value().ndim() == 2 && p.value().rows() == L,
          "concat_cols: row mismatch");
    D += p.value().cols();
  }
  Tensor out({L, D});
  int off = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    offsets.push_back(off);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < p.value().cols(); ++j)
        out.at(i, off + j) = p.value().at(i, j);
    off += p.value().cols();
  }
  return make_op(std::move(out), parts,
                 [offsets](Node& n, const Tensor& g, GradStore& gs) {
                   for (size_t k = 0; k < n.parents.size(); ++k) {
                     const auto& p = n.parents[k];
                     if (!p->requires_grad) continue;
                     const int c = p->value.cols();
                     Tensor gp(p->value.shape);
                     for (int i = 0; i < g.rows(); ++i)
                       for (int j = 0; j < c; ++j)
                         gp.at(i, j) = g.at(i, offsets[k] + j);
                     push(gs, p, gp);
                   }
                 });
}

Var concat_rows(const std::vector<Var>& parts) {
  check(!parts.empty(), "concat_rows: empty");
  const int D = parts[0].value().cols();
  int L = 0;
  for (const auto& p : parts) {
    check(p.value().ndim() == 2 && p.value().cols() == D,
          "concat_rows: col mismatch");
    L += p.value().rows();
  }
  Tensor out({L, D});
  int off = 0;
  std::vector<int> offsets;
  for (const auto& p : parts) {
    offsets.push_back(off);
    for (int i = 0; i < p.value().rows(); ++i)
      for (int j = 0; j < D; ++j) out.at(off + i, j) = p.value().at(i, j);
    off += p.value().rows();
  }
  return make_op(std::move(out), parts,
                 [offsets](Node& n, const Tensor& g, GradStore& gs) {
                   for (size_t k = 0; k < n.parents.size(); ++k) {
                     const auto& p = n.parents[k];
                     if (!p->requires_grad) continue;
                     Tensor gp(p->value.shape);
                     for (int i = 0; i < p->value.rows(); ++i)
                       for (int j = 0; j < g.cols(); ++j)
                         gp.at(i, j) = g.at(offsets[k] + i, j);
                     push(gs, p, gp);
                   }
                 });
}

Var slice_rows(const Var& a, int r0, int n) {
  const Tensor& av = a.value();
  check(av.ndim() == 2 && r0 >= 0 && n >= 1 && r0 + n <= av.rows(),
        "slice_rows: out of range");
  Tensor out({n, av.cols()});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(r0 + i, j);
  return make_op(std::move(out), {a},
                 [r0](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   Tensor& ga = gs.acc(p.get(), p->value.shape);
                   for (int i = 0; i < g.rows(); ++i)
                     for (int j = 0; j < g.cols(); ++j)
                       ga.at(r0 + i, j) += g.at(i, j);
                 });
}

Var gather_rows(const Var& table, std::vector<int> idx) {
  const Tensor& tv = table.value();
  check(tv.ndim() == 2, "gather_rows: table must be rank 2");
  Tensor out({static_cast<int>(idx.size()), tv.cols()});
  for (size_t i = 0; i < idx.size(); ++i) {
    check(idx[i] >= 0 && idx[i] < tv.rows(), "gather_rows: index out of range");
    for (int j = 0; j < tv.cols(); ++j)
      out.at(static_cast<int>(i), j) = tv.at(idx[i], j);
  }
  return make_op(std::move(out), {table},
                 [idx](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   Tensor& gt = gs.acc(p.get(), p->value.shape);
                   for (size_t i = 0; i < idx.size(); ++i)
                     for (int j = 0; j < g.cols(); ++j)
                       gt.at(idx[i], j) += g.at(static_cast<int>(i), j);
                 });
}

Var repeat_row(const Var& row, int n) {
  const Tensor& rv = row.value();
  check(rv.ndim() == 2 && rv.rows() == 1, "repeat_row: expects 1xD");
  Tensor out({n, rv.cols()});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rv.cols(); ++j) out.at(i, j) = rv.at(0, j);
  return make_op(std::move(out), {row},
                 [](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   Tensor gr({1, g.cols()});
                   for (int i = 0; i < g.rows(); ++i)
                     for (int j = 0; j < g.cols(); ++j)
                       gr.at(0, j) += g.at(i, j);
                   push(gs, p, gr);
                 });
}

Var length_regulate_op(const Var& a, std::vector<int> durations) {
  const Tensor& av = a.value();
  check(av.ndim() == 2, "length_regulate: rank 2 only");
  check(static_cast<int>(durations.size()) == av.rows(),
        "length_regulate: durations must match rows");
  std::int64_t total = 0;
  for (int d : durations) {
    check(d >= 1, "length_regulate: durations must be >= 1");
    total += d;
  }
  Tensor out({static_cast<int>(total), av.cols()});
  int t = 0;
  for (int i = 0; i < av.rows(); ++i)
    for (int r = 0; r < durations[i]; ++r, ++t)
      for (int j = 0; j < av.cols(); ++j) out.at(t, j) = av.at(i, j);
  return make_op(std::move(out), {a},
                 [durations](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   Tensor& ga = gs.acc(p.get(), p->value.shape);
                   int t = 0;
                   for (int i = 0; i < p->value.rows(); ++i)
                     for (int r = 0; r < durations[i]; ++r, ++t)
                       for (int j = 0; j < g.cols(); ++j)
                         ga.at(i, j) += g.at(t, j);
                 });
}

Var reshape(const Var& a, std::vector<int> shape) {
  Tensor out(shape);
  check(out.numel() == a.value().numel(), "reshape: element count mismatch");
  out.data = a.value().data;
  return make_op(std::move(out), {a},
                 [](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   Tensor ga(p->value.shape);
                   ga.data = g.data;
                   push(gs, p, ga);
                 });
}

Var detach(const Var& a) { return constant(a.value()); }

Var im2col1d(const Var& x, int kernel, int dilation) {
  const Tensor& xv = x.value();
  check(xv.ndim() == 2, "im2col1d: rank 2 only");
  check(kernel >= 1 && kernel % 2 == 1, "im2col1d: kernel must be odd");
  check(dilation >= 1, "im2col1d: dilation must be >= 1");
  const int L = xv.rows(), C = xv.cols();
  const int half = kernel / 2;
  Tensor out({L, C * kernel});
  for (int i = 0; i < L; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const int src = i + (k - half) * dilation;
      if (src < 0 || src >= L) continue;
      for (int c = 0; c < C; ++c) out.at(i, k * C + c) = xv.at(src, c);
    }
  }
  return make_op(std::move(out), {x},
                 [kernel, dilation](Node& nd, const Tensor& g, GradStore& gs) {
                   const auto& p = nd.parents[0];
                   if (!p->requires_grad) return;
                   const int L = p->value.rows(), C = p->value.cols();
                   const int half = kernel / 2;
                   Tensor& gx = gs.acc(p.get(), p->value.shape);
                   for (int i = 0; i < L; ++i) {
                     for (int k = 0; k < kernel; ++k) {
                       const int src = i + (k - half) * dilation;
                       if (src < 0 || src >= L) continue;
                       for (int c = 0; c < C; ++c)
                         gx.at(src, c) += g.at(i, k * C + c);
                     }
                   }
                 });
}

Var im2col2d(const Var& x, int kh, int kw, int sh, int sw, int ph, int pw,
             int* out_h, int* out_w) {
  const Tensor& xv = x.value();
  check(xv.ndim() == 3, "im2col2d: expects {H, W, C}");
  const int H = xv.shape[0], W = xv.shape[1], C = xv.shape[2];
  const int Ho = (H + 2 * ph - kh) / sh + 1;
  const int Wo = (W + 2 * pw - kw) / sw + 1;
  check(Ho >= 1 && Wo >= 1, "im2col2d: kernel larger than padded input");
  if (out_h) *out_h = Ho;
  if (out_w) *out_w = Wo;
  Tensor out({Ho * Wo, kh * kw * C});
  auto xat = [&](int h, int w, int c) {
    return xv.data[(static_cast<std::int64_t>(h) * W + w) * C + c];
  };
  for (int oh = 0; oh < Ho; ++oh) {
    for (int ow = 0; ow < Wo; ++ow) {
      const int r = oh * Wo + ow;
      for (int i = 0; i < kh; ++i) {
        const int h = oh * sh - ph + i;
        if (h < 0 || h >= H) continue;
        for (int j = 0; j < kw; ++j) {
          const int w = ow * sw - pw + j;
          if (w < 0 || w >= W) continue;
          for (int c = 0; c < C; ++c)
            out.at(r, (i * kw + j) * C + c) = xat(h, w, c);
        }
      }
    }
  }
  auto bw = [kh, kw, sh, sw, ph, pw, Ho, Wo](Node& nd, const Tensor& g,
                                             GradStore& gs) {
    const auto& p = nd.parents[0];
    if (!p->requires_grad) return;
    const int H = p->value.shape[0], W = p->value.shape[1],
              C = p->value.shape[2];
    Tensor& gx = gs.acc(p.get(), p->value.shape);
    for (int oh = 0; oh < Ho; ++oh) {
      for (int ow = 0; ow < Wo; ++ow) {
        const int r = oh * Wo + ow;
        for (int i = 0; i < kh; ++i) {
          const int h = oh * sh - ph + i;
          if (h < 0 || h >= H) continue;
          for (int j = 0; j < kw; ++j) {
            const int w = ow * sw - pw + j;
            if (w < 0 || w >= W) continue;
            for (int c = 0; c < C; ++c)
              gx.data[(static_cast<std::int64_t>(h) * W + w) * C + c] +=
                  g.at(r, (i * kw + j) * C + c);
          }
        }
      }
    }
  };
  return make_op(std::move(out), {x}, bw);
}

Var dropout(const Var& x, double p, Rng& rng, bool training) {
  if (!training || p <= 0.0) return x;
  check(p < 1.0, "dropout: p must be < 1");
  const double keep = 1.0 - p;
  Tensor mask(x.value().shape);
  for (auto& m : mask.data) m = (rng.uniform() < keep) ? 1.0 / keep : 0.0;
  Tensor out = x.value();
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] *= mask.data[i];
  return make_op(std::move(out), {x},
                 [mask](Node& nd, const Tensor& g, GradStore& gs) {
                   if (!nd.parents[0]->requires_grad) return;
                   Tensor ga = g;
                   for (std::int64_t i = 0; i < ga.numel(); ++i)
                     ga.data[i] *= mask.data[i];
                   push(gs, nd.parents[0], ga);
                 });
}

}  // namespace musesvs
