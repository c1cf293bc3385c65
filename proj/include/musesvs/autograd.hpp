// musesvs/autograd.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_AUTOGRAD_HPP_
#define MUSESVS_AUTOGRAD_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "musesvs/tensor.hpp"

namespace musesvs {

// Reverse-mode tape over Tensor values. Forward ops execute eagerly and
// record a closure that pushes cotangents to their parents. Gradients are
// written into a per-call GradStore rather than into the nodes, so shared
// parameter leaves can participate in many independent graphs (one per
// sample) without cross-talk.

struct Node;
using NodePtr = std::shared_ptr<Node>;

class GradStore {
 public:
  // Returns the accumulator for `n`, zero-initialized at `shape` on first use.
  Tensor& acc(Node* n, const std::vector<int>& shape);
  const Tensor* find(const Node* n) const;
  std::unordered_map<const Node*, Tensor>& all() { return grads_; }

 private:
  std::unordered_map<const Node*, Tensor> grads_;
};

struct Node {
  Tensor value;
  std::vector<NodePtr> parents;
  std::function<void(Node&, const Tensor&, GradStore&)> backward;
  bool requires_grad = false;
  std::uint64_t seq = 0;  // creation order; descending order is a valid
                          // reverse-topological schedule
};

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr n) : n_(std::move(n)) {}

  bool defined() const { return n_ != nullptr; }
  const Tensor& value() const { return n_->value; }
  const NodePtr& node() const { return n_; }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  double item() const {
    check(value().numel() == 1, "item(): tensor is not scalar");
    return value().data[0];
  }

 private:
  NodePtr n_;
};

// Leaf construction.
Var leaf(Tensor value, bool requires_grad);
Var constant(Tensor value);
Var constant(double v);

// Generic op constructor for custom kernels.
Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&, const Tensor&, GradStore&)> backward);

// Runs the backward sweep from a scalar root (or with an explicit seed).
void backward(const Var& root, GradStore& gs, const Tensor* seed = nullptr);

// While a NoGradScope is alive ops record no tape; values only.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;
};
bool grad_enabled();

// ---- elementwise / linear algebra ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_rowvec(const Var& a, const Var& row);   // a: LxD, row: 1xD
Var scale(const Var& a, double c);
Var add_const(const Var& a, double c);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var relu(const Var& a);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var softplus(const Var& a);
Var abs_op(const Var& a);
Var square(const Var& a);

Var sum_all(const Var& a);    // -> 1x1
Var mean_all(const Var& a);   // -> 1x1
Var sum_to_row(const Var& a); // LxD -> 1xD
Var softmax_rows(const Var& a);
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               double eps = 1e-6);

// ---- structure ----
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int r0, int n);
Var gather_rows(const Var& table, std::vector<int> idx);
Var repeat_row(const Var& row, int n);
Var length_regulate_op(const Var& a, std::vector<int> durations);
Var reshape(const Var& a, std::vector<int> shape);
Var detach(const Var& a);

// ---- convolution lowering ----
// 1-D over rows of an LxC sequence, SAME zero padding.
Var im2col1d(const Var& x, int kernel, int dilation);
// 2-D over an {H, W, C} tensor -> {Ho*Wo, kh*kw*C}; SAME-style padding the
// caller computes. Output spatial dims are returned through out_h/out_w.
Var im2col2d(const Var& x, int kh, int kw, int sh, int sw, int ph, int pw,
             int* out_h, int* out_w);

Var dropout(const Var& x, double p, Rng& rng, bool training);

}  // namespace musesvs

#endif  // MUSESVS_AUTOGRAD_HPP_
