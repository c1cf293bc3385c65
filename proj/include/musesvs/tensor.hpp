// musesvs/tensor.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_TENSOR_HPP_
#define MUSESVS_TENSOR_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "musesvs/rng.hpp"

namespace musesvs {

[[noreturn]] inline void fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

// Contract violations (bad arguments, malformed inputs).
inline void check(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

// Numeric failures (non-finite values reaching a computation); kept
// distinct so callers can map them to the numeric-failure exit code.
inline void check_numeric(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

using MatMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

// Dense row-major tensor of doubles. Rank 1-3 in practice: sequences are
// (rows=positions, cols=features), spectrogram-like data is {H, W, C}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::initializer_list<int> s) : shape(s) { data.assign(numel(), 0.0); }
  explicit Tensor(const std::vector<int>& s) : shape(s) {
    data.assign(numel(), 0.0);
  }

  std::int64_t numel() const {
    std::int64_t n = shape.empty() ? 0 : 1;
    for (int d : shape) n *= d;
    return n;
  }

  int ndim() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& operator[](std::int64_t i) { return data[i]; }
  double operator[](std::int64_t i) const { return data[i]; }
  double& at(int i, int j) { return data[static_cast<std::int64_t>(i) * cols() + j]; }
  double at(int i, int j) const {
    return data[static_cast<std::int64_t>(i) * cols() + j];
  }

  MatMap mat() {
    check(ndim() == 2, "mat(): tensor is not rank 2");
    return MatMap(data.data(), shape[0], shape[1]);
  }
  ConstMatMap mat() const {
    check(ndim() == 2, "mat(): tensor is not rank 2");
    return ConstMatMap(data.data(), shape[0], shape[1]);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  static Tensor zeros(const std::vector<int>& s) { return Tensor(s); }

  static Tensor full(const std::vector<int>& s, double v) {
    Tensor t(s);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }

  static Tensor scalar(double v) {
    Tensor t({1, 1});
    t.data[0] = v;
    return t;
  }

  static Tensor randn(const std::vector<int>& s, Rng& rng, double stdev = 1.0) {
    Tensor t(s);
    for (auto& v : t.data) v = rng.normal(0.0, stdev);
    return t;
  }

  static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
    check(!rows.empty(), "from_rows: empty");
    Tensor t({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
    for (int i = 0; i < t.rows(); ++i) {
      check(static_cast<int>(rows[i].size()) == t.cols(),
            "from_rows: ragged rows");
      for (int j = 0; j < t.cols(); ++j) t.at(i, j) = rows[i][j];
    }
    return t;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + ")";
  }
};

double max_abs(const Tensor& t);
double l2_norm(const Tensor& t);
bool all_finite(const Tensor& t);

}  // namespace musesvs

#endif  // MUSESVS_TENSOR_HPP_
