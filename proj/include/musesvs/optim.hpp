// musesvs/optim.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_OPTIM_HPP_
#define MUSESVS_OPTIM_HPP_

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "musesvs/nn.hpp"

namespace musesvs {

// ADAM over a fixed subset of a ParamStore. Moment buffers are keyed by
// parameter name so they serialize with the checkpoint.
class Adam {
 public:
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;

  static Adam over(const ParamStore& ps,
                   const std::function<bool(const std::string&)>& filter);

  // Applies one update from `grads` at learning rate `lr`, clipping the
  // global grad norm of this parameter set to `clip_norm` (0 disables).
  void step(const GradStore& grads, double lr, double clip_norm = 1.0);

  int step_count() const { return t_; }
  void set_step_count(int t) { t_ = t; }

  const std::vector<std::pair<std::string, Var>>& params() const {
    return params_;
  }
  std::map<std::string, Tensor>& moment1() { return m_; }
  std::map<std::string, Tensor>& moment2() { return v_; }

  // Rounds parameters and moments to float32 precision. Called when a
  // checkpoint is written so a resumed run continues bit-identically to
  // the run that wrote it.
  void round_state_to_f32();

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::map<std::string, Tensor> m_, v_;
  int t_ = 0;
};

void round_tensor_to_f32(Tensor& t);

}  // namespace musesvs

#endif  // MUSESVS_OPTIM_HPP_
