// musesvs/checkpoint.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_CHECKPOINT_HPP_
#define MUSESVS_CHECKPOINT_HPP_

#include <array>
#include <map>
#include <string>

#include "musesvs/optim.hpp"

namespace musesvs {

struct CheckpointMeta {
  int step = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::array<std::uint64_t, 4> rng_state{};
  int adam_g_step = 0;
  int adam_d_step = 0;
  std::string preset = "toy";
  std::string extra_json;  // free-form block carried along verbatim
};

// Single-file container: named parameter arrays as little-endian float32
// plus a JSON metadata block. Writing a checkpoint rounds the in-memory
// parameters and optimizer moments to float32 so that a resumed run
// replays the continuing run bit-identically.
void save_checkpoint(const std::string& path, const ParamStore& ps,
                     Adam* opt_g, Adam* opt_d, CheckpointMeta meta);

// Loads arrays into an existing ParamStore (shapes must match). Optimizer
// moment buffers are restored when the optimizers are supplied.
CheckpointMeta load_checkpoint(const std::string& path, ParamStore& ps,
                               Adam* opt_g = nullptr, Adam* opt_d = nullptr);

// Reads only the metadata block.
CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace musesvs

#endif  // MUSESVS_CHECKPOINT_HPP_
