// musesvs/arrayio.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_ARRAYIO_HPP_
#define MUSESVS_ARRAYIO_HPP_

#include <iosfwd>
#include <string>

#include "musesvs/tensor.hpp"

namespace musesvs {

// Portable array container: "MSVSARR1" magic, u32 rank, u32 dims, then
// little-endian float32 payload. Mel spectrograms are written with shape
// (T, n_mels); contours with shape (T, 1).
void save_array(const std::string& path, const Tensor& t);
Tensor load_array(const std::string& path);

void write_array(std::ostream& os, const Tensor& t);
Tensor read_array(std::istream& is);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// FNV-1a over bytes; used for config hashes in manifests and checkpoints.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace musesvs

#endif  // MUSESVS_ARRAYIO_HPP_
