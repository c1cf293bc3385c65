// musesvs/blocks.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_BLOCKS_HPP_
#define MUSESVS_BLOCKS_HPP_

#include <vector>

#include "musesvs/config.hpp"
#include "musesvs/embedding.hpp"
#include "musesvs/nn.hpp"

namespace musesvs {

struct MelSpectrogram {
  Tensor frames;  // T x n_mels
  double frame_rate = kFrameRate;

  int n_frames() const { return frames.rows(); }
  int n_mels() const { return frames.cols(); }
};

// Feed-forward Transformer block: self-attention sublayer, then a
// two-convolution feed-forward sublayer, post-norm residuals.
struct FftBlock {
  MultiHeadSelfAttention attn;
  LayerNorm ln_attn;
  Conv1d conv1;  // kernel 9
  Conv1d conv2;  // kernel 1
  LayerNorm ln_ff;
  double dropout_p = 0.0;

  static FftBlock create(ParamStore& ps, const std::string& prefix,
                         const ModelConfig& cfg, Rng& rng);
  Var forward(const Var& x, Rng* rng = nullptr, bool training = false) const;
};

// FFT variant whose feed-forward convolution is replaced by atrous spatial
// pyramid pooling: parallel dilated convs, wide filters at low rates,
// concatenated and fused by a kernel-1 conv.
struct AsppTransformerBlock {
  MultiHeadSelfAttention attn;
  LayerNorm ln_attn;
  std::vector<Conv1d> branches;
  Conv1d fuse;  // kernel 1, sum(branch filters) -> d
  LayerNorm ln_ff;
  double dropout_p = 0.0;

  static AsppTransformerBlock create(ParamStore& ps, const std::string& prefix,
                                     const ModelConfig& cfg, Rng& rng);
  Var forward(const Var& x, Rng* rng = nullptr, bool training = false) const;
};

struct Encoder {
  std::vector<FftBlock> blocks;
  static Encoder create(ParamStore& ps, const ModelConfig& cfg, Rng& rng);
  // low_level -> initial phoneme embedding E(y_i), stage 0.
  JointEmbeddingSeq forward(const Var& low_level, Rng* rng = nullptr,
                            bool training = false) const;
};

struct Decoder {
  bool use_fft = false;
  std::vector<AsppTransformerBlock> aspp_blocks;
  std::vector<FftBlock> fft_blocks;
  Linear mel_head;  // d -> n_mels

  static Decoder create(ParamStore& ps, const ModelConfig& cfg, Rng& rng);
  // Frame-aligned joint embeddings (T x d) -> mel frames (T x n_mels).
  Var forward(const Var& frames, Rng* rng = nullptr,
              bool training = false) const;
};

// Repeats row i of `e` durations[i] times; output has sum(durations) rows.
Var length_regulate(const Var& e, const std::vector<int>& durations);

// Patch discriminator over the mel treated as a single-channel 2-D image.
struct Discriminator {
  std::vector<Conv2d> convs;
  Conv2d score;  // 1x1 conv to a single score channel

  static Discriminator create(ParamStore& ps, const ModelConfig& cfg,
                              Rng& rng);
  // mel: T x n_mels. `frozen` detaches the discriminator parameters so the
  // generator loss cannot reach them.
  Var forward(const Var& mel, bool frozen = false) const;
};

// L1 norm of d(sum over mel bins of output frame `out_index`) / d(input
// frame j), for every input frame j.
std::vector<double> erf_probe(const Decoder& decoder, const Tensor& e_frames,
                              int out_index);

// Width of the smallest window around `center` holding `mass_fraction` of
// the profile's total mass (greedy two-sided expansion).
int gradient_mass_width(const std::vector<double>& profile, int center,
                        double mass_fraction = 0.9);

}  // namespace musesvs

#endif  // MUSESVS_BLOCKS_HPP_
