// musesvs/model.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_MODEL_HPP_
#define MUSESVS_MODEL_HPP_

#include <memory>

#include "musesvs/adaptor.hpp"
#include "musesvs/style.hpp"

namespace musesvs {

// The complete acoustic model: input embeddings -> encoder -> variance
// adaptor -> length regulator -> decoder, plus the discriminator and the
// style reference encoder used during training.
class MuseSvs {
 public:
  MuseSvs(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  std::vector<double> note_hz_of(const Score& score) const;
  std::vector<bool> voiced_of(const Score& score) const;

  struct ForwardResult {
    AdaptorOutput adaptor;
    Var mel;  // T x n_mels
    std::vector<int> frame_durations;  // durations used by the regulator
  };

  // Teacher-forced when `teacher` is given (training); free-running
  // otherwise. The regulator uses teacher durations when training, the
  // rounded CRDP rollout otherwise.
  ForwardResult forward(const Score& score, const AttributeContext& ctx,
                        const TeacherSignals* teacher = nullptr,
                        Rng* dropout_rng = nullptr, bool training = false) const;

  struct SynthesisResult {
    MelSpectrogram mel;
    std::vector<double> f0;  // frame-level contour
    DurationPlan plan;
    std::vector<int> durations;  // rounded, cumulative-remainder carried
    PitchStats pitch;
    std::vector<double> energy;
  };

  SynthesisResult synthesize(const Score& score, const AttributeContext& ctx,
                             std::uint64_t f0_seed = 0) const;

  const Encoder& encoder() const { return encoder_; }
  const VarianceAdaptor& adaptor() const { return va_; }
  const Decoder& decoder() const { return decoder_; }
  const Discriminator& discriminator() const { return disc_; }
  const StyleEncoder& style_encoder() const { return style_; }

  // Name predicate splitting generator and discriminator parameters.
  static bool is_discriminator_param(const std::string& name);

 private:
  ModelConfig cfg_;
  ParamStore params_;
  Embedding phoneme_emb_, pitch_emb_, duration_emb_;
  InputCombiner combiner_;
  Encoder encoder_;
  VarianceAdaptor va_;
  Decoder decoder_;
  Discriminator disc_;
  StyleEncoder style_;
};

}  // namespace musesvs

#endif  // MUSESVS_MODEL_HPP_
