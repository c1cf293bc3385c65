// src/model.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/model.hpp"

#include <algorithm>

namespace musesvs {

namespace {
constexpr int kMaxDurationBucket = 127;
}

MuseSvs::MuseSvs(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  Rng rng(init_seed);
  phoneme_emb_ = Embedding::create(params_, "input.phoneme", cfg.vocab_size,
                                   cfg.d_model, rng);
  pitch_emb_ = Embedding::create(params_, "input.pitch", 128, cfg.d_model, rng);
  duration_emb_ = Embedding::create(params_, "input.duration",
                                    kMaxDurationBucket + 1, cfg.d_model, rng);
  combiner_ = InputCombiner::create(params_, "input.combiner", cfg.d_model,
                                    cfg.d_model, rng);
  encoder_ = Encoder::create(params_, cfg, rng);
  va_ = VarianceAdaptor::create(params_, cfg, rng);
  decoder_ = Decoder::create(params_, cfg, rng);
  disc_ = Discriminator::create(params_, cfg, rng);
  style_ = StyleEncoder::create(params_, cfg, rng);
}

bool MuseSvs::is_discriminator_param(const std::string& name) {
  return name.rfind("disc.", 0) == 0;
}

std::vector<double> MuseSvs::note_hz_of(const Score& score) const {
  std::vector<double> hz;
  hz.reserve(score.length());
  for (int i = 0; i < score.length(); ++i)
    hz.push_back(score.is_rest(i) || score.note_pitches[i] == 0
                     ? 0.0
                     : midi_to_hz(score.note_pitches[i]));
  return hz;
}

std::vector<bool> MuseSvs::voiced_of(const Score& score) const {
  std::vector<bool> v;
  v.reserve(score.length());
  for (int i = 0; i < score.length(); ++i)
    v.push_back(!score.is_rest(i) && score.note_pitches[i] != 0);
  return v;
}

MuseSvs::ForwardResult MuseSvs::forward(const Score& score,
                                        const AttributeContext& ctx,
                                        const TeacherSignals* teacher,
                                        Rng* dropout_rng, bool training) const {
  score.validate(cfg_.vocab_size);
  ctx.validate(cfg_.n_singers);

  std::vector<int> dur_buckets;
  dur_buckets.reserve(score.length());
  for (int d : score.note_durations)
    dur_buckets.push_back(std::min(d, kMaxDurationBucket));

  Var low = combiner_.forward(phoneme_emb_.forward(score.phonemes),
                              pitch_emb_.forward(score.note_pitches),
                              duration_emb_.forward(dur_buckets));
  JointEmbeddingSeq e0 = encoder_.forward(low, dropout_rng, training);

  ForwardResult out;
  out.adaptor = va_.forward(e0, ctx, note_hz_of(score), voiced_of(score),
                            score.note_durations, teacher, dropout_rng,
                            training);

  if (training && teacher) {
    out.frame_durations = teacher->durations;
  } else {
    out.frame_durations =
        round_durations_with_carry(out.adaptor.durations.plan().predicted);
  }
  Var frames = length_regulate(out.adaptor.joint.values, out.frame_durations);
  out.mel = decoder_.forward(frames, dropout_rng, training);
  return out;
}

MuseSvs::SynthesisResult MuseSvs::synthesize(const Score& score,
                                             const AttributeContext& ctx,
                                             std::uint64_t f0_seed) const {
  NoGradScope ng;
  ForwardResult fwd = forward(score, ctx);

  SynthesisResult r;
  r.mel.frames = fwd.mel.value();
  r.mel.frame_rate = cfg_.frame_rate;
  r.plan = fwd.adaptor.durations.plan();
  r.durations = fwd.frame_durations;
  r.pitch = fwd.adaptor.pitch_stats(note_hz_of(score), voiced_of(score));
  r.energy = fwd.adaptor.energy.value().data;
  r.f0 = realize_f0(r.pitch, r.durations, cfg_.vibrato_rate_hz, f0_seed,
                    cfg_.frame_rate);
  return r;
}

}  // namespace musesvs
