// musesvs/score.hpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef MUSESVS_SCORE_HPP_
#define MUSESVS_SCORE_HPP_

#include <optional>
#include <string>
#include <vector>

namespace musesvs {

// 24 kHz audio at hop 256 -> 93.75 frames per second (~10.67 ms per frame).
constexpr double kSampleRate = 24000.0;
constexpr double kHopSamples = 256.0;
constexpr double kFrameRate = kSampleRate / kHopSamples;

// Phoneme symbol set. Index 0 is always the rest symbol; rests carry MIDI
// note 0 and are excluded from pitch processing.
class PhonemeVocab {
 public:
  PhonemeVocab() = default;
  explicit PhonemeVocab(std::vector<std::string> symbols);
  static PhonemeVocab default_vocab();

  int size() const { return static_cast<int>(symbols_.size()); }
  int id_of(const std::string& symbol) const;  // throws on unknown symbol
  const std::string& symbol_of(int id) const;
  const std::vector<std::string>& symbols() const { return symbols_; }
  static constexpr int kRestId = 0;

 private:
  std::vector<std::string> symbols_;
};

struct Score {
  std::vector<int> phonemes;        // ids into a PhonemeVocab
  std::vector<int> note_pitches;    // MIDI 0..127, 0 = rest
  std::vector<int> note_durations;  // frames, >= 1
  std::optional<std::vector<std::pair<int, int>>> syllable_bounds;
  std::optional<double> tempo_bpm;

  int length() const { return static_cast<int>(phonemes.size()); }
  int total_frames() const;
  bool is_rest(int i) const;
  void validate(int vocab_size) const;

  bool operator==(const Score& o) const = default;
};

// MIDI note number -> frequency in Hz, 440 * 2^((m-69)/12). Domain [0, 127].
double midi_to_hz(double midi);

// JSON score document <-> Score. Durations arrive in seconds and are
// quantized to frames via round(seconds * frame_rate), clamped to >= 1.
Score parse_score(const std::string& bytes, const PhonemeVocab& vocab,
                  double frame_rate = kFrameRate);
std::string serialize_score(const Score& score, const PhonemeVocab& vocab,
                            double frame_rate = kFrameRate);

enum class EmotionType { kNeutral, kHappy, kSad };
enum class EmbeddingMode { kInterpolated, kLevelWise };

std::string emotion_name(EmotionType t);
EmotionType emotion_from_name(const std::string& name);

// Trained intensity levels; in level-wise mode these are the only legal t.
inline const std::vector<double>& trained_intensity_levels() {
  static const std::vector<double> levels{0.0, 0.3, 0.7, 1.0};
  return levels;
}

struct AttributeContext {
  int singer_id = 0;
  EmotionType emotion_type = EmotionType::kNeutral;
  double intensity = 0.0;  // t; 0 = neutral, > 1 = extrapolation
  EmbeddingMode embedding_mode = EmbeddingMode::kInterpolated;

  void validate(int n_singers) const;
};

}  // namespace musesvs

#endif  // MUSESVS_SCORE_HPP_
