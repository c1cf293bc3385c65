// src/score.cpp
//
// Copyright 2026 The Muse-SVS C++ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#include "musesvs/score.hpp"

#include <cmath>
#include <unordered_map>

#include "json.hpp"
#include "musesvs/tensor.hpp"

namespace musesvs {

using nlohmann::json;

PhonemeVocab::PhonemeVocab(std::vector<std::string> symbols)
    : symbols_(std::move(symbols)) {
  check(!symbols_.empty(), "vocab: empty symbol list");
}

PhonemeVocab PhonemeVocab::default_vocab() {
  return PhonemeVocab({"_", "a", "e", "i", "o", "u", "k", "t", "n", "s", "m",
                       "r", "l", "p", "g", "d"});
}

int PhonemeVocab::id_of(const std::string& symbol) const {
  for (int i = 0; i < size(); ++i)
    if (symbols_[i] == symbol) return i;
  fail("vocab: unknown phoneme symbol '" + symbol + "'");
}

const std::string& PhonemeVocab::symbol_of(int id) const {
  check(id >= 0 && id < size(), "vocab: id out of range");
  return symbols_[id];
}

int Score::total_frames() const {
  int t = 0;
  for (int d : note_durations) t += d;
  return t;
}

bool Score::is_rest(int i) const {
  return phonemes[i] == PhonemeVocab::kRestId;
}

void Score::validate(int vocab_size) const {
  check(!phonemes.empty(), "score: empty phoneme sequence");
  check(phonemes.size() == note_pitches.size() &&
            phonemes.size() == note_durations.size(),
        "score: length mismatch among phonemes, pitches, durations");
  for (int p : phonemes)
    check(p >= 0 && p < vocab_size, "score: phoneme id out of vocabulary");
  for (int m : note_pitches)
    check(m >= 0 && m <= 127, "score: MIDI note out of [0, 127]");
  for (int d : note_durations)
    check(d >= 1, "score: note duration must be >= 1 frame");
  if (syllable_bounds) {
    int cursor = 0;
    for (const auto& [s, e] : *syllable_bounds) {
      check(s == cursor && e > s, "score: syllables must partition phonemes");
      cursor = e;
    }
    check(cursor == length(), "score: syllables must cover all phonemes");
  }
}

double midi_to_hz(double midi) {
  check(midi >= 0.0 && midi <= 127.0, "midi_to_hz: note out of [0, 127]");
  return 440.0 * std::pow(2.0, (midi - 69.0) / 12.0);
}

Score parse_score(const std::string& bytes, const PhonemeVocab& vocab,
                  double frame_rate) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    fail(std::string("score: malformed JSON: ") + e.what());
  }
  check(doc.is_object() && doc.contains("phonemes") &&
            doc.contains("note_midi") && doc.contains("note_seconds"),
        "score: missing required keys phonemes/note_midi/note_seconds");

  Score s;
  for (const auto& sym : doc.at("phonemes"))
    s.phonemes.push_back(vocab.id_of(sym.get<std::string>()));
  for (const auto& m : doc.at("note_midi")) s.note_pitches.push_back(m.get<int>());
  const auto& secs = doc.at("note_seconds");
  for (const auto& sec : secs) {
    const double v = sec.get<double>();
    check(v >= 0.0, "score: negative note duration");
    const long frames = std::lround(v * frame_rate);
    s.note_durations.push_back(static_cast<int>(std::max(1L, frames)));
  }
  if (doc.contains("syllables")) {
    std::vector<std::pair<int, int>> bounds;
    for (const auto& pair : doc.at("syllables"))
      bounds.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    s.syllable_bounds = std::move(bounds);
  }
  if (doc.contains("tempo_bpm")) s.tempo_bpm = doc.at("tempo_bpm").get<double>();
  s.validate(vocab.size());
  return s;
}

std::string serialize_score(const Score& score, const PhonemeVocab& vocab,
                            double frame_rate) {
  score.validate(vocab.size());
  json doc;
  doc["phonemes"] = json::array();
  for (int p : score.phonemes) doc["phonemes"].push_back(vocab.symbol_of(p));
  doc["note_midi"] = score.note_pitches;
  doc["note_seconds"] = json::array();
  for (int d : score.note_durations)
    doc["note_seconds"].push_back(static_cast<double>(d) / frame_rate);
  if (score.syllable_bounds) {
    doc["syllables"] = json::array();
    for (const auto& [s, e] : *score.syllable_bounds)
      doc["syllables"].push_back(json::array({s, e}));
  }
  if (score.tempo_bpm) doc["tempo_bpm"] = *score.tempo_bpm;
  return doc.dump(2);
}

std::string emotion_name(EmotionType t) {
  switch (t) {
    case EmotionType::kNeutral: return "neutral";
    case EmotionType::kHappy: return "happy";
    case EmotionType::kSad: return "sad";
  }
  fail("emotion_name: bad enum");
}

EmotionType emotion_from_name(const std::string& name) {
  if (name == "neutral") return EmotionType::kNeutral;
  if (name == "happy") return EmotionType::kHappy;
  if (name == "sad") return EmotionType::kSad;
  fail("unknown emotion type '" + name + "'");
}

void AttributeContext::validate(int n_singers) const {
  check(singer_id >= 0 && singer_id < n_singers,
        "attribute context: singer id out of range");
  check(intensity >= 0.0, "attribute context: intensity must be >= 0");
  check(emotion_type != EmotionType::kNeutral || intensity == 0.0,
        "attribute context: neutral emotion requires intensity 0");
  check(intensity == 0.0 || emotion_type != EmotionType::kNeutral,
        "attribute context: nonzero intensity requires an emotion type");
  if (embedding_mode == EmbeddingMode::kLevelWise) {
    bool trained = false;
    for (double lv : trained_intensity_levels())
      if (intensity == lv) trained = true;
    check(trained,
          "attribute context: level-wise mode only supports trained "
          "intensity levels {0, 0.3, 0.7, 1.0}");
  }
}

}  // namespace musesvs
