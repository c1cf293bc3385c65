#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "musesvs/rng.hpp"
#include "musesvs/score.hpp"

using namespace musesvs;

namespace {
const PhonemeVocab& vocab() {
  static PhonemeVocab v = PhonemeVocab::default_vocab();
  return v;
}
}  // namespace

TEST_CASE("parse_score quantizes seconds to frames") {
  const std::string doc = R"({
    "phonemes": ["a", "e", "i"],
    "note_midi": [60, 62, 64],
    "note_seconds": [0.10, 0.20, 0.30]
  })";
  Score s = parse_score(doc, vocab());
  CHECK(s.note_durations == std::vector<int>{9, 19, 28});
}

TEST_CASE("parse_score rejects malformed input") {
  CHECK_THROWS_AS(parse_score("not json", vocab()), std::invalid_argument);
  CHECK_THROWS_AS(parse_score(R"({"phonemes": ["a"], "note_midi": [60, 61],
                                  "note_seconds": [0.1]})",
                              vocab()),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_score(R"({"phonemes": ["zz"], "note_midi": [60],
                                  "note_seconds": [0.1]})",
                              vocab()),
                  std::invalid_argument);
}

TEST_CASE("zero-second note clamps to one frame") {
  Score s = parse_score(R"({"phonemes": ["a"], "note_midi": [60],
                            "note_seconds": [0.0]})",
                        vocab());
  CHECK(s.note_durations == std::vector<int>{1});
}

TEST_CASE("midi_to_hz reference points") {
  CHECK(midi_to_hz(69) == doctest::Approx(440.0).epsilon(1e-12));
  CHECK(midi_to_hz(81) == doctest::Approx(880.0).epsilon(1e-12));
  CHECK(midi_to_hz(60) == doctest::Approx(261.6256).epsilon(1e-3 / 261.0));
  CHECK_THROWS_AS(midi_to_hz(-1), std::invalid_argument);
  CHECK_THROWS_AS(midi_to_hz(128), std::invalid_argument);
}

TEST_CASE("midi_to_hz is monotone and octave-doubling") {
  for (int m = 0; m < 127; ++m) CHECK(midi_to_hz(m + 1) > midi_to_hz(m));
  for (int m = 0; m <= 115; ++m) {
    const double ratio = midi_to_hz(m + 12) / (2.0 * midi_to_hz(m));
    CHECK(std::fabs(ratio - 1.0) < 1e-9);
  }
}

TEST_CASE("score JSON round trip is exact") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    Score s;
    const int n = rng.uniform_int(1, 12);
    for (int i = 0; i < n; ++i) {
      s.phonemes.push_back(rng.uniform_int(0, vocab().size() - 1));
      s.note_pitches.push_back(s.phonemes.back() == PhonemeVocab::kRestId
                                   ? 0
                                   : rng.uniform_int(40, 90));
      s.note_durations.push_back(rng.uniform_int(1, 40));
    }
    if (trial % 2 == 0) {
      std::vector<std::pair<int, int>> syl;
      int c = 0;
      while (c < n) {
        const int len = std::min(rng.uniform_int(1, 3), n - c);
        syl.emplace_back(c, c + len);
        c += len;
      }
      s.syllable_bounds = syl;
    }
    Score back = parse_score(serialize_score(s, vocab()), vocab());
    CHECK(back == s);
  }
}

TEST_CASE("attribute context validation") {
  AttributeContext ctx;
  ctx.singer_id = 0;
  CHECK_NOTHROW(ctx.validate(2));

  AttributeContext bad = ctx;
  bad.emotion_type = EmotionType::kNeutral;
  bad.intensity = 0.5;
  CHECK_THROWS_AS(bad.validate(2), std::invalid_argument);

  AttributeContext level = ctx;
  level.embedding_mode = EmbeddingMode::kLevelWise;
  level.emotion_type = EmotionType::kHappy;
  level.intensity = 0.5;
  CHECK_THROWS_AS(level.validate(2), std::invalid_argument);
  level.intensity = 0.7;
  CHECK_NOTHROW(level.validate(2));

  AttributeContext extrapolate = ctx;
  extrapolate.emotion_type = EmotionType::kSad;
  extrapolate.intensity = 1.5;
  CHECK_NOTHROW(extrapolate.validate(2));

  AttributeContext bad_singer = ctx;
  bad_singer.singer_id = 5;
  CHECK_THROWS_AS(bad_singer.validate(2), std::invalid_argument);
}
