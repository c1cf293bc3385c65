#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "musesvs/arrayio.hpp"
#include "musesvs/trainer.hpp"

using namespace musesvs;
namespace fs = std::filesystem;

namespace {

// A small corpus the toy model can chew through quickly (n_mels must match
// the toy preset).
SyntheticCorpusConfig tiny_corpus() {
  SyntheticCorpusConfig c;
  c.n_samples = 4;
  c.min_phonemes = 5;
  c.max_phonemes = 8;
  c.min_note_frames = 2;
  c.max_note_frames = 4;
  c.n_mels = 80;
  c.seed = 31;
  return c;
}

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.preset = "toy";
  cfg.corpus = tiny_corpus();
  cfg.max_steps = 3;
  cfg.batch_size = 2;
  cfg.lr_warmup = 10;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("array container round trip") {
  Rng rng(1);
  Tensor t = Tensor::randn({7, 5}, rng);
  // Make values exactly float32-representable so the trip is lossless.
  round_tensor_to_f32(t);
  const std::string path = "array_tmp.msvs";
  save_array(path, t);
  Tensor back = load_array(path);
  CHECK(back.shape == t.shape);
  CHECK(back.data == t.data);
  fs::remove(path);
  CHECK_THROWS_AS(load_array("does_not_exist.msvs"), std::invalid_argument);
}

TEST_CASE("checkpoint save/load restores parameters") {
  const std::string path = "ckpt_tmp.msvs";
  MuseSvs model(ModelConfig::toy(), 7);
  CheckpointMeta meta;
  meta.step = 12;
  meta.seed = 7;
  meta.config_hash = 99;
  meta.rng_state = {1, 2, 3, 4};
  save_checkpoint(path, model.params(), nullptr, nullptr, meta);

  // After save the live parameters are exactly the f32-rounded values.
  std::map<std::string, Tensor> snapshot;
  for (const auto& [name, var] : model.params().all())
    snapshot[name] = var.value();

  // Perturb, then reload.
  for (const auto& [name, var] : model.params().all())
    for (auto& v : var.node()->value.data) v += 0.25;
  CheckpointMeta back = load_checkpoint(path, model.params());
  CHECK(back.step == 12);
  CHECK(back.rng_state == std::array<std::uint64_t, 4>{1, 2, 3, 4});
  for (const auto& [name, var] : model.params().all())
    CHECK(var.value().data == snapshot[name].data);
  fs::remove(path);
}

TEST_CASE("training is deterministic given the seed") {
  TrainConfig cfg = tiny_train_config();
  Trainer a(cfg);
  Trainer b(cfg);
  auto la = a.step_once();
  auto lb = b.step_once();
  CHECK(la.total == lb.total);
  CHECK(la.disc == lb.disc);
}

TEST_CASE("checkpoint resume replays the continuing run bit-identically") {
  const std::string path = "resume_tmp.msvs";
  TrainConfig cfg = tiny_train_config();

  Trainer original(cfg);
  original.step_once();
  original.step_once();
  original.save(path);
  const StepLosses continued = original.step_once();

  Trainer resumed(cfg);
  resumed.load(path);
  CHECK(resumed.step() == 2);
  const StepLosses replayed = resumed.step_once();

  CHECK(replayed.total == continued.total);
  CHECK(replayed.parts.mel == continued.parts.mel);
  CHECK(replayed.parts.duration == continued.parts.duration);
  CHECK(replayed.disc == continued.disc);
  CHECK(replayed.lr == continued.lr);
  fs::remove(path);
}

TEST_CASE("loading a checkpoint from a different config is rejected") {
  const std::string path = "mismatch_tmp.msvs";
  TrainConfig cfg = tiny_train_config();
  Trainer t(cfg);
  t.save(path);
  TrainConfig other = cfg;
  other.peak_lr = 2e-3;
  Trainer u(other);
  CHECK_THROWS_AS(u.load(path), std::invalid_argument);
  fs::remove(path);
}

TEST_CASE("full-size config constructs and runs forward") {
  MuseSvs model(ModelConfig::full_size(), 1);
  // Reference-scale parameter budget (order 10^8).
  CHECK(model.params().count() > 50'000'000);

  Score score;
  score.phonemes = {1, 2, 3, 4, 5, 6, 7};
  score.note_pitches = {60, 62, 64, 65, 67, 69, 71};
  score.note_durations = {3, 3, 3, 3, 3, 3, 3};
  AttributeContext ctx;
  ctx.singer_id = 2;
  ctx.emotion_type = EmotionType::kHappy;
  ctx.intensity = 0.5;
  NoGradScope ng;
  auto fwd = model.forward(score, ctx);
  CHECK(fwd.adaptor.joint.values.rows() == 7);
  CHECK(fwd.adaptor.joint.values.cols() == 384);
  CHECK(fwd.mel.cols() == 80);
  CHECK(all_finite(fwd.mel.value()));
}

TEST_CASE("trainer smoke run writes curve and checkpoint") {
  TrainConfig cfg = tiny_train_config();
  cfg.max_steps = 2;
  Trainer t(cfg);
  const std::string out = "train_smoke_tmp";
  fs::remove_all(out);
  TrainResult r = t.run(out);
  CHECK_FALSE(r.aborted_non_finite);
  CHECK(r.steps_done == 2);
  CHECK(fs::exists(r.checkpoint_path));
  CHECK(fs::exists(r.loss_csv_path));
  const std::string csv = read_text_file(r.loss_csv_path);
  CHECK(csv.find("step,total,mel") == 0);
  // Header plus one row per step.
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 3);
  fs::remove_all(out);
}
