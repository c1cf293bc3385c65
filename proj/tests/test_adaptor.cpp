#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "musesvs/adaptor.hpp"

using namespace musesvs;
using musesvs::testing::check_gradients;

namespace {

ModelConfig tiny_config() {
  ModelConfig c = ModelConfig::toy();
  c.d_model = 8;
  c.n_heads = 2;
  c.enc_layers = 1;
  c.dec_layers = 1;
  c.ff_filters = 16;
  c.aspp_filters = {8, 4, 4, 4};
  c.n_mels = 6;
  c.dropout_enc = 0.0;
  c.dropout_va = 0.0;
  c.pred_filters = 8;
  c.crdp_hidden = 8;
  c.n_singers = 2;
  c.disc_filters = {1, 3};
  c.disc_kernel = 3;
  c.refenc_filters = {2, 2, 2, 2, 2, 2};
  c.refenc_gru_hidden = 4;
  c.style_token_dim = 4;
  c.style_attn_heads = 2;
  return c;
}

void randomize(ParamStore& ps, const std::string& name, Rng& rng,
               double stdev = 0.5) {
  Var* v = ps.find(name);
  REQUIRE(v != nullptr);
  v->node()->value = Tensor::randn(v->value().shape, rng, stdev);
}

}  // namespace

TEST_CASE("pitch predictor: residual identity and softplus floor") {
  ParamStore ps;
  Rng rng(1);
  ModelConfig cfg = tiny_config();
  auto pred = PitchPredictor::create(ps, "p", cfg, rng);
  // All-zero heads: mean falls back to the note, cv = softplus(0) = ln 2.
  for (const auto& [name, var] : ps.all())
    std::fill(var.node()->value.data.begin(), var.node()->value.data.end(),
              0.0);
  Var e2 = constant(Tensor::randn({3, 8}, rng));
  std::vector<double> note{220.0, 246.9, 261.6};
  auto [mean, cv] = pred.forward(e2, note);
  for (int i = 0; i < 3; ++i) {
    CHECK(mean.value().at(i, 0) == note[i]);
    CHECK(cv.value().at(i, 0) == doctest::Approx(std::log(2.0)));
  }

  // Deterministic variant has no CV head.
  ParamStore ps2;
  ModelConfig det = cfg;
  det.statistical_pitch = false;
  auto pred2 = PitchPredictor::create(ps2, "p", det, rng);
  auto [m2, cv2] = pred2.forward(e2, note);
  CHECK(m2.rows() == 3);
  for (int i = 0; i < 3; ++i) CHECK(cv2.value().at(i, 0) == 0.0);
}

TEST_CASE("pitch loss matches the hand-worked examples") {
  PitchStats target;
  target.note_hz = {200.0};
  target.mean_hz = {200.0};
  target.cv = {0.05};
  target.voiced = {true};
  PitchStats pred = target;
  CHECK(pitch_loss(pred, target, 1.0, 10.0) == 0.0);

  pred.mean_hz = {202.0};
  pred.cv = {0.06};
  CHECK(pitch_loss(pred, target, 1.0, 10.0) == doctest::Approx(2.1));

  PitchStats t2;
  t2.note_hz = {200.0, 300.0};
  t2.mean_hz = {200.0, 300.0};
  t2.cv = {0.05, 0.02};
  t2.voiced = {true, true};
  PitchStats p2 = t2;
  p2.mean_hz = {202.0, 300.0};
  p2.cv = {0.05, 0.03};
  CHECK(pitch_loss(p2, t2, 1.0, 10.0) == doctest::Approx(1.05));

  PitchStats bad = t2;
  bad.mean_hz.pop_back();
  bad.cv.pop_back();
  bad.voiced.pop_back();
  bad.note_hz.pop_back();
  CHECK_THROWS_AS(pitch_loss(bad, t2, 1.0, 10.0), std::invalid_argument);
}

TEST_CASE("pitch loss graph version agrees with the value version") {
  Rng rng(2);
  PitchStats target;
  for (int i = 0; i < 5; ++i) {
    target.note_hz.push_back(200.0 + 10 * i);
    target.mean_hz.push_back(205.0 + 9 * i);
    target.cv.push_back(0.02 + 0.01 * i);
    target.voiced.push_back(i != 2);
  }
  Tensor mean({5, 1}), cv({5, 1});
  for (int i = 0; i < 5; ++i) {
    mean.at(i, 0) = 201.0 + 11 * i;
    cv.at(i, 0) = 0.03 + 0.005 * i;
  }
  Var loss = pitch_loss_var(constant(mean), constant(cv), target, 1.0, 10.0);
  PitchStats pred;
  pred.note_hz = target.note_hz;
  pred.mean_hz = mean.data;
  pred.cv = cv.data;
  pred.voiced = target.voiced;
  CHECK(loss.item() == doctest::Approx(pitch_loss(pred, target, 1.0, 10.0)));
}

TEST_CASE("realize_f0: flat at cv 0, std converges to mu*cv") {
  PitchStats s;
  s.note_hz = {200.0};
  s.mean_hz = {200.0};
  s.cv = {0.0};
  s.voiced = {true};
  auto flat = realize_f0(s, {50}, 5.5, 1);
  for (double v : flat) CHECK(v == 200.0);

  s.cv = {0.05};
  auto f0 = realize_f0(s, {10000}, 5.5, 7);
  double mu = 0.0;
  for (double v : f0) mu += v;
  mu /= f0.size();
  double var = 0.0;
  for (double v : f0) var += (v - mu) * (v - mu);
  var /= f0.size();
  CHECK(std::fabs(mu - 200.0) < 2.0);                  // within 1%
  CHECK(std::fabs(std::sqrt(var) - 10.0) < 0.5);       // within 5%

  auto again = realize_f0(s, {10000}, 5.5, 7);
  CHECK(again == f0);

  // Unvoiced phonemes emit zeros.
  PitchStats rest;
  rest.note_hz = {0.0};
  rest.mean_hz = {0.0};
  rest.cv = {0.0};
  rest.voiced = {false};
  for (double v : realize_f0(rest, {5}, 5.5, 3)) CHECK(v == 0.0);
}

TEST_CASE("energy oracle: mean of mel column norms per phoneme") {
  Tensor mel({2, 4});
  // Frame norms 3 and 4.
  mel.at(0, 0) = 3.0;
  mel.at(1, 1) = 4.0;
  auto e = energy_from_mel(mel, {2});
  REQUIRE(e.size() == 1);
  CHECK(e[0] == doctest::Approx(3.5));
  CHECK_THROWS_AS(energy_from_mel(mel, {3}), std::invalid_argument);
}

TEST_CASE("duration plan recurrence and loss examples") {
  auto plan = DurationPlan::from_predictions({12.0, 9.0}, {10, 10});
  CHECK(plan.sync_err == std::vector<double>{2.0, 1.0});
  CHECK_NOTHROW(plan.validate());

  // d = [11,9], note = [10,10], pred = [11,9]: squared term 0, |sum
  // SyncErr| = |1 + 0| -> 0.3 / 2.
  auto p1 = DurationPlan::from_predictions({11.0, 9.0}, {10, 10});
  CHECK(duration_loss(p1, {11, 9}, 0.3) == doctest::Approx(0.15));

  // d = [10,10], pred = [12,10]: squared 4, sync sum |2+2| -> (4+1.2)/2.
  auto p2 = DurationPlan::from_predictions({12.0, 10.0}, {10, 10});
  CHECK(duration_loss(p2, {10, 10}, 0.3) == doctest::Approx(2.6));

  auto p3 = DurationPlan::from_predictions({11.0, 9.0}, {11, 9});
  CHECK(duration_loss(p3, {11, 9}, 0.3) == 0.0);

  CHECK_THROWS_AS(duration_loss(p3, {11}, 0.3), std::invalid_argument);

  DurationPlan tampered = p1;
  tampered.sync_err[1] = 5.0;
  CHECK_THROWS_AS(tampered.validate(), std::invalid_argument);
}

TEST_CASE("crdp: residual identity, rollout telescoping, sensitivity") {
  ParamStore ps;
  Rng rng(3);
  ModelConfig cfg = tiny_config();
  auto crdp = Crdp::create(ps, "crdp", cfg, rng);
  Var e2 = constant(Tensor::randn({6, 8}, rng));
  std::vector<int> note{10, 4, 7, 9, 3, 12};

  // Zero-initialized head: predictions equal the note durations.
  auto r = crdp_rollout(crdp, e2, note);
  for (int i = 0; i < 6; ++i)
    CHECK(r.predicted.value().at(i, 0) == doctest::Approx(note[i]));
  auto plan = r.plan();
  CHECK_NOTHROW(plan.validate());
  CHECK(plan.sync_err.back() == doctest::Approx(0.0));

  // Generic parameters: the sync-error input matters.
  randomize(ps, "crdp.head.w", rng);
  randomize(ps, "crdp.head.b", rng, 0.1);
  Var state = crdp.initial_state();
  Var row = constant(Tensor::randn({1, 8}, rng));
  auto low = crdp.step(state, row, constant(0.0), 10.0);
  auto high = crdp.step(state, row, constant(50.0), 10.0);
  CHECK(std::fabs(low.d_hat.item() - high.d_hat.item()) > 1e-8);

  // Telescoping: last sync error equals sum(pred) - sum(note) exactly.
  auto r2 = crdp_rollout(crdp, e2, note);
  auto p2 = r2.plan();
  double sp = 0.0;
  int sn = 0;
  for (double d : p2.predicted) sp += d;
  for (int d : p2.note) sn += d;
  CHECK_NOTHROW(p2.validate());
  CHECK(p2.sync_err.back() == doctest::Approx(sp - sn).epsilon(1e-12));

  // Graph-side loss agrees with the value-side loss.
  std::vector<int> target{11, 4, 6, 9, 4, 11};
  Var lv = duration_loss_var(r2, target, 0.3);
  CHECK(lv.item() == doctest::Approx(duration_loss(p2, target, 0.3)));
}

TEST_CASE("round_durations_with_carry never drifts") {
  std::vector<double> pred{2.4, 2.4, 2.4, 2.4, 2.4};
  auto rounded = round_durations_with_carry(pred);
  int total = 0;
  for (int d : rounded) {
    CHECK(d >= 1);
    total += d;
  }
  CHECK(total == 12);  // round(12.0)

  // Without the >= 1 clamp binding, the carried total never strays more
  // than half a frame from the real-valued total.
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p;
    double sum = 0.0;
    for (int i = 0; i < 40; ++i) {
      p.push_back(rng.uniform(1.0, 12.0));
      sum += p.back();
    }
    auto r = round_durations_with_carry(p);
    double rsum = 0.0;
    for (int d : r) rsum += d;
    CHECK(std::fabs(rsum - sum) <= 0.5);
  }
}

TEST_CASE("note normalization baseline") {
  ParamStore ps;
  Rng rng(5);
  ModelConfig cfg = tiny_config();
  auto b = NoteNormBaseline::create(ps, "nn", cfg, rng);
  // Force ratio == 1: zero trunk, head bias softplus^{-1}(1).
  for (const auto& [name, var] : ps.all())
    std::fill(var.node()->value.data.begin(), var.node()->value.data.end(),
              0.0);
  Var* bias = ps.find("nn.head.b");
  bias->node()->value.at(0, 0) = std::log(std::exp(1.0) - 1.0);

  Var e2 = constant(Tensor::randn({3, 8}, rng));
  std::vector<int> note{10, 6, 8};
  auto r = b.rollout(e2, note);
  for (int i = 0; i < 3; ++i)
    CHECK(r.predicted.value().at(i, 0) ==
          doctest::Approx(note[i]).epsilon(1e-12));

  // Ratio targets: d = 15, note = 10 -> 1.5; with ratio 1 the squared
  // error is 0.25.
  auto r1 = b.rollout(constant(Tensor::randn({1, 8}, rng)), {10});
  CHECK(b.loss(r1, {15}).item() == doctest::Approx(0.25));
}

TEST_CASE("syllable baseline loss decomposition") {
  ParamStore ps;
  Rng rng(6);
  ModelConfig cfg = tiny_config();
  auto b = SyllableBaseline::create(ps, "syl", cfg, rng);
  DurationRollout r;
  r.predicted = constant(Tensor::from_rows({{6.0}, {4.0}}));
  r.note = {5, 5};
  r.sync_err = constant(Tensor({2, 1}));
  std::vector<std::pair<int, int>> syl{{0, 2}};
  // Phoneme MSE (1+1)/2 = 1; syllable sums match (10 vs 10).
  CHECK(b.loss(r, {5, 5}, syl).item() == doctest::Approx(1.0));

  DurationRollout exact;
  exact.predicted = constant(Tensor::from_rows({{5.0}, {5.0}}));
  exact.note = {5, 5};
  exact.sync_err = constant(Tensor({2, 1}));
  CHECK(b.loss(exact, {5, 5}, syl).item() == doctest::Approx(0.0));
  CHECK_THROWS_AS(b.loss(exact, {5, 5}, {}), std::invalid_argument);
}

TEST_CASE("variance adaptor: identity at zero init, stage trace, teacher") {
  Rng rng(7);
  ModelConfig cfg = tiny_config();
  ParamStore ps;
  auto va = VarianceAdaptor::create(ps, cfg, rng);

  JointEmbeddingSeq e0{constant(Tensor::randn({5, 8}, rng)), 0};
  AttributeContext ctx;
  ctx.singer_id = 1;
  ctx.emotion_type = EmotionType::kHappy;
  ctx.intensity = 0.7;
  std::vector<double> note_hz{220, 230, 0, 250, 260};
  std::vector<bool> voiced{true, true, false, true, true};
  std::vector<int> note_dur{4, 5, 3, 6, 4};

  auto out = va.forward(e0, ctx, note_hz, voiced, note_dur);
  // Residual encoders start zero-initialized: accumulation is the identity.
  CHECK(out.joint.stage == 4);
  CHECK(out.joint.values.value().data == e0.values.value().data);
  CHECK(out.stage_trace == std::vector<int>{0, 1, 2, 3, 4});

  // Teacher length mismatch must throw.
  TeacherSignals bad;
  bad.pitch_mean_hz = {220.0};
  bad.pitch_cv = {0.01};
  bad.energy = {1.0};
  bad.durations = {4};
  CHECK_THROWS_AS(
      va.forward(e0, ctx, note_hz, voiced, note_dur, &bad, nullptr, true),
      std::invalid_argument);

  // Teacher forcing with teacher == predictions reproduces the inference
  // joint embedding bit for bit.
  auto free_run = va.forward(e0, ctx, note_hz, voiced, note_dur);
  TeacherSignals echo;
  echo.pitch_mean_hz = free_run.pitch_mean.value().data;
  echo.pitch_cv = free_run.pitch_cv.value().data;
  echo.energy = free_run.energy.value().data;
  echo.durations = note_dur;
  auto forced = va.forward(e0, ctx, note_hz, voiced, note_dur, &echo, nullptr,
                           true);
  CHECK(forced.joint.values.value().data ==
        free_run.joint.values.value().data);
}

TEST_CASE("variance adaptor runs in level-wise emotion mode") {
  Rng rng(21);
  ModelConfig cfg = tiny_config();
  cfg.emotion_mode = EmbeddingMode::kLevelWise;
  ParamStore ps;
  auto va = VarianceAdaptor::create(ps, cfg, rng);
  CHECK(va.emotion_table.entries.size() == 7);

  JointEmbeddingSeq e0{constant(Tensor::randn({3, 8}, rng)), 0};
  AttributeContext ctx;
  ctx.embedding_mode = EmbeddingMode::kLevelWise;
  ctx.emotion_type = EmotionType::kSad;
  ctx.intensity = 0.7;
  std::vector<double> note_hz{220, 230, 240};
  std::vector<bool> voiced{true, true, true};
  std::vector<int> note_dur{4, 5, 3};
  auto out = va.forward(e0, ctx, note_hz, voiced, note_dur);
  CHECK(out.joint.stage == 4);

  ctx.intensity = 0.5;  // untrained level
  CHECK_THROWS_AS(va.forward(e0, ctx, note_hz, voiced, note_dur),
                  std::invalid_argument);
}

TEST_CASE("pitch prediction responds to the singer attribute") {
  Rng rng(8);
  ModelConfig cfg = tiny_config();
  ParamStore ps;
  auto va = VarianceAdaptor::create(ps, cfg, rng);
  // Give the residual encoders generic output weights so conditioning
  // actually reaches the embeddings.
  randomize(ps, "va.enc_singer.out.w", rng);
  randomize(ps, "va.enc_emotion.out.w", rng);
  randomize(ps, "va.pitch_pred.cv.head.w", rng);
  randomize(ps, "va.pitch_pred.mean.head.w", rng);

  JointEmbeddingSeq e0{constant(Tensor::randn({4, 8}, rng)), 0};
  std::vector<double> note_hz{220, 230, 240, 250};
  std::vector<bool> voiced{true, true, true, true};
  std::vector<int> note_dur{4, 5, 3, 6};
  AttributeContext c0;
  c0.singer_id = 0;
  AttributeContext c1;
  c1.singer_id = 1;
  auto o0 = va.forward(e0, c0, note_hz, voiced, note_dur);
  auto o1 = va.forward(e0, c1, note_hz, voiced, note_dur);
  double diff = 0.0;
  for (int i = 0; i < 4; ++i)
    diff += std::fabs(o0.pitch_mean.value().at(i, 0) -
                      o1.pitch_mean.value().at(i, 0)) +
            std::fabs(o0.pitch_cv.value().at(i, 0) -
                      o1.pitch_cv.value().at(i, 0));
  CHECK(diff > 1e-9);
}

TEST_CASE("gradient check: variance adaptor heads and crdp") {
  Rng rng(9);
  ModelConfig cfg = tiny_config();
  ParamStore ps;
  auto va = VarianceAdaptor::create(ps, cfg, rng);
  // Zero-initialized output layers hide gradients; randomize them.
  randomize(ps, "va.enc_singer.out.w", rng);
  randomize(ps, "va.enc_emotion.out.w", rng);
  randomize(ps, "va.enc_pitch.out.w", rng);
  randomize(ps, "va.enc_energy.out.w", rng);
  randomize(ps, "va.crdp.head.w", rng);

  Var e0v = leaf(Tensor::randn({4, 8}, rng), true);
  std::vector<double> note_hz{220, 230, 240, 250};
  std::vector<bool> voiced{true, true, true, true};
  std::vector<int> note_dur{4, 5, 3, 6};
  AttributeContext ctx;
  ctx.singer_id = 1;
  ctx.emotion_type = EmotionType::kSad;
  ctx.intensity = 0.3;

  PitchStats target;
  target.note_hz = note_hz;
  target.mean_hz = {221, 232, 239, 252};
  target.cv = {0.02, 0.03, 0.04, 0.05};
  target.voiced = voiced;

  // Gradients flow in the teacher-forced configuration (the training
  // path); free-running conditioning deliberately severs the predictor ->
  // encoder connection.
  TeacherSignals teacher;
  teacher.pitch_mean_hz = target.mean_hz;
  teacher.pitch_cv = target.cv;
  teacher.energy = {1.0, 1.2, 0.9, 1.1};
  teacher.durations = {5, 4, 4, 6};

  auto fn = [&]() {
    JointEmbeddingSeq e0{e0v, 0};
    auto out =
        va.forward(e0, ctx, note_hz, voiced, note_dur, &teacher, nullptr, true);
    Var l = pitch_loss_var(out.pitch_mean, out.pitch_cv, target, 1.0, 10.0);
    l = add(l, duration_loss_var(out.durations, {5, 4, 4, 6}, 0.3));
    l = add(l, mean_all(square(out.energy)));
    l = add(l, mean_all(square(out.joint.values)));
    return l;
  };

  std::vector<Var> leaves{e0v};
  for (const char* name :
       {"va.crdp.gru.wz", "va.crdp.gru.uh", "va.crdp.head.w",
        "va.pitch_pred.mean.conv0.w", "va.pitch_pred.cv.head.w",
        "va.energy_pred.conv1.w", "va.enc_pitch.conv.w",
        "va.enc_energy.out.w", "tables.singer.1", "tables.emotion.sad_1.0"}) {
    Var* v = ps.find(name);
    REQUIRE(v != nullptr);
    leaves.push_back(*v);
  }
  auto r = check_gradients(fn, leaves, rng, 6);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("gradient check: baseline duration predictors") {
  Rng rng(10);
  ModelConfig cfg = tiny_config();
  ParamStore ps;
  auto nn = NoteNormBaseline::create(ps, "nn", cfg, rng);
  auto syl = SyllableBaseline::create(ps, "syl", cfg, rng);
  Var e2 = leaf(Tensor::randn({4, 8}, rng), true);
  std::vector<int> note{5, 7, 4, 9};
  std::vector<int> target{6, 6, 4, 10};
  std::vector<std::pair<int, int>> bounds{{0, 2}, {2, 4}};

  auto fn = [&]() {
    Var a = nn.loss(nn.rollout(e2, note), target);
    Var b = syl.loss(syl.rollout(e2, note), target, bounds);
    return add(a, b);
  };
  std::vector<Var> leaves{e2};
  for (const char* name : {"nn.conv0.w", "nn.head.w", "syl.conv1.w",
                           "syl.head.b"}) {
    Var* v = ps.find(name);
    REQUIRE(v != nullptr);
    leaves.push_back(*v);
  }
  auto r = check_gradients(fn, leaves, rng, 8);
  CHECK(r.max_rel_err < 1e-4);
}
