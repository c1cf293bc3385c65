#include <cmath>

#include "doctest.h"
#include "musesvs/embedding.hpp"

using namespace musesvs;

TEST_CASE("positional encoding matches the sinusoid formula") {
  Tensor pe = positional_encoding(3, 4);
  CHECK(pe.at(0, 0) == 0.0);
  CHECK(pe.at(0, 1) == 1.0);
  CHECK(pe.at(0, 2) == 0.0);
  CHECK(pe.at(0, 3) == 1.0);
  CHECK(pe.at(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(pe.at(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(pe.at(1, 2) == doctest::Approx(std::sin(0.01)).epsilon(1e-12));
  CHECK(pe.at(1, 3) == doctest::Approx(std::cos(0.01)).epsilon(1e-12));
  CHECK_THROWS_AS(positional_encoding(4, 5), std::invalid_argument);
}

TEST_CASE("positional encoding stays in [-1, 1]") {
  Tensor pe = positional_encoding(1000, 384);
  for (double v : pe.data) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("combine_inputs with zero affine equals positional encoding") {
  ParamStore ps;
  Rng rng(3);
  InputCombiner c = InputCombiner::create(ps, "c", 4, 8, rng);
  c.proj.W.node()->value = Tensor({12, 8});
  c.proj.b.node()->value = Tensor({1, 8});
  Var zero = constant(Tensor({5, 4}));
  Var out = c.forward(zero, zero, zero);
  Tensor pe = positional_encoding(5, 8);
  CHECK(out.value().data == pe.data);
}

TEST_CASE("combine_inputs with identity affine concatenates") {
  ParamStore ps;
  Rng rng(3);
  InputCombiner c = InputCombiner::create(ps, "c", 2, 6, rng);
  Tensor eye({6, 6});
  for (int i = 0; i < 6; ++i) eye.at(i, i) = 1.0;
  c.proj.W.node()->value = eye;
  c.proj.b.node()->value = Tensor({1, 6});
  Var ph = constant(Tensor::from_rows({{1, 2}}));
  Var pi = constant(Tensor::from_rows({{3, 4}}));
  Var du = constant(Tensor::from_rows({{5, 6}}));
  Var out = c.forward(ph, pi, du);
  Tensor pe = positional_encoding(1, 6);
  const double expect[6] = {1, 2, 3, 4, 5, 6};
  for (int j = 0; j < 6; ++j)
    CHECK(out.value().at(0, j) == doctest::Approx(expect[j] + pe.at(0, j)));
}

TEST_CASE("combine_inputs at full-size width") {
  ParamStore ps;
  Rng rng(4);
  InputCombiner c = InputCombiner::create(ps, "c", 384, 384, rng);
  Var e = constant(Tensor::randn({7, 384}, rng));
  Var out = c.forward(e, e, e);
  CHECK(out.rows() == 7);
  CHECK(out.cols() == 384);
  CHECK_THROWS_AS(c.forward(e, constant(Tensor::randn({6, 384}, rng)), e),
                  std::invalid_argument);
}

TEST_CASE("combine_inputs is affine in each input") {
  ParamStore ps;
  Rng rng(21);
  InputCombiner c = InputCombiner::create(ps, "c", 5, 8, rng);
  Var p = constant(Tensor::randn({4, 5}, rng));
  Var d = constant(Tensor::randn({4, 5}, rng));
  Var zero = constant(Tensor({4, 5}));
  Tensor a = Tensor::randn({4, 5}, rng);
  Tensor b = Tensor::randn({4, 5}, rng);
  // f(a) + f(b) == f(a+b) + f(0) for an affine map, argument-wise.
  Var lhs = add(c.forward(constant(a), p, d), c.forward(constant(b), p, d));
  Var rhs = add(c.forward(add(constant(a), constant(b)), p, d),
                c.forward(zero, p, d));
  for (std::int64_t i = 0; i < lhs.value().numel(); ++i)
    CHECK(lhs.value().data[i] ==
          doctest::Approx(rhs.value().data[i]).epsilon(1e-12));
}

TEST_CASE("accumulate_residual bookkeeping") {
  Rng rng(5);
  JointEmbeddingSeq e0{constant(Tensor::randn({4, 6}, rng)), 0};
  Var zero = constant(Tensor({4, 6}));
  JointEmbeddingSeq e1 = accumulate_residual(e0, zero);
  CHECK(e1.stage == 1);
  CHECK(e1.values.value().data == e0.values.value().data);

  Var r1 = constant(Tensor::randn({4, 6}, rng));
  Var r2 = constant(Tensor::randn({4, 6}, rng));
  JointEmbeddingSeq two_steps =
      accumulate_residual(accumulate_residual(e0, r1), r2);
  JointEmbeddingSeq one_step = accumulate_residual(e0, add(r1, r2));
  CHECK(two_steps.stage == 2);
  CHECK(one_step.stage == 1);
  for (int i = 0; i < 24; ++i)
    CHECK(two_steps.values.value().data[i] ==
          doctest::Approx(one_step.values.value().data[i]).epsilon(1e-15));

  JointEmbeddingSeq full = e0;
  for (int k = 0; k < 4; ++k) full = accumulate_residual(full, zero);
  CHECK(full.stage == 4);
  CHECK_THROWS_AS(accumulate_residual(full, zero), std::invalid_argument);
  CHECK_THROWS_AS(accumulate_residual(e0, constant(Tensor({3, 6}))),
                  std::invalid_argument);
}

TEST_CASE("telescoping: joint equals base plus left-to-right residual sum") {
  Rng rng(6);
  JointEmbeddingSeq e{constant(Tensor::randn({5, 8}, rng)), 0};
  std::vector<Tensor> residuals;
  JointEmbeddingSeq acc = e;
  for (int k = 0; k < 4; ++k) {
    residuals.push_back(Tensor::randn({5, 8}, rng));
    acc = accumulate_residual(acc, constant(residuals.back()));
  }
  // Manual left-to-right accumulation must match bit for bit.
  Tensor manual = e.values.value();
  for (const auto& r : residuals)
    for (std::int64_t i = 0; i < manual.numel(); ++i)
      manual.data[i] = manual.data[i] + r.data[i];
  CHECK(acc.values.value().data == manual.data);
  CHECK(acc.stage == 4);
}

TEST_CASE("emotion table entry counts per mode") {
  ParamStore ps1, ps2;
  Rng rng(7);
  auto interp =
      AttributeTable::emotion_table(ps1, EmbeddingMode::kInterpolated, 8, rng);
  CHECK(interp.entries.size() == 3);
  auto level =
      AttributeTable::emotion_table(ps2, EmbeddingMode::kLevelWise, 8, rng);
  CHECK(level.entries.size() == 7);
}

TEST_CASE("emotion base embedding endpoints and extrapolation are exact") {
  ParamStore ps;
  Rng rng(8);
  auto table =
      AttributeTable::emotion_table(ps, EmbeddingMode::kInterpolated, 6, rng);
  const Tensor& r0 = table.entry("neutral").value();
  const Tensor& r1 = table.entry("happy_1.0").value();
  const Tensor& rs = table.entry("sad_1.0").value();

  AttributeContext ctx;
  ctx.intensity = 0.0;
  CHECK(emotion_base_embedding(ctx, table).value().data == r0.data);

  ctx.emotion_type = EmotionType::kHappy;
  ctx.intensity = 1.0;
  CHECK(emotion_base_embedding(ctx, table).value().data == r1.data);

  ctx.emotion_type = EmotionType::kSad;
  ctx.intensity = 1.5;
  Tensor expect({1, 6});
  for (int j = 0; j < 6; ++j)
    expect.at(0, j) = 1.5 * rs.at(0, j) + (1.0 - 1.5) * r0.at(0, j);
  CHECK(emotion_base_embedding(ctx, table).value().data == expect.data);
}

TEST_CASE("emotion base embedding is affine in t") {
  ParamStore ps;
  Rng rng(9);
  auto table =
      AttributeTable::emotion_table(ps, EmbeddingMode::kInterpolated, 16, rng);
  AttributeContext ctx;
  ctx.emotion_type = EmotionType::kHappy;
  auto emb = [&](double t) {
    AttributeContext c = ctx;
    c.intensity = t;
    return emotion_base_embedding(c, table).value();
  };
  for (auto [t1, t2] : std::vector<std::pair<double, double>>{
           {0.0, 1.0}, {0.2, 0.8}, {0.3, 1.7}}) {
    Tensor mid = emb((t1 + t2) / 2.0);
    Tensor a = emb(t1), b = emb(t2);
    for (int j = 0; j < 16; ++j)
      CHECK(std::fabs(mid.at(0, j) - 0.5 * (a.at(0, j) + b.at(0, j))) <
            1e-12);
  }
}

TEST_CASE("interpolated embeddings are collinear with the endpoints") {
  ParamStore ps;
  Rng rng(10);
  auto table =
      AttributeTable::emotion_table(ps, EmbeddingMode::kInterpolated, 8, rng);
  const Tensor& r0 = table.entry("neutral").value();
  const Tensor& r1 = table.entry("sad_1.0").value();
  AttributeContext ctx;
  ctx.emotion_type = EmotionType::kSad;
  for (double t : {0.25, 0.5, 0.9, 1.3}) {
    ctx.intensity = t;
    Tensor e = emotion_base_embedding(ctx, table).value();
    // e - r0 must equal t * (r1 - r0) coordinate-wise.
    for (int j = 0; j < 8; ++j)
      CHECK(std::fabs((e.at(0, j) - r0.at(0, j)) -
                      t * (r1.at(0, j) - r0.at(0, j))) < 1e-12);
  }
}

TEST_CASE("level-wise lookup rejects untrained levels") {
  ParamStore ps;
  Rng rng(11);
  auto table =
      AttributeTable::emotion_table(ps, EmbeddingMode::kLevelWise, 8, rng);
  AttributeContext ctx;
  ctx.embedding_mode = EmbeddingMode::kLevelWise;
  ctx.emotion_type = EmotionType::kHappy;
  ctx.intensity = 0.7;
  CHECK_NOTHROW(emotion_base_embedding(ctx, table));
  ctx.intensity = 0.5;
  CHECK_THROWS_AS(emotion_base_embedding(ctx, table), std::invalid_argument);
}

TEST_CASE("residual encoder starts at zero and has live conditioning") {
  ParamStore ps;
  Rng rng(12);
  auto enc = ResidualAttributeEncoder::create(ps, "enc", 384, 3, 384, 0.5, rng);
  Var e_prev = constant(Tensor::randn({10, 384}, rng));
  Var cond = constant(Tensor::randn({1, 384}, rng));
  Var r = enc.forward(e_prev, cond);
  CHECK(r.rows() == 10);
  CHECK(r.cols() == 384);
  CHECK(max_abs(r.value()) == 0.0);  // zero-initialized output layer

  // Randomize the output layer; the conditioning input must then carry
  // gradient for generic parameters.
  ParamStore ps2;
  Rng rng2(13);
  auto enc2 = ResidualAttributeEncoder::create(ps2, "enc", 8, 3, 8, 0.0, rng2);
  enc2.out.W.node()->value = Tensor::randn({8, 8}, rng2, 0.5);
  Var e2 = constant(Tensor::randn({4, 8}, rng2));
  Var c2 = leaf(Tensor::randn({1, 8}, rng2), true);
  GradStore gs;
  backward(sum_all(enc2.forward(e2, c2)), gs);
  const Tensor* g = gs.find(c2.node().get());
  REQUIRE(g != nullptr);
  CHECK(max_abs(*g) > 0.0);
}
