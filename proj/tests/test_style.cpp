#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "musesvs/style.hpp"

using namespace musesvs;
using musesvs::testing::check_gradients;

namespace {

ModelConfig style_config() {
  ModelConfig c = ModelConfig::toy();
  c.d_model = 8;
  c.n_heads = 2;
  c.n_mels = 12;
  c.refenc_filters = {2, 2, 3, 3, 4, 4};
  c.refenc_gru_hidden = 6;
  c.style_tokens = 5;
  c.style_token_dim = 4;
  c.style_attn_heads = 2;
  c.n_singers = 2;
  return c;
}

}  // namespace

TEST_CASE("reference encoder: output width, determinism, padding") {
  ParamStore ps;
  Rng rng(1);
  ModelConfig cfg = style_config();
  auto enc = StyleEncoder::create(ps, cfg, rng);

  for (int t : {1, 7, 64, 130}) {
    Var s = enc.forward(Tensor::randn({t, 12}, rng));
    CHECK(s.rows() == 1);
    CHECK(s.cols() == 8);
    CHECK(all_finite(s.value()));
  }

  Tensor mel = Tensor::randn({70, 12}, rng);
  Var a = enc.forward(mel);
  Var b = enc.forward(mel);
  CHECK(a.value().data == b.value().data);

  // Trailing zero-padding below the stride stack's multiple is invisible.
  Tensor padded({100, 12});
  for (int t = 0; t < 70; ++t)
    for (int m = 0; m < 12; ++m) padded.at(t, m) = mel.at(t, m);
  Var c = enc.forward(padded);
  CHECK(c.value().data == a.value().data);

  CHECK_THROWS_AS(enc.forward(Tensor({0, 12})), std::invalid_argument);
}

TEST_CASE("token attention weights are a distribution per head") {
  ParamStore ps;
  Rng rng(2);
  ModelConfig cfg = style_config();
  auto enc = StyleEncoder::create(ps, cfg, rng);
  std::vector<Tensor> weights;
  enc.forward(Tensor::randn({40, 12}, rng), &weights);
  REQUIRE(weights.size() == 2);
  for (const auto& w : weights) {
    CHECK(w.rows() == 1);
    CHECK(w.cols() == 5);
    double sum = 0.0;
    for (double v : w.data) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("distillation loss: zero at match, quadratic in the gap") {
  ParamStore ps;
  Rng rng(3);
  ModelConfig cfg = style_config();
  auto singer = AttributeTable::singer_table(ps, 2, 8, rng);
  auto emotion =
      AttributeTable::emotion_table(ps, EmbeddingMode::kInterpolated, 8, rng);
  AttributeContext ctx;
  ctx.singer_id = 1;
  ctx.emotion_type = EmotionType::kHappy;
  ctx.intensity = 1.0;

  Tensor sum({1, 8});
  for (int j = 0; j < 8; ++j)
    sum.at(0, j) = singer.entries[1].value().at(0, j) +
                   emotion.entry("happy_1.0").value().at(0, j);
  Tensor zero_mean({1, 8});
  Var style = constant(sum);
  CHECK(distill_step(style, ctx, singer, emotion, zero_mean, false).item() ==
        doctest::Approx(0.0));

  // Symmetric positive quadratic: loss(g) == loss(-g), loss(2g) == 4 loss(g).
  Tensor gap = Tensor::randn({1, 8}, rng);
  auto shifted = [&](double scale) {
    Tensor t = sum;
    for (int j = 0; j < 8; ++j) t.at(0, j) += scale * gap.at(0, j);
    return distill_step(constant(t), ctx, singer, emotion, zero_mean, false)
        .item();
  };
  CHECK(shifted(1.0) == doctest::Approx(shifted(-1.0)));
  CHECK(shifted(2.0) == doctest::Approx(4.0 * shifted(1.0)));

  // Running-mean normalization shifts the target.
  Tensor mean = Tensor::randn({1, 8}, rng);
  Tensor target = sum;
  for (int j = 0; j < 8; ++j) target.at(0, j) += mean.at(0, j);
  CHECK(distill_step(constant(target), ctx, singer, emotion, mean, false)
            .item() == doctest::Approx(0.0));
}

TEST_CASE("freeze_teacher stops gradients at the style vector") {
  ParamStore ps;
  Rng rng(4);
  ModelConfig cfg = style_config();
  auto enc = StyleEncoder::create(ps, cfg, rng);
  auto singer = AttributeTable::singer_table(ps, 2, 8, rng);
  auto emotion =
      AttributeTable::emotion_table(ps, EmbeddingMode::kInterpolated, 8, rng);
  AttributeContext ctx;
  ctx.singer_id = 0;

  Tensor mel = Tensor::randn({30, 12}, rng);
  Tensor zero_mean({1, 8});

  for (bool freeze : {false, true}) {
    Var style = enc.forward(mel);
    Var loss = distill_step(style, ctx, singer, emotion, zero_mean, freeze);
    GradStore gs;
    backward(loss, gs);
    const Tensor* conv_grad = gs.find(ps.find("style.conv0.w")->node().get());
    const Tensor* table_grad =
        gs.find(ps.find("tables.singer.0")->node().get());
    REQUIRE(table_grad != nullptr);
    CHECK(max_abs(*table_grad) > 0.0);
    if (freeze)
      CHECK(conv_grad == nullptr);
    else
      CHECK((conv_grad != nullptr && max_abs(*conv_grad) > 0.0));
  }
}

TEST_CASE("gradient check: reference encoder") {
  ParamStore ps;
  Rng rng(5);
  ModelConfig cfg = style_config();
  auto enc = StyleEncoder::create(ps, cfg, rng);
  Tensor mel = Tensor::randn({20, 12}, rng);
  Tensor proj = Tensor::randn({8, 1}, rng);
  auto fn = [&]() {
    return sum_all(matmul(enc.forward(mel), constant(proj)));
  };
  std::vector<Var> leaves;
  for (const auto& [name, v] : ps.all()) leaves.push_back(v);
  auto r = check_gradients(fn, leaves, rng, 6);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("running mean update") {
  RunningMean m;
  m.mean = Tensor({1, 2});
  m.momentum = 0.5;
  Tensor a = Tensor::from_rows({{2.0, 4.0}});
  m.update(a);
  CHECK(m.mean.data == a.data);  // first update seeds the mean
  Tensor b = Tensor::from_rows({{0.0, 0.0}});
  m.update(b);
  CHECK(m.mean.at(0, 0) == doctest::Approx(1.0));
  CHECK(m.mean.at(0, 1) == doctest::Approx(2.0));
}
