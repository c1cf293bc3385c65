#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "musesvs/losses.hpp"

using namespace musesvs;
using musesvs::testing::check_gradients;

namespace {

double frame_cost(const Tensor& a, int i, const Tensor& b, int j) {
  double s = 0.0;
  for (int k = 0; k < a.cols(); ++k) s += std::fabs(a.at(i, k) - b.at(j, k));
  return s / a.cols();
}

// Exhaustive minimum over monotone alignment paths, for small inputs.
double enumerate_paths(const Tensor& a, const Tensor& b, int i, int j) {
  const double here = frame_cost(a, i, b, j);
  if (i == a.rows() - 1 && j == b.rows() - 1) return here;
  double best = 1e300;
  if (i + 1 < a.rows()) best = std::min(best, enumerate_paths(a, b, i + 1, j));
  if (j + 1 < b.rows()) best = std::min(best, enumerate_paths(a, b, i, j + 1));
  if (i + 1 < a.rows() && j + 1 < b.rows())
    best = std::min(best, enumerate_paths(a, b, i + 1, j + 1));
  return here + best;
}

double dtw_oracle(const Tensor& a, const Tensor& b) {
  return enumerate_paths(a, b, 0, 0) / std::max(a.rows(), b.rows());
}

}  // namespace

TEST_CASE("soft-dtw reference values") {
  Tensor a = Tensor::from_rows({{0.0}, {1.0}});
  CHECK(soft_dtw_value(a, a, 0.0) == doctest::Approx(0.0));

  Tensor x = Tensor::from_rows({{1.5}});
  Tensor y = Tensor::from_rows({{4.0}});
  CHECK(soft_dtw_value(x, y, 0.0) == doctest::Approx(2.5));

  // A = [0;1], B = [0;1;1]: the matching path stays on equal values.
  Tensor b3 = Tensor::from_rows({{0.0}, {1.0}, {1.0}});
  CHECK(soft_dtw_value(a, b3, 0.0) == doctest::Approx(0.0));

  // Single frame vs two frames: both cells on the path, normalized by 2.
  Tensor one = Tensor::from_rows({{1.0}});
  Tensor two = Tensor::from_rows({{2.0}, {4.0}});
  CHECK(soft_dtw_value(one, two, 0.0) == doctest::Approx((1.0 + 3.0) / 2.0));

  CHECK_THROWS_AS(soft_dtw_value(Tensor({0, 1}), a, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(soft_dtw_value(a, a, -1.0), std::invalid_argument);
}

TEST_CASE("soft-dtw equals the exhaustive oracle at gamma 0") {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const int ta = rng.uniform_int(1, 6), tb = rng.uniform_int(1, 6);
    const int f = rng.uniform_int(1, 3);
    Tensor a = Tensor::randn({ta, f}, rng);
    Tensor b = Tensor::randn({tb, f}, rng);
    CHECK(soft_dtw_value(a, b, 0.0) ==
          doctest::Approx(dtw_oracle(a, b)).epsilon(1e-12));
    // Soft-min never exceeds the hard minimum.
    CHECK(soft_dtw_value(a, b, 1.0) <= soft_dtw_value(a, b, 0.0) + 1e-12);
    CHECK(soft_dtw_value(a, b, 0.1) <= soft_dtw_value(a, b, 0.0) + 1e-12);
  }
}

TEST_CASE("soft-dtw graph op matches the value computation") {
  Rng rng(2);
  Tensor a = Tensor::randn({5, 3}, rng);
  Tensor b = Tensor::randn({7, 3}, rng);
  Var va = constant(a), vb = constant(b);
  CHECK(soft_dtw(va, vb, 1.0).item() ==
        doctest::Approx(soft_dtw_value(a, b, 1.0)));
}

TEST_CASE("gradient check: soft-dtw at gamma 1") {
  Rng rng(3);
  Var a = leaf(Tensor::randn({5, 4}, rng), true);
  Var b = leaf(Tensor::randn({6, 4}, rng), true);
  auto fn = [&]() { return soft_dtw(a, b, 1.0); };
  auto r = check_gradients(fn, {a, b}, rng, 16);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("lambda_adv schedule") {
  CHECK(lambda_adv_schedule(0, 100, 200) == doctest::Approx(0.01));
  CHECK(lambda_adv_schedule(99, 100, 200) == doctest::Approx(0.01));
  CHECK(lambda_adv_schedule(200, 100, 200) == doctest::Approx(0.255));
  CHECK(lambda_adv_schedule(300, 100, 200) == doctest::Approx(0.5));
  CHECK(lambda_adv_schedule(10000, 100, 200) == doctest::Approx(0.5));
}

TEST_CASE("total loss weighting") {
  LossWeights w;
  LossParts ones{1.0, 1.0, 1.0, 1.0, 1.0};
  const int past_ramp = w.adv_warmup_steps + w.adv_ramp_steps + 1;
  CHECK(total_loss(ones, w, past_ramp) == doctest::Approx(4.1));
  LossParts zeros;
  CHECK(total_loss(zeros, w, past_ramp) == 0.0);
  // At step 0 the adversarial part is warmup-weighted at 0.01.
  CHECK(total_loss(ones, w, 0) == doctest::Approx(1 + 1 + 0.8 + 0.8 + 0.01));
  LossParts bad = ones;
  bad.mel = std::nan("");
  CHECK_THROWS_AS(total_loss(bad, w, 0), std::runtime_error);
}

TEST_CASE("lsgan objectives") {
  Var real1 = constant(Tensor::full({3, 3}, 1.0));
  Var fake0 = constant(Tensor::full({3, 3}, 0.0));
  CHECK(lsgan_discriminator_loss(real1, fake0).item() == doctest::Approx(0.0));
  CHECK(lsgan_generator_loss(fake0).item() == doctest::Approx(1.0));

  Var half = constant(Tensor::full({2, 5}, 0.5));
  CHECK(lsgan_discriminator_loss(half, half).item() == doctest::Approx(0.5));
  CHECK(lsgan_generator_loss(half).item() == doctest::Approx(0.25));
}

TEST_CASE("lr schedule peaks at warmup with the calibrated value") {
  const int warmup = 400;
  CHECK(lr_schedule(warmup, warmup) == doctest::Approx(1e-3).epsilon(1e-9));
  for (int s = 2; s < warmup; s += 37)
    CHECK(lr_schedule(s, warmup) > lr_schedule(s - 1, warmup));
  for (int s = warmup + 1; s < 3 * warmup; s += 97)
    CHECK(lr_schedule(s, warmup) < lr_schedule(s - 1, warmup));
  CHECK_THROWS_AS(lr_schedule(0, warmup), std::invalid_argument);
}
