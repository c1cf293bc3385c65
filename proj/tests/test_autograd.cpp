#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "musesvs/autograd.hpp"

using namespace musesvs;
using musesvs::testing::check_gradients;

TEST_CASE("elementwise and matmul values") {
  Var a = constant(Tensor::from_rows({{1, 2}, {3, 4}}));
  Var b = constant(Tensor::from_rows({{5, 6}, {7, 8}}));
  CHECK(add(a, b).value().at(1, 1) == 12);
  CHECK(sub(a, b).value().at(0, 0) == -4);
  CHECK(mul(a, b).value().at(0, 1) == 12);
  Var m = matmul(a, b);
  CHECK(m.value().at(0, 0) == 19);
  CHECK(m.value().at(1, 1) == 50);
  CHECK(transpose(a).value().at(0, 1) == 3);
  CHECK_THROWS_AS(add(a, constant(Tensor({1, 2}))), std::invalid_argument);
  CHECK_THROWS_AS(matmul(a, constant(Tensor({3, 2}))), std::invalid_argument);
}

TEST_CASE("length_regulate repeats rows in order") {
  Var x = constant(Tensor::from_rows({{1, 1}, {2, 2}}));
  Var y = length_regulate_op(x, {2, 3});
  REQUIRE(y.rows() == 5);
  CHECK(y.value().at(0, 0) == 1);
  CHECK(y.value().at(1, 0) == 1);
  CHECK(y.value().at(2, 0) == 2);
  CHECK(y.value().at(4, 1) == 2);
  CHECK(length_regulate_op(x, {1, 1}).value().same_shape(x.value()));
  CHECK_THROWS_AS(length_regulate_op(x, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(length_regulate_op(x, {1}), std::invalid_argument);
}

TEST_CASE("no-grad scope records no tape") {
  Var w = leaf(Tensor::from_rows({{1, 2}}), true);
  NoGradScope ng;
  Var y = scale(w, 2.0);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("backward accumulates through shared nodes") {
  Var x = leaf(Tensor::from_rows({{3.0}}), true);
  Var y = mul(x, x);  // x^2, dy/dx = 2x = 6
  GradStore gs;
  backward(y, gs);
  CHECK(gs.find(x.node().get())->data[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient check: dense op composition") {
  Rng rng(7);
  Var w1 = leaf(Tensor::randn({6, 8}, rng, 0.5), true);
  Var b1 = leaf(Tensor::randn({1, 8}, rng, 0.2), true);
  Var g = leaf(Tensor::full({1, 8}, 1.0), true);
  Var b = leaf(Tensor::randn({1, 8}, rng, 0.1), true);
  Var x = leaf(Tensor::randn({5, 6}, rng), true);
  Tensor proj = Tensor::randn({8, 1}, rng);

  auto fn = [&]() {
    Var h = add_rowvec(matmul(x, w1), b1);
    h = layer_norm(tanh_op(h), g, b);
    h = softmax_rows(h);
    h = mul(h, sigmoid(h));
    return sum_all(matmul(h, constant(proj)));
  };
  auto r = check_gradients(fn, {w1, b1, g, b, x}, rng, 10);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("gradient check: structural ops") {
  Rng rng(11);
  Var x = leaf(Tensor::randn({4, 6}, rng), true);
  Var t = leaf(Tensor::randn({5, 3}, rng), true);
  Tensor proj = Tensor::randn({6, 1}, rng);
  auto fn = [&]() {
    Var stacked = concat_rows({slice_rows(x, 2, 2), slice_rows(x, 0, 2)});
    Var gathered = gather_rows(t, {0, 4, 2, 4});
    Var h = concat_cols({stacked, gathered, gathered});  // 4 x 12
    Var reg = length_regulate_op(h, {2, 1, 3, 1});       // 7 x 12
    Var rep = repeat_row(slice_rows(reg, 0, 1), reg.rows());
    Var y = add(reg, rep);
    return sum_all(abs_op(matmul(reshape(y, {y.rows() * 2, 6}),
                                 constant(proj))));
  };
  auto r = check_gradients(fn, {x, t}, rng, 14);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("gradient check: im2col convolution paths") {
  Rng rng(13);
  Var x = leaf(Tensor::randn({7, 3}, rng), true);
  Var w = leaf(Tensor::randn({9, 4}, rng, 0.4), true);   // k3 * c3 -> 4
  Var img = leaf(Tensor::randn({6, 5, 2}, rng), true);
  Var w2 = leaf(Tensor::randn({18, 3}, rng, 0.4), true);  // 3x3x2 -> 3
  auto fn = [&]() {
    Var conv1 = relu(matmul(im2col1d(x, 3, 2), w));
    int ho = 0, wo = 0;
    Var conv2 = matmul(im2col2d(img, 3, 3, 2, 2, 1, 1, &ho, &wo), w2);
    return add(mean_all(conv1), mean_all(square(conv2)));
  };
  auto r = check_gradients(fn, {x, w, img, w2}, rng, 14);
  CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("softplus and abs behave at reference points") {
  Var z = constant(Tensor::scalar(0.0));
  CHECK(softplus(z).item() == doctest::Approx(std::log(2.0)));
  Var n = constant(Tensor::scalar(-3.5));
  CHECK(abs_op(n).item() == doctest::Approx(3.5));
}

TEST_CASE("dropout determinism and scaling") {
  Rng rng1(5), rng2(5);
  Var x = leaf(Tensor::full({4, 4}, 1.0), true);
  Var a = dropout(x, 0.5, rng1, true);
  Var b = dropout(x, 0.5, rng2, true);
  CHECK(a.value().data == b.value().data);
  Var c = dropout(x, 0.5, rng1, false);
  CHECK(c.value().data == x.value().data);
  for (double v : a.value().data) CHECK((v == 0.0 || v == 2.0));
}
