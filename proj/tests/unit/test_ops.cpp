#include <random>

#include "doctest.h"
#include "hyperslim/error.hpp"
#include "hyperslim/ops.hpp"
#include "hyperslim/optim.hpp"
#include "support/oracles.hpp"

using namespace hyperslim;
using namespace hyperslim::testing;

TEST_CASE("conv2d scalar case") {
  ConvWeights w = make_conv(1, 1, 1, 1, 0);
  w.weight[0] = 3.0;
  w.bias[0] = -0.5;
  const Tensor x({1, 1, 1, 1}, std::vector<double>{2.0});
  CHECK(conv2d(x, w)[0] == doctest::Approx(5.5));
}

TEST_CASE("conv2d with identity kernel returns input") {
  std::mt19937_64 rng(1);
  ConvWeights w = make_conv(3, 3, 1, 1, 0);
  for (std::size_t c = 0; c < 3; ++c) w.weight[c * 3 + c] = 1.0;
  const Tensor x = random_tensor({2, 3, 5, 4}, rng);
  CHECK(bit_identical(conv2d(x, w), x));
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  std::mt19937_64 rng(2);
  ConvWeights w = make_conv(3, 4, 3, 2, 1);
  randomize(w, rng);
  const Tensor x = random_tensor({1, 3, 8, 8}, rng);
  const Tensor got = conv2d(x, w);
  const Tensor want = reference_conv(x, w);
  REQUIRE(got.shape() == Shape{1, 4, 4, 4});
  CHECK(max_relative_error(got, want) < 1e-13);

  ConvWeights w5 = make_conv(2, 3, 5, 2, 2);
  randomize(w5, rng);
  const Tensor x2 = random_tensor({2, 2, 7, 6}, rng);
  CHECK(max_relative_error(conv2d(x2, w5), reference_conv(x2, w5)) < 1e-13);
}

TEST_CASE("conv2d reports the offending dimension") {
  const ConvWeights w = make_conv(3, 4, 3, 1, 1);
  const Tensor x({1, 2, 4, 4});
  try {
    conv2d(x, w);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(e.dimension() == "input channels");
    CHECK(e.expected() == 3);
    CHECK(e.actual() == 2);
  }
}

TEST_CASE("deconv2d identity and scatter oracle") {
  std::mt19937_64 rng(3);
  ConvWeights id = make_deconv(2, 2, 1, 1, 0);
  id.weight[0] = 1.0;
  id.weight[3] = 1.0;
  const Tensor x = random_tensor({1, 2, 3, 3}, rng);
  CHECK(bit_identical(deconv2d(x, id), x));

  ConvWeights w = make_deconv(1, 1, 2, 2, 0);
  w.weight.values() = {1.0, 2.0, 3.0, 4.0};
  const Tensor in({1, 1, 2, 2}, std::vector<double>{1.0, -1.0, 0.5, 2.0});
  const Tensor got = deconv2d(in, w);
  REQUIRE(got.shape() == Shape{1, 1, 4, 4});
  // Non-overlapping stamps: top-left block is 1 * kernel.
  CHECK(got.at(0, 0, 0, 0) == 1.0);
  CHECK(got.at(0, 0, 1, 1) == 4.0);
  CHECK(got.at(0, 0, 0, 2) == -1.0);
  CHECK(got.at(0, 0, 3, 3) == 8.0);
  CHECK(max_relative_error(got, reference_deconv(in, w)) == 0.0);

  for (std::size_t stride : {1u, 2u}) {
    for (std::size_t ks : {2u, 3u, 4u, 5u}) {
      ConvWeights d = make_deconv(3, 2, ks, stride, ks / 2, stride - 1);
      randomize(d, rng);
      const Tensor xi = random_tensor({2, 3, 4, 3}, rng);
      CHECK(max_relative_error(deconv2d(xi, d), reference_deconv(xi, d)) <
            1e-13);
    }
  }
}

TEST_CASE("deconv2d gradients match finite differences") {
  std::mt19937_64 rng(4);
  ConvWeights w = make_deconv(2, 3, 5, 2, 2, 1);
  randomize(w, rng);
  Tensor x = random_tensor({1, 2, 3, 3}, rng);
  const Tensor probe = random_tensor(deconv2d(x, w).shape(), rng);
  const Tensor ones(probe.shape(), 1.0);

  // Sum of outputs w.r.t. weights.
  const ConvGrads sum_grads = deconv2d_backward(x, w, ones, true);
  const auto fd_sum =
      finite_difference(w.weight, [&] { return dot(deconv2d(x, w), ones); });
  CHECK(relative_gap(sum_grads.weight.data(), fd_sum) < 1e-4);

  const ConvGrads g = deconv2d_backward(x, w, probe, true);
  auto loss = [&] { return dot(deconv2d(x, w), probe); };
  CHECK(relative_gap(g.weight.data(), finite_difference(w.weight, loss)) < 1e-4);
  CHECK(relative_gap(g.bias.data(), finite_difference(w.bias, loss)) < 1e-4);
  CHECK(relative_gap(g.input.data(), finite_difference(x, loss)) < 1e-4);
}

TEST_CASE("conv2d gradients match finite differences") {
  std::mt19937_64 rng(5);
  for (auto [ks, stride] : {std::pair<std::size_t, std::size_t>{3, 2}, {5, 2},
                           {1, 1}, {3, 1}}) {
    ConvWeights w = make_conv(3, 4, ks, stride, ks / 2);
    randomize(w, rng);
    Tensor x = random_tensor({2, 3, 6, 5}, rng);
    const Tensor probe = random_tensor(conv2d(x, w).shape(), rng);
    auto loss = [&] { return dot(conv2d(x, w), probe); };
    const ConvGrads g = conv2d_backward(x, w, probe, true);
    CHECK(relative_gap(g.weight.data(), finite_difference(w.weight, loss)) <
          1e-4);
    CHECK(relative_gap(g.bias.data(), finite_difference(w.bias, loss)) < 1e-4);
    CHECK(relative_gap(g.input.data(), finite_difference(x, loss)) < 1e-4);
  }
}

TEST_CASE("conv and deconv are linear in input and weight") {
  std::mt19937_64 rng(6);
  ConvWeights w = make_conv(2, 3, 3, 2, 1);
  randomize(w, rng);
  w.bias.fill(0.0);
  ConvWeights d = make_deconv(2, 3, 4, 2, 1);
  randomize(d, rng);
  d.bias.fill(0.0);
  const Tensor x1 = random_tensor({1, 2, 6, 6}, rng);
  const Tensor x2 = random_tensor({1, 2, 6, 6}, rng);
  const double a = 0.7;
  const double b = -1.3;
  Tensor combo(x1.shape());
  for (std::size_t i = 0; i < combo.numel(); ++i) combo[i] = a * x1[i] + b * x2[i];

  auto check_linear = [&](auto&& op) {
    const Tensor lhs = op(combo);
    const Tensor f1 = op(x1);
    const Tensor f2 = op(x2);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.numel(); ++i) {
      worst = std::max(worst, std::abs(lhs[i] - (a * f1[i] + b * f2[i])));
    }
    CHECK(worst < 1e-12);
  };
  check_linear([&](const Tensor& t) { return conv2d(t, w); });
  check_linear([&](const Tensor& t) { return deconv2d(t, d); });

  // Linearity in the weight with the input fixed.
  ConvWeights w1 = w;
  ConvWeights w2 = w;
  randomize(w2, rng);
  w2.bias.fill(0.0);
  ConvWeights wc = w;
  for (std::size_t i = 0; i < wc.weight.numel(); ++i) {
    wc.weight[i] = a * w1.weight[i] + b * w2.weight[i];
  }
  const Tensor lhs = conv2d(x1, wc);
  const Tensor f1 = conv2d(x1, w1);
  const Tensor f2 = conv2d(x1, w2);
  double worst = 0.0;
  for (std::size_t i = 0; i < lhs.numel(); ++i) {
    worst = std::max(worst, std::abs(lhs[i] - (a * f1[i] + b * f2[i])));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("pixel_shuffle layout, identity and round trip") {
  const Tensor x({1, 4, 1, 1}, std::vector<double>{1, 2, 3, 4});
  const Tensor y = pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  CHECK(y.values() == std::vector<double>{1, 2, 3, 4});

  std::mt19937_64 rng(7);
  const Tensor r = random_tensor({2, 8, 3, 3}, rng);
  CHECK(bit_identical(pixel_shuffle(r, 1), r));
  CHECK(bit_identical(pixel_unshuffle(pixel_shuffle(r, 2), 2), r));
  const Tensor r9 = random_tensor({1, 18, 2, 3}, rng);
  CHECK(bit_identical(pixel_unshuffle(pixel_shuffle(r9, 3), 3), r9));

  CHECK_THROWS_AS(pixel_shuffle(Tensor({1, 6, 2, 2}), 2), ShapeError);
}

TEST_CASE("leaky relu values and gradient") {
  const Tensor x({1, 1, 1, 3}, std::vector<double>{2.0, -1.0, 0.0});
  const Tensor y = activation(x, ActivationKind::kLeakyRelu);
  CHECK(y[0] == 2.0);
  CHECK(y[1] == doctest::Approx(-0.01));
  CHECK(bit_identical(activation(x, ActivationKind::kIdentity), x));
  const Tensor g = activation_backward(x, Tensor(x.shape(), 1.0),
                                       ActivationKind::kLeakyRelu);
  CHECK(g[2] == kLeakySlope);

  std::mt19937_64 rng(8);
  Tensor r = random_tensor({1, 3, 4, 4}, rng);
  for (double& v : r.data()) {
    if (std::abs(v) < 1e-3) v = 0.5;
  }
  const Tensor probe = random_tensor(r.shape(), rng);
  auto loss = [&] {
    return dot(activation(r, ActivationKind::kLeakyRelu), probe);
  };
  const Tensor analytic =
      activation_backward(r, probe, ActivationKind::kLeakyRelu);
  CHECK(relative_gap(analytic.data(), finite_difference(r, loss)) < 1e-6);
}

TEST_CASE("channel_mix matches the double-loop oracle") {
  std::mt19937_64 rng(9);
  const Tensor t = random_tensor({2, 4, 3, 5}, rng);
  const Tensor r = random_tensor({3, 4}, rng);
  CHECK(max_relative_error(channel_mix(t, r), reference_channel_mix(t, r)) <
        1e-14);
}

TEST_CASE("sgd and adam updates") {
  Tensor p({1}, 1.0);
  p.grad()[0] = 0.5;
  Optimizer sgd(OptimizerKind::kSgd, {&p});
  sgd.step(0.1);
  CHECK(p[0] == doctest::Approx(0.95));

  Tensor q({2}, std::vector<double>{1.0, -2.0});
  q.grad();
  Optimizer sgd_zero(OptimizerKind::kSgd, {&q});
  sgd_zero.step(0.1);
  CHECK(q.values() == std::vector<double>{1.0, -2.0});

  // One Adam step: m_hat = g, v_hat = g^2, so the move is lr * g/(|g| + eps).
  Tensor a({1}, 1.0);
  a.grad()[0] = 1.0;
  Optimizer adam(OptimizerKind::kAdam, {&a});
  adam.step(0.1);
  CHECK(a[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));

  Tensor missing({3});
  Optimizer bad(OptimizerKind::kSgd, {&missing});
  CHECK_THROWS_AS(bad.step(0.1), ValidationError);
}
