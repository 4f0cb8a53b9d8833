#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "hyperslim/entropy.hpp"
#include "support/oracles.hpp"

using namespace hyperslim;
using namespace hyperslim::testing;

namespace {
// -log2(Phi(0.5) - Phi(-0.5)), evaluated with mpmath at 30 digits.
constexpr double kUnitBinBits = 1.38486653429098968;
constexpr double kUnitBinMass = 0.382924922548026207;

Tensor scalar(double v) { return Tensor({1, 1, 1, 1}, std::vector<double>{v}); }
}  // namespace

TEST_CASE("uniform noise stays inside the open half-unit interval") {
  std::mt19937_64 rng(1);
  const Tensor y = random_tensor({2, 3, 8, 8}, rng, -5.0, 5.0);
  const Tensor a = add_uniform_noise(y, 42);
  const Tensor b = add_uniform_noise(y, 42);
  CHECK(bit_identical(a, b));
  for (std::size_t i = 0; i < y.numel(); ++i) {
    CHECK(std::abs(a[i] - y[i]) < 0.5);
  }
  CHECK_FALSE(bit_identical(a, add_uniform_noise(y, 43)));
}

TEST_CASE("uniform noise has zero mean") {
  const Tensor zeros({1, 1, 1000, 1000});
  const Tensor noisy = add_uniform_noise(zeros, 7);
  double sum = 0.0;
  for (double v : noisy.data()) sum += v;
  const double mean = sum / 1e6;
  // Standard error of U(-.5,.5) over 1e6 draws is sqrt(1/12)/1e3.
  CHECK(std::abs(mean) < 3.0 * 0.288675 / 1e3);
}

TEST_CASE("rounding is half away from zero") {
  const Tensor x({1, 1, 1, 6},
                 std::vector<double>{0.4, -1.5, 1.5, 2.0, -3.0, -0.4});
  const Tensor r = quantize_round(x);
  CHECK(r.values() == std::vector<double>{0.0, -2.0, 2.0, 2.0, -3.0, -0.0});
  CHECK(bit_identical(quantize_round(r), r));
}

TEST_CASE("gaussian rate of the central unit bin") {
  const GaussianConditionalModel model;
  const RateResult r = gaussian_rate(scalar(0.0), scalar(1.0), model);
  CHECK(gaussian_bin_likelihood(0.0, 1.0, 1e-9) ==
        doctest::Approx(kUnitBinMass).epsilon(1e-12));
  CHECK(r.total_bits == doctest::Approx(kUnitBinBits).epsilon(1e-12));

  // A tiny sigma is clamped to the floor, leaving almost all mass centred.
  const RateResult tight = gaussian_rate(scalar(0.0), scalar(1e-9), model);
  CHECK(tight.total_bits >= 0.0);
  CHECK(tight.total_bits < 1e-4);
}

TEST_CASE("gaussian rate matches Monte Carlo entropy at sigma 2") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  const std::size_t samples = 400000;
  Tensor v({1, 1, 1, samples});
  std::map<long, std::size_t> histogram;
  for (std::size_t i = 0; i < samples; ++i) {
    v[i] = std::round(normal(rng) + unif(rng));
    ++histogram[static_cast<long>(v[i])];
  }
  double entropy = 0.0;
  for (const auto& [value, count] : histogram) {
    const double f = static_cast<double>(count) / samples;
    entropy -= f * std::log2(f);
  }
  const RateResult r =
      gaussian_rate(v, Tensor(v.shape(), 2.0), GaussianConditionalModel{});
  const double mean_bits = r.total_bits / samples;
  CHECK(std::abs(mean_bits - entropy) / entropy < 0.01);
}

TEST_CASE("factorized rate") {
  FactorizedModel model = FactorizedModel::make(2);
  const Tensor zero({1, 2, 1, 1});
  CHECK(factorized_rate(zero, model).bits[0] ==
        doctest::Approx(kUnitBinBits).epsilon(1e-12));

  const Tensor tail({1, 2, 1, 1}, std::vector<double>{200.0, -500.0});
  const RateResult t = factorized_rate(tail, model);
  CHECK(t.bits[0] == doctest::Approx(-std::log2(1e-9)));
  CHECK(t.bits[1] == doctest::Approx(-std::log2(1e-9)));

  FactorizedModel shifted = model;
  shifted.mean.values() = {3.0, -1.25};
  shifted.scale.values() = {0.7, 2.5};
  model.scale.values() = {0.7, 2.5};
  const Tensor v({1, 2, 1, 2}, std::vector<double>{0.2, -1.0, 2.0, 0.5});
  const Tensor v_shift({1, 2, 1, 2},
                       std::vector<double>{3.2, 2.0, 0.75, -0.75});
  const RateResult a = factorized_rate(v, model);
  const RateResult b = factorized_rate(v_shift, shifted);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(b.bits[i] == doctest::Approx(a.bits[i]).epsilon(1e-12));
  }

  FactorizedModel clamp = FactorizedModel::make(1);
  clamp.scale[0] = 0.01;
  clamp.clamp_scales();
  CHECK(clamp.scale[0] == clamp.scale_floor);
}

TEST_CASE("rd loss arithmetic") {
  CHECK(rd_loss(100.0, 0.0, 0.0483, 100) == doctest::Approx(1.0));
  CHECK(rd_loss(0.0, 1.0, 0.0035, 10) == doctest::Approx(0.0035));
  const double base = rd_loss(50.0, 2.0, 0.01, 100);
  const double doubled = rd_loss(50.0, 2.0, 0.02, 100);
  CHECK(doubled - base == doctest::Approx(0.02));
  CHECK_THROWS(rd_loss(1.0, 1.0, 0.01, 0));
}

TEST_CASE("rate bounds, monotonicity and partition sums") {
  const GaussianConditionalModel model;
  std::mt19937_64 rng(5);
  const Tensor v = quantize_round(random_tensor({2, 3, 4, 4}, rng, -40.0, 40.0));
  const Tensor s = random_tensor(v.shape(), rng, 0.0, 6.0);
  const RateResult r = gaussian_rate(v, s, model);
  const double cap = -std::log2(model.likelihood_floor);
  double partial_a = 0.0;
  double partial_b = 0.0;
  for (std::size_t i = 0; i < r.bits.numel(); ++i) {
    CHECK(r.bits[i] >= 0.0);
    CHECK(r.bits[i] <= cap + 1e-12);
    (i < r.bits.numel() / 2 ? partial_a : partial_b) += r.bits[i];
  }
  double sum = 0.0;
  for (double b : r.bits.data()) sum += b;
  CHECK(sum == r.total_bits);
  CHECK(partial_a + partial_b == doctest::Approx(r.total_bits).epsilon(1e-14));

  double previous = 0.0;
  for (double sigma = 0.2; sigma < 20.0; sigma *= 1.3) {
    const double bits = gaussian_rate(scalar(0.0), scalar(sigma), model).total_bits;
    CHECK(bits >= previous);  // nonincreasing mass -> nondecreasing bits
    previous = bits;
  }
  previous = 0.0;
  for (double value = 0.0; value < 30.0; value += 0.75) {
    const double bits = gaussian_rate(scalar(-value), scalar(1.5), model).total_bits;
    CHECK(bits >= previous);
    previous = bits;
  }
}

TEST_CASE("rate gradients match finite differences") {
  std::mt19937_64 rng(9);
  const GaussianConditionalModel model;
  Tensor v = random_tensor({1, 2, 3, 3}, rng, -3.0, 3.0);
  Tensor s = random_tensor(v.shape(), rng, 0.3, 3.0);
  auto mean_bits = [&] {
    return gaussian_rate(v, s, model).total_bits / static_cast<double>(v.numel());
  };
  const GaussianRateGrads g = gaussian_rate_backward(
      v, s, model, 1.0 / static_cast<double>(v.numel()));
  CHECK(relative_gap(g.values.data(), finite_difference(v, mean_bits)) < 1e-4);
  CHECK(relative_gap(g.sigma.data(), finite_difference(s, mean_bits)) < 1e-4);

  FactorizedModel prior = FactorizedModel::make(2);
  prior.mean.values() = {0.3, -0.8};
  prior.scale.values() = {1.2, 0.6};
  Tensor z = random_tensor({2, 2, 2, 2}, rng, -2.0, 2.0);
  auto z_bits = [&] { return factorized_rate(z, prior).total_bits; };
  prior.mean.grad();
  prior.scale.grad();
  prior.mean.zero_grad();
  prior.scale.zero_grad();
  const Tensor gz = factorized_rate_backward(z, prior, 1.0, true);
  CHECK(relative_gap(gz.data(), finite_difference(z, z_bits)) < 1e-4);
  CHECK(relative_gap(prior.mean.grad(), finite_difference(prior.mean, z_bits)) <
        1e-4);
  CHECK(relative_gap(prior.scale.grad(),
                     finite_difference(prior.scale, z_bits)) < 1e-4);
}
