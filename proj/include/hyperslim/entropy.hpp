#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperslim/tensor.hpp"

namespace hyperslim {

// Zero-mean Gaussian conditioned on a predicted scale, integrated over the
// unit quantization bin around each value.
struct GaussianConditionalModel {
  double scale_floor = 0.11;
  double likelihood_floor = 1e-9;

  void validate() const;
};

// Per-channel Gaussian prior for the hyper latent. Mean and scale are
// learnable rank-1 tensors of length C; scales are clamped to scale_floor
// after every update.
struct FactorizedModel {
  Tensor mean;
  Tensor scale;
  double scale_floor = 0.11;
  double likelihood_floor = 1e-9;

  static FactorizedModel make(std::size_t channels, double initial_scale = 1.0);
  std::size_t channels() const { return mean.numel(); }
  void clamp_scales();
  void validate() const;
};

struct RateResult {
  Tensor bits;  // same shape as the input values
  double total_bits = 0.0;
};

// Adds an independent U(-0.5, 0.5) draw to every element. The open interval
// is strict on both ends. Deterministic in `seed`.
Tensor add_uniform_noise(const Tensor& y, std::uint64_t seed);

// Round half away from zero.
Tensor quantize_round(const Tensor& y);

// Standard normal CDF.
double normal_cdf(double x);

// Probability mass of N(0, sigma) on [v - 0.5, v + 0.5], clamped.
double gaussian_bin_likelihood(double v, double sigma,
                               double likelihood_floor);

RateResult gaussian_rate(const Tensor& values, const Tensor& sigma,
                         const GaussianConditionalModel& model);

struct GaussianRateGrads {
  Tensor values;
  Tensor sigma;
};

// Gradient of `upstream * total_bits` with respect to values and sigma.
GaussianRateGrads gaussian_rate_backward(const Tensor& values,
                                         const Tensor& sigma,
                                         const GaussianConditionalModel& model,
                                         double upstream);

// values has shape (n, C, h, w) with C == model.channels(). Channels whose
// `active` entry is false are treated as absent: zero bits, zero gradient.
// An empty `active` means all channels are coded.
RateResult factorized_rate(const Tensor& values, const FactorizedModel& model,
                           const std::vector<bool>& active = {});

// Returns d(upstream * total_bits)/d(values); accumulates the mean/scale
// gradients into model.mean.grad() / model.scale.grad() when
// `accumulate_model_grads` is set.
Tensor factorized_rate_backward(const Tensor& values, FactorizedModel& model,
                                double upstream, bool accumulate_model_grads,
                                const std::vector<bool>& active = {});

// Rate in bits per pixel plus lambda-weighted distortion.
double rd_loss(double rate_bits_total, double mse, double lambda,
               std::size_t num_pixels);

}  // namespace hyperslim
