#include "hyperslim/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hyperslim/error.hpp"

namespace hyperslim {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// Bin mass and its partial derivatives for a Gaussian centred at `mean`.
// Evaluated on the lower tail via |v - mean| so that far-tail bins keep
// their relative precision.
struct BinMass {
  double p;       // unclamped mass
  double dp_dv;   // d p / d v
  double dp_ds;   // d p / d scale
};

BinMass bin_mass(double v, double mean, double scale) {
  const double offset = v - mean;
  const double d = std::abs(offset);
  const double upper = (0.5 - d) / scale;
  const double lower = (-0.5 - d) / scale;
  const double phi_u = normal_pdf(upper);
  const double phi_l = normal_pdf(lower);
  const double p = normal_cdf(upper) - normal_cdf(lower);
  const double dp_dd = (phi_l - phi_u) / scale;
  const double sign = offset > 0.0 ? 1.0 : (offset < 0.0 ? -1.0 : 0.0);
  return BinMass{p, sign * dp_dd, (lower * phi_l - upper * phi_u) / scale};
}

double bits_from_mass(double p, double floor) {
  return -std::log2(std::max(p, floor));
}

// d bits / d p, zero where the floor clamp is active.
double dbits_dp(double p, double floor) {
  return p > floor ? -1.0 / (p * std::numbers::ln2) : 0.0;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ValidationError(std::string(op) + ": shape " +
                          shape_to_string(a.shape()) + " vs " +
                          shape_to_string(b.shape()));
  }
}

void require_channels(const Tensor& values, const FactorizedModel& model,
                      const char* op) {
  if (values.rank() != 4) throw ShapeError(op, "rank", 4, values.rank());
  if (values.c() != model.channels()) {
    throw ShapeError(op, "channels", model.channels(), values.c());
  }
}

void require_mask(const std::vector<bool>& active, const FactorizedModel& model,
                  const char* op) {
  if (!active.empty() && active.size() != model.channels()) {
    throw ShapeError(op, "channel mask length", model.channels(), active.size());
  }
}

}  // namespace

void GaussianConditionalModel::validate() const {
  if (!(scale_floor > 0.0) || !(likelihood_floor > 0.0)) {
    throw ConfigError("GaussianConditionalModel: floors must be positive");
  }
}

FactorizedModel FactorizedModel::make(std::size_t channels,
                                      double initial_scale) {
  FactorizedModel model;
  model.mean = Tensor({channels}, 0.0);
  model.scale = Tensor({channels}, initial_scale);
  return model;
}

void FactorizedModel::clamp_scales() {
  for (double& s : scale.data()) s = std::max(s, scale_floor);
}

void FactorizedModel::validate() const {
  if (!(scale_floor > 0.0) || !(likelihood_floor > 0.0)) {
    throw ConfigError("FactorizedModel: floors must be positive");
  }
  if (mean.numel() != scale.numel()) {
    throw ShapeError("FactorizedModel", "scale length", mean.numel(),
                     scale.numel());
  }
}

Tensor add_uniform_noise(const Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor out(y.shape(), y.values());
  constexpr double kUnit = 1.0 / 9007199254740992.0;  // 2^-53
  for (double& v : out.data()) {
    // Midpoint of one of 2^53 equal cells: strictly inside (0, 1).
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * kUnit;
    v += u - 0.5;
  }
  return out;
}

Tensor quantize_round(const Tensor& y) {
  Tensor out(y.shape(), y.values());
  for (double& v : out.data()) v = std::round(v);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double gaussian_bin_likelihood(double v, double sigma,
                               double likelihood_floor) {
  return std::max(bin_mass(v, 0.0, sigma).p, likelihood_floor);
}

RateResult gaussian_rate(const Tensor& values, const Tensor& sigma,
                         const GaussianConditionalModel& model) {
  require_same_shape(values, sigma, "gaussian_rate");
  model.validate();
  RateResult result{Tensor(values.shape()), 0.0};
  for (std::size_t i = 0; i < values.numel(); ++i) {
    const double s = std::max(sigma[i], model.scale_floor);
    const double bits =
        bits_from_mass(bin_mass(values[i], 0.0, s).p, model.likelihood_floor);
    result.bits[i] = bits;
    result.total_bits += bits;
  }
  return result;
}

GaussianRateGrads gaussian_rate_backward(const Tensor& values,
                                         const Tensor& sigma,
                                         const GaussianConditionalModel& model,
                                         double upstream) {
  require_same_shape(values, sigma, "gaussian_rate_backward");
  GaussianRateGrads grads{Tensor(values.shape()), Tensor(values.shape())};
  for (std::size_t i = 0; i < values.numel(); ++i) {
    const bool clamped = sigma[i] < model.scale_floor;
    const double s = clamped ? model.scale_floor : sigma[i];
    const BinMass m = bin_mass(values[i], 0.0, s);
    const double g = upstream * dbits_dp(m.p, model.likelihood_floor);
    grads.values[i] = g * m.dp_dv;
    grads.sigma[i] = clamped ? 0.0 : g * m.dp_ds;
  }
  return grads;
}

RateResult factorized_rate(const Tensor& values, const FactorizedModel& model,
                           const std::vector<bool>& active) {
  require_channels(values, model, "factorized_rate");
  require_mask(active, model, "factorized_rate");
  model.validate();
  RateResult result{Tensor(values.shape()), 0.0};
  const std::size_t plane = values.h() * values.w();
  std::size_t i = 0;
  for (std::size_t n = 0; n < values.n(); ++n) {
    for (std::size_t c = 0; c < values.c(); ++c) {
      const double mu = model.mean[c];
      const double s = std::max(model.scale[c], model.scale_floor);
      if (!active.empty() && !active[c]) {
        i += plane;
        continue;
      }
      for (std::size_t k = 0; k < plane; ++k, ++i) {
        const double bits = bits_from_mass(bin_mass(values[i], mu, s).p,
                                           model.likelihood_floor);
        result.bits[i] = bits;
        result.total_bits += bits;
      }
    }
  }
  return result;
}

Tensor factorized_rate_backward(const Tensor& values, FactorizedModel& model,
                                double upstream, bool accumulate_model_grads,
                                const std::vector<bool>& active) {
  require_channels(values, model, "factorized_rate_backward");
  require_mask(active, model, "factorized_rate_backward");
  Tensor grad(values.shape());
  std::span<double> mean_grad;
  std::span<double> scale_grad;
  if (accumulate_model_grads) {
    mean_grad = model.mean.grad();
    scale_grad = model.scale.grad();
  }
  const std::size_t plane = values.h() * values.w();
  std::size_t i = 0;
  for (std::size_t n = 0; n < values.n(); ++n) {
    for (std::size_t c = 0; c < values.c(); ++c) {
      const double mu = model.mean[c];
      if (!active.empty() && !active[c]) {
        i += plane;
        continue;
      }
      const bool clamped = model.scale[c] < model.scale_floor;
      const double s = clamped ? model.scale_floor : model.scale[c];
      double dmu = 0.0;
      double ds = 0.0;
      for (std::size_t k = 0; k < plane; ++k, ++i) {
        const BinMass m = bin_mass(values[i], mu, s);
        const double g = upstream * dbits_dp(m.p, model.likelihood_floor);
        grad[i] = g * m.dp_dv;
        dmu -= g * m.dp_dv;
        ds += g * m.dp_ds;
      }
      if (accumulate_model_grads) {
        mean_grad[c] += dmu;
        if (!clamped) scale_grad[c] += ds;
      }
    }
  }
  return grad;
}

double rd_loss(double rate_bits_total, double mse, double lambda,
               std::size_t num_pixels) {
  if (num_pixels == 0) throw ValidationError("rd_loss: num_pixels must be > 0");
  return rate_bits_total / static_cast<double>(num_pixels) + lambda * mse;
}

}  // namespace hyperslim
