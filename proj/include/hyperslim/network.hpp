#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hyperslim/compactor.hpp"
#include "hyperslim/entropy.hpp"
#include "hyperslim/ops.hpp"
#include "hyperslim/tensor.hpp"

namespace hyperslim {

// The four subnetworks of a hyperprior codec: g_a, g_s (main path) and
// h_a, h_s (hyper path).
enum class PathId : std::size_t {
  kMainEncoder = 0,
  kMainDecoder = 1,
  kHyperEncoder = 2,
  kHyperDecoder = 3,
};

inline constexpr std::array<PathId, 4> kAllPaths = {
    PathId::kMainEncoder, PathId::kMainDecoder, PathId::kHyperEncoder,
    PathId::kHyperDecoder};

const char* path_name(PathId path);
std::optional<PathId> path_from_name(const std::string& name);
inline bool is_hyper_path(PathId p) {
  return p == PathId::kHyperEncoder || p == PathId::kHyperDecoder;
}

enum class LayerKind { kConv, kDeconv, kPixelShuffleConv, kActivation };

const char* layer_kind_name(LayerKind kind);
std::optional<LayerKind> layer_kind_from_name(const std::string& name);

struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  std::size_t in_channels = 0;
  // For kPixelShuffleConv this is the channel count after the shuffle; the
  // conv itself produces alpha^2 times as many.
  std::size_t out_channels = 0;
  std::size_t ks = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t output_padding = 0;
  std::size_t alpha = 1;
  ActivationKind activation = ActivationKind::kLeakyRelu;
  PathId path = PathId::kMainEncoder;
  bool prunable = false;
  bool frozen = false;

  bool has_weights() const { return kind != LayerKind::kActivation; }
  std::size_t conv_out_channels() const {
    return kind == LayerKind::kPixelShuffleConv ? alpha * alpha * out_channels
                                                : out_channels;
  }
  Placement compactor_placement() const;
};

LayerSpec conv_spec(std::size_t in, std::size_t out, std::size_t ks,
                    std::size_t stride);
LayerSpec deconv_spec(std::size_t in, std::size_t out, std::size_t ks,
                      std::size_t stride);
LayerSpec pixelshuffle_conv_spec(std::size_t in, std::size_t out,
                                 std::size_t ks, std::size_t alpha);
LayerSpec activation_spec(std::size_t channels,
                          ActivationKind kind = ActivationKind::kLeakyRelu);

struct Layer {
  LayerSpec spec;
  ConvWeights params;  // empty for activations
  std::optional<Compactor> compactor;

  std::size_t parameter_count() const {
    return spec.has_weights() ? params.parameter_count() : 0;
  }
};

struct NetworkConfig {
  std::size_t n = 32;  // internal width N
  std::size_t m = 48;  // latent width M
  std::array<std::vector<LayerSpec>, 4> paths;
  GaussianConditionalModel conditional;
  double hyper_prior_scale_floor = 0.11;
  double hyper_prior_likelihood_floor = 1e-9;
  std::uint64_t seed = 0;

  std::vector<LayerSpec>& path(PathId p) {
    return paths[static_cast<std::size_t>(p)];
  }
  const std::vector<LayerSpec>& path(PathId p) const {
    return paths[static_cast<std::size_t>(p)];
  }
};

// Tags every layer with its path and marks the hyper-path layers with
// weights as prunable, except the last weighted hyper-decoder layer.
void assign_prunable(NetworkConfig& config);

// Desk-scale topology: four stride-2 ks5 convs / deconvs on the main path,
// h_a = conv3 s1, conv5 s2, conv5 s2 and h_s = deconv5 s2,
// PixelShuffle-conv (alpha 2, ks3), conv3 s1.
NetworkConfig default_hyperprior_config(std::size_t n = 32, std::size_t m = 48);

// The widely used scale-hyperprior layout where h_s upsamples with two
// deconvolutions. Used for parameter accounting at published widths.
NetworkConfig reference_hyperprior_config(std::size_t n, std::size_t m);

// Product of all strides on the analysis side.
inline constexpr std::size_t kDownsampleFactor = 64;

// Distortion is the MSE of images on the 0..255 scale.
inline constexpr double kDistortionScale = 255.0 * 255.0;

class Network {
 public:
  Network() = default;

  std::vector<Layer>& path(PathId p) { return paths_[static_cast<std::size_t>(p)]; }
  const std::vector<Layer>& path(PathId p) const {
    return paths_[static_cast<std::size_t>(p)];
  }

  FactorizedModel& hyper_prior() { return hyper_prior_; }
  const FactorizedModel& hyper_prior() const { return hyper_prior_; }
  GaussianConditionalModel& conditional() { return conditional_; }
  const GaussianConditionalModel& conditional() const { return conditional_; }

  bool hyper_prior_frozen() const { return hyper_prior_frozen_; }
  void set_hyper_prior_frozen(bool frozen) { hyper_prior_frozen_ = frozen; }
  void set_path_frozen(PathId p, bool frozen);
  void freeze_all();

  std::size_t latent_channels() const;
  std::size_t hyper_latent_channels() const;

  // Weights, biases and compactors of unfrozen layers, then the hyper prior
  // parameters if unfrozen. Order is stable for a given topology.
  std::vector<Tensor*> trainable_parameters();
  void zero_grad();
  // Re-applies compactor masks and the hyper prior scale clamp.
  void enforce_constraints();

  // Throws ConfigError naming the first inconsistent layer.
  void validate() const;

  // Runs one path without caching. Compactors are applied.
  Tensor run_path(PathId p, const Tensor& input) const;

  // Channels of z that are still coded. Rows soft-pruned by the compactor
  // on the last hyper-encoder layer are excluded from noise and rate, exactly
  // as if the channel had been removed. Empty when no such compactor exists.
  std::vector<bool> hyper_latent_mask() const;

  std::vector<const Compactor*> compactors() const;
  std::size_t compactor_count() const;

 private:
  friend Network build_hyperprior(const NetworkConfig& config);

  std::array<std::vector<Layer>, 4> paths_;
  FactorizedModel hyper_prior_;
  GaussianConditionalModel conditional_;
  bool hyper_prior_frozen_ = false;
};

// Throws ConfigError for inconsistent channel chains or rule violations.
Network build_hyperprior(const NetworkConfig& config);

// Checks a config without allocating weights.
void validate_config(const NetworkConfig& config);

// sigma = |raw| + floor
Tensor scale_head(const Tensor& raw, double floor);

struct PathCache {
  std::vector<Tensor> inputs;  // per layer
  std::vector<Tensor> hosts;   // host output fed to the compactor, if any
};

struct TrainForward {
  Tensor x;
  Tensor x_tilde;
  Tensor y;
  Tensor y_tilde;
  Tensor z;
  Tensor z_tilde;
  std::vector<bool> z_mask;
  Tensor sigma_raw;
  Tensor sigma;
  double rate_y_bits = 0.0;
  double rate_z_bits = 0.0;
  double mse = 0.0;  // 0..255 scale
  std::size_t num_pixels = 0;
  bool decoded = true;  // false when only the hyper path was run
  std::array<PathCache, 4> caches;
};

struct RdTerms {
  double rate_bpp = 0.0;
  double distortion = 0.0;  // lambda * mse
  double mse = 0.0;
  double rate_y_bits = 0.0;
  double rate_z_bits = 0.0;
  double loss = 0.0;
};

// Spatial dims of x must be multiples of kDownsampleFactor.
void require_codec_input(const Tensor& x);

// Noisy-quantization forward pass. Latent noise is drawn from `seed`.
TrainForward forward_train(const Network& net, const Tensor& x,
                           std::uint64_t seed);

// Hyper-path-only variant for a frozen main path: starts from a given latent
// y (the encoder output for `num_pixels` image pixels) and skips the
// decoder, so mse is left at zero. Uses the same noise streams as
// forward_train, so rates agree bit for bit.
TrainForward forward_train_latent(const Network& net, const Tensor& y,
                                  std::size_t num_pixels, std::uint64_t seed);

// Back-propagates R/P + lambda * D into every unfrozen parameter. Gradients
// accumulate; call Network::zero_grad() first.
RdTerms backward_rd(Network& net, const TrainForward& fwd, double lambda);

RdTerms rd_terms(const TrainForward& fwd, double lambda);

struct EvalResult {
  Tensor x_hat;
  Tensor y_hat;
  Tensor z_hat;
  Tensor sigma;
  double rate_y_bits = 0.0;
  double rate_z_bits = 0.0;
  double mse = 0.0;  // 0..255 scale
};

// Hard-rounding forward pass. Deterministic.
EvalResult forward_eval(const Network& net, const Tensor& x);

enum class CountScope { kTotal, kMainPath, kHyperPath };

std::size_t count_parameters(const Network& net, CountScope scope);
std::size_t count_parameters(const std::vector<Layer>& layers);

struct LayerCount {
  PathId path;
  std::size_t index;
  std::size_t parameters;
};
std::vector<LayerCount> count_parameters_per_layer(const Network& net);

}  // namespace hyperslim
