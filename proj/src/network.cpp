#include "hyperslim/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hyperslim/error.hpp"
#include "hyperslim/random.hpp"

namespace hyperslim {
namespace {

std::string layer_label(PathId p, std::size_t index) {
  return std::string(path_name(p)) + "[" + std::to_string(index) + "]";
}

std::size_t first_trainable(const std::vector<Layer>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].spec.has_weights() && !layers[i].spec.frozen) return i;
  }
  return layers.size();
}

bool path_trainable(const std::vector<Layer>& layers) {
  return first_trainable(layers) < layers.size();
}

Tensor run_layer(const Layer& layer, const Tensor& input, Tensor* host_out) {
  Tensor out;
  switch (layer.spec.kind) {
    case LayerKind::kActivation:
      return activation(input, layer.spec.activation);
    case LayerKind::kConv:
      out = conv2d(input, layer.params);
      break;
    case LayerKind::kDeconv:
      out = deconv2d(input, layer.params);
      break;
    case LayerKind::kPixelShuffleConv:
      out = pixel_shuffle(conv2d(input, layer.params), layer.spec.alpha);
      break;
  }
  if (!layer.compactor) return out;
  Tensor mixed = channel_mix(out, layer.compactor->r);
  if (host_out != nullptr) *host_out = std::move(out);
  return mixed;
}

Tensor run_path_cached(const std::vector<Layer>& layers, const Tensor& input,
                       PathCache& cache) {
  cache.inputs.resize(layers.size());
  cache.hosts.assign(layers.size(), Tensor());
  Tensor current = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    cache.inputs[i] = current;
    current = run_layer(layers[i], current, &cache.hosts[i]);
  }
  return current;
}

void accumulate(Tensor& param, const Tensor& grad) {
  auto g = param.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
}

// Returns the gradient w.r.t. the path input, or an empty tensor when
// `need_input_grad` is false.
Tensor backward_path(std::vector<Layer>& layers, const PathCache& cache,
                     Tensor grad, bool need_input_grad) {
  const std::size_t first = first_trainable(layers);
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (!need_input_grad && i < first) return Tensor();
    Layer& layer = layers[i];
    const Tensor& input = cache.inputs[i];
    const bool need_dx = need_input_grad || first < i;
    if (layer.spec.kind == LayerKind::kActivation) {
      grad = activation_backward(input, grad, layer.spec.activation);
      continue;
    }
    const bool trainable = !layer.spec.frozen;
    if (layer.compactor) {
      grad = channel_mix_backward(
          cache.hosts[i], layer.compactor->r, grad,
          trainable ? layer.compactor->r.grad() : std::span<double>());
    }
    if (layer.spec.kind == LayerKind::kPixelShuffleConv) {
      grad = pixel_unshuffle(grad, layer.spec.alpha);
    }
    ConvGrads cg = layer.spec.kind == LayerKind::kDeconv
                       ? deconv2d_backward(input, layer.params, grad, need_dx,
                                           trainable)
                       : conv2d_backward(input, layer.params, grad, need_dx,
                                         trainable);
    if (trainable) {
      accumulate(layer.params.weight, cg.weight);
      accumulate(layer.params.bias, cg.bias);
    }
    grad = std::move(cg.input);
  }
  return need_input_grad ? grad : Tensor();
}

void add_into(Tensor& dst, const Tensor& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

void init_weights(Layer& layer, std::mt19937_64& rng) {
  const LayerSpec& s = layer.spec;
  if (s.kind == LayerKind::kDeconv) {
    layer.params = make_deconv(s.in_channels, s.out_channels, s.ks, s.stride,
                               s.padding, s.output_padding);
  } else {
    layer.params = make_conv(s.in_channels, s.conv_out_channels(), s.ks,
                             s.stride, s.padding);
  }
  // Uniform with variance 1/fan_in; a transposed conv with stride s sees
  // roughly ks^2/s^2 taps per input channel.
  double fan_in = static_cast<double>(s.in_channels * s.ks * s.ks);
  if (s.kind == LayerKind::kDeconv) {
    fan_in /= static_cast<double>(s.stride * s.stride);
  }
  const double bound = std::sqrt(3.0 / fan_in);
  for (double& w : layer.params.weight.data()) {
    w = (2.0 * unit_uniform(rng) - 1.0) * bound;
  }
}

}  // namespace

const char* path_name(PathId path) {
  switch (path) {
    case PathId::kMainEncoder: return "main_encoder";
    case PathId::kMainDecoder: return "main_decoder";
    case PathId::kHyperEncoder: return "hyper_encoder";
    case PathId::kHyperDecoder: return "hyper_decoder";
  }
  return "unknown";
}

std::optional<PathId> path_from_name(const std::string& name) {
  for (PathId p : kAllPaths) {
    if (name == path_name(p)) return p;
  }
  return std::nullopt;
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kDeconv: return "deconv";
    case LayerKind::kPixelShuffleConv: return "pixelshuffle_conv";
    case LayerKind::kActivation: return "activation";
  }
  return "unknown";
}

std::optional<LayerKind> layer_kind_from_name(const std::string& name) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kDeconv,
                      LayerKind::kPixelShuffleConv, LayerKind::kActivation}) {
    if (name == layer_kind_name(k)) return k;
  }
  return std::nullopt;
}

Placement LayerSpec::compactor_placement() const {
  switch (kind) {
    case LayerKind::kDeconv: return Placement::kAfterDeconv;
    case LayerKind::kPixelShuffleConv: return Placement::kAfterShuffle;
    default: return Placement::kAfterConv;
  }
}

LayerSpec conv_spec(std::size_t in, std::size_t out, std::size_t ks,
                    std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.in_channels = in;
  s.out_channels = out;
  s.ks = ks;
  s.stride = stride;
  s.padding = ks / 2;
  return s;
}

LayerSpec deconv_spec(std::size_t in, std::size_t out, std::size_t ks,
                      std::size_t stride) {
  LayerSpec s = conv_spec(in, out, ks, stride);
  s.kind = LayerKind::kDeconv;
  s.output_padding = stride - 1;
  return s;
}

LayerSpec pixelshuffle_conv_spec(std::size_t in, std::size_t out,
                                 std::size_t ks, std::size_t alpha) {
  LayerSpec s = conv_spec(in, out, ks, 1);
  s.kind = LayerKind::kPixelShuffleConv;
  s.alpha = alpha;
  return s;
}

LayerSpec activation_spec(std::size_t channels, ActivationKind kind) {
  LayerSpec s;
  s.kind = LayerKind::kActivation;
  s.in_channels = channels;
  s.out_channels = channels;
  s.activation = kind;
  return s;
}

void assign_prunable(NetworkConfig& config) {
  for (PathId p : kAllPaths) {
    auto& specs = config.path(p);
    std::size_t last_weighted = specs.size();
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].path = p;
      if (specs[i].has_weights()) last_weighted = i;
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      specs[i].prunable = is_hyper_path(p) && specs[i].has_weights() &&
                          !(p == PathId::kHyperDecoder && i == last_weighted);
    }
  }
}

NetworkConfig default_hyperprior_config(std::size_t n, std::size_t m) {
  NetworkConfig c;
  c.n = n;
  c.m = m;
  c.path(PathId::kMainEncoder) = {
      conv_spec(3, n, 5, 2), activation_spec(n), conv_spec(n, n, 5, 2),
      activation_spec(n),    conv_spec(n, n, 5, 2), activation_spec(n),
      conv_spec(n, m, 5, 2)};
  c.path(PathId::kMainDecoder) = {
      deconv_spec(m, n, 5, 2), activation_spec(n), deconv_spec(n, n, 5, 2),
      activation_spec(n),      deconv_spec(n, n, 5, 2), activation_spec(n),
      deconv_spec(n, 3, 5, 2)};
  c.path(PathId::kHyperEncoder) = {conv_spec(m, n, 3, 1), activation_spec(n),
                                   conv_spec(n, n, 5, 2), activation_spec(n),
                                   conv_spec(n, n, 5, 2)};
  c.path(PathId::kHyperDecoder) = {
      deconv_spec(n, n, 5, 2), activation_spec(n),
      pixelshuffle_conv_spec(n, n, 3, 2), activation_spec(n),
      conv_spec(n, m, 3, 1)};
  assign_prunable(c);
  return c;
}

NetworkConfig reference_hyperprior_config(std::size_t n, std::size_t m) {
  NetworkConfig c = default_hyperprior_config(n, m);
  c.path(PathId::kHyperDecoder) = {deconv_spec(n, n, 5, 2), activation_spec(n),
                                   deconv_spec(n, n, 5, 2), activation_spec(n),
                                   conv_spec(n, m, 3, 1)};
  assign_prunable(c);
  return c;
}

void validate_config(const NetworkConfig& config) {
  config.conditional.validate();
  if (config.m == 0 || config.n == 0) throw ConfigError("N and M must be positive");
  const auto& ha = config.path(PathId::kHyperEncoder);
  std::size_t hyper_latent = config.m;
  for (const auto& s : ha) hyper_latent = s.out_channels;
  const std::array<std::pair<std::size_t, std::size_t>, 4> ends = {{
      {3, config.m},
      {config.m, 3},
      {config.m, hyper_latent},
      {hyper_latent, config.m},
  }};
  for (PathId p : kAllPaths) {
    const auto& specs = config.path(p);
    const auto [first, last] = ends[static_cast<std::size_t>(p)];
    if (specs.empty()) {
      if (first != last) {
        throw ConfigError(std::string(path_name(p)) +
                          ": empty path cannot map " + std::to_string(first) +
                          " to " + std::to_string(last) + " channels");
      }
      continue;
    }
    std::size_t current = first;
    std::size_t last_weighted = specs.size();
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const LayerSpec& s = specs[i];
      const std::string label = layer_label(p, i) + " (" +
                                layer_kind_name(s.kind) + ")";
      if (s.in_channels != current) {
        throw ConfigError(label + ": in_channels " +
                          std::to_string(s.in_channels) + ", expected " +
                          std::to_string(current));
      }
      if (s.kind == LayerKind::kActivation && s.out_channels != s.in_channels) {
        throw ConfigError(label + ": activation must preserve channel count");
      }
      if (s.has_weights()) {
        last_weighted = i;
        if (s.ks == 0 || s.stride == 0) {
          throw ConfigError(label + ": kernel size and stride must be positive");
        }
        if (s.out_channels == 0) throw ConfigError(label + ": zero out_channels");
      }
      if (s.kind == LayerKind::kPixelShuffleConv && s.alpha < 1) {
        throw ConfigError(label + ": alpha must be >= 1");
      }
      if (s.kind == LayerKind::kDeconv && s.output_padding >= s.stride &&
          s.output_padding > 0) {
        throw ConfigError(label + ": output_padding must be < stride");
      }
      if (s.prunable && !is_hyper_path(p)) {
        throw ConfigError(label + ": only hyper-path layers may be prunable");
      }
      current = s.out_channels;
    }
    if (current != last) {
      throw ConfigError(std::string(path_name(p)) + ": final out_channels " +
                        std::to_string(current) + ", expected " +
                        std::to_string(last));
    }
    if (p == PathId::kHyperDecoder && last_weighted < specs.size() &&
        specs[last_weighted].prunable) {
      throw ConfigError(layer_label(p, last_weighted) +
                        ": the last hyper-decoder layer cannot be prunable");
    }
  }
}

Network build_hyperprior(const NetworkConfig& config) {
  validate_config(config);
  Network net;
  std::mt19937_64 rng(config.seed);
  for (PathId p : kAllPaths) {
    for (const LayerSpec& spec : config.path(p)) {
      Layer layer{spec, {}, std::nullopt};
      layer.spec.path = p;
      if (spec.has_weights()) init_weights(layer, rng);
      net.path(p).push_back(std::move(layer));
    }
  }
  net.conditional_ = config.conditional;
  net.hyper_prior_ = FactorizedModel::make(net.hyper_latent_channels());
  net.hyper_prior_.scale_floor = config.hyper_prior_scale_floor;
  net.hyper_prior_.likelihood_floor = config.hyper_prior_likelihood_floor;
  return net;
}

void Network::set_path_frozen(PathId p, bool frozen) {
  for (Layer& l : path(p)) l.spec.frozen = frozen;
}

void Network::freeze_all() {
  for (PathId p : kAllPaths) set_path_frozen(p, true);
  hyper_prior_frozen_ = true;
}

std::size_t Network::latent_channels() const {
  const auto& ga = path(PathId::kMainEncoder);
  return ga.empty() ? 3 : ga.back().spec.out_channels;
}

std::size_t Network::hyper_latent_channels() const {
  const auto& ha = path(PathId::kHyperEncoder);
  return ha.empty() ? latent_channels() : ha.back().spec.out_channels;
}

std::vector<Tensor*> Network::trainable_parameters() {
  std::vector<Tensor*> params;
  for (PathId p : kAllPaths) {
    for (Layer& l : path(p)) {
      if (!l.spec.has_weights() || l.spec.frozen) continue;
      params.push_back(&l.params.weight);
      params.push_back(&l.params.bias);
      if (l.compactor) params.push_back(&l.compactor->r);
    }
  }
  if (!hyper_prior_frozen_) {
    params.push_back(&hyper_prior_.mean);
    params.push_back(&hyper_prior_.scale);
  }
  return params;
}

void Network::zero_grad() {
  for (Tensor* t : trainable_parameters()) {
    t->grad();
    t->zero_grad();
  }
}

void Network::enforce_constraints() {
  for (PathId p : kAllPaths) {
    for (Layer& l : path(p)) {
      if (l.compactor) l.compactor->apply_mask();
    }
  }
  hyper_prior_.clamp_scales();
}

void Network::validate() const {
  NetworkConfig c;
  c.m = latent_channels();
  c.n = std::max<std::size_t>(c.m, 1);
  c.conditional = conditional_;
  for (PathId p : kAllPaths) {
    for (const Layer& l : path(p)) {
      c.path(p).push_back(l.spec);
      if (!l.spec.has_weights()) continue;
      const std::string label = std::string(path_name(p)) + " layer";
      l.params.validate(label.c_str());
      if (l.params.in_channels() != l.spec.in_channels) {
        throw ShapeError(label, "weight in_channels", l.spec.in_channels,
                         l.params.in_channels());
      }
      if (l.params.out_channels() != l.spec.conv_out_channels()) {
        throw ShapeError(label, "weight out_channels",
                         l.spec.conv_out_channels(), l.params.out_channels());
      }
      if (l.compactor && l.compactor->channels() != l.spec.out_channels) {
        throw ShapeError(label, "compactor columns", l.spec.out_channels,
                         l.compactor->channels());
      }
    }
  }
  validate_config(c);
  if (hyper_prior_.channels() != hyper_latent_channels()) {
    throw ShapeError("hyper_prior", "channels", hyper_latent_channels(),
                     hyper_prior_.channels());
  }
}

Tensor Network::run_path(PathId p, const Tensor& input) const {
  Tensor current = input;
  for (const Layer& l : path(p)) current = run_layer(l, current, nullptr);
  return current;
}

std::vector<const Compactor*> Network::compactors() const {
  std::vector<const Compactor*> out;
  for (PathId p : kAllPaths) {
    for (const Layer& l : path(p)) {
      if (l.compactor) out.push_back(&*l.compactor);
    }
  }
  return out;
}

std::vector<bool> Network::hyper_latent_mask() const {
  const auto& ha = path(PathId::kHyperEncoder);
  for (std::size_t i = ha.size(); i-- > 0;) {
    if (!ha[i].spec.has_weights()) continue;
    if (ha[i].compactor) return ha[i].compactor->mask;
    break;
  }
  return {};
}

std::size_t Network::compactor_count() const { return compactors().size(); }

Tensor scale_head(const Tensor& raw, double floor) {
  Tensor sigma(raw.shape(), raw.values());
  for (double& v : sigma.data()) v = std::abs(v) + floor;
  return sigma;
}

void require_codec_input(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("codec input", "rank", 4, x.rank());
  if (x.c() != 3) throw ShapeError("codec input", "channels", 3, x.c());
  if (x.h() == 0 || x.h() % kDownsampleFactor != 0) {
    throw ShapeError("codec input", "height modulo 64", 0,
                     x.h() % kDownsampleFactor);
  }
  if (x.w() == 0 || x.w() % kDownsampleFactor != 0) {
    throw ShapeError("codec input", "width modulo 64", 0,
                     x.w() % kDownsampleFactor);
  }
}

namespace {
double mse_255(const Tensor& a, const Tensor& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return kDistortionScale * sum / static_cast<double>(a.numel());
}
void zero_channels(Tensor& t, const std::vector<bool>& keep) {
  if (keep.empty()) return;
  const std::size_t plane = t.h() * t.w();
  for (std::size_t n = 0; n < t.n(); ++n) {
    for (std::size_t c = 0; c < t.c(); ++c) {
      if (keep[c]) continue;
      double* p = t.data().data() + (n * t.c() + c) * plane;
      std::fill(p, p + plane, 0.0);
    }
  }
}
}  // namespace

namespace {
void run_hyper(const Network& net, TrainForward& f, std::uint64_t seed) {
  auto cache = [&](PathId p) -> PathCache& {
    return f.caches[static_cast<std::size_t>(p)];
  };
  f.y_tilde = add_uniform_noise(f.y, mix_seed(seed, 1));
  f.z = run_path_cached(net.path(PathId::kHyperEncoder), f.y,
                        cache(PathId::kHyperEncoder));
  f.z_tilde = add_uniform_noise(f.z, mix_seed(seed, 2));
  f.z_mask = net.hyper_latent_mask();
  zero_channels(f.z_tilde, f.z_mask);
  f.sigma_raw = run_path_cached(net.path(PathId::kHyperDecoder), f.z_tilde,
                                cache(PathId::kHyperDecoder));
  f.sigma = scale_head(f.sigma_raw, net.conditional().scale_floor);
  f.rate_y_bits = gaussian_rate(f.y_tilde, f.sigma, net.conditional()).total_bits;
  f.rate_z_bits =
      factorized_rate(f.z_tilde, net.hyper_prior(), f.z_mask).total_bits;
}
}  // namespace

TrainForward forward_train(const Network& net, const Tensor& x,
                           std::uint64_t seed) {
  require_codec_input(x);
  TrainForward f;
  f.x = x;
  f.num_pixels = x.n() * x.h() * x.w();
  auto cache = [&](PathId p) -> PathCache& {
    return f.caches[static_cast<std::size_t>(p)];
  };
  f.y = run_path_cached(net.path(PathId::kMainEncoder), x,
                        cache(PathId::kMainEncoder));
  run_hyper(net, f, seed);
  f.x_tilde = run_path_cached(net.path(PathId::kMainDecoder), f.y_tilde,
                              cache(PathId::kMainDecoder));
  f.mse = mse_255(f.x_tilde, x);
  return f;
}

TrainForward forward_train_latent(const Network& net, const Tensor& y,
                                  std::size_t num_pixels, std::uint64_t seed) {
  if (y.rank() != 4 || y.c() != net.latent_channels()) {
    throw ShapeError("forward_train_latent", "latent channels",
                     net.latent_channels(), y.rank() == 4 ? y.c() : 0);
  }
  if (num_pixels == 0) throw ValidationError("forward_train_latent: zero pixels");
  TrainForward f;
  f.y = y;
  f.num_pixels = num_pixels;
  f.decoded = false;
  run_hyper(net, f, seed);
  return f;
}

RdTerms rd_terms(const TrainForward& fwd, double lambda) {
  RdTerms t;
  const std::size_t pixels = fwd.num_pixels;
  t.rate_y_bits = fwd.rate_y_bits;
  t.rate_z_bits = fwd.rate_z_bits;
  t.rate_bpp = (fwd.rate_y_bits + fwd.rate_z_bits) / static_cast<double>(pixels);
  t.mse = fwd.mse;
  t.distortion = lambda * fwd.mse;
  t.loss = rd_loss(fwd.rate_y_bits + fwd.rate_z_bits, fwd.mse, lambda, pixels);
  return t;
}

RdTerms backward_rd(Network& net, const TrainForward& fwd, double lambda) {
  const RdTerms terms = rd_terms(fwd, lambda);
  const double inv_pixels = 1.0 / static_cast<double>(fwd.num_pixels);
  auto& ga = net.path(PathId::kMainEncoder);
  auto& gs = net.path(PathId::kMainDecoder);
  auto& ha = net.path(PathId::kHyperEncoder);
  auto& hs = net.path(PathId::kHyperDecoder);
  auto cache = [&](PathId p) -> const PathCache& {
    return fwd.caches[static_cast<std::size_t>(p)];
  };
  const bool ga_train = path_trainable(ga);
  const bool gs_train = path_trainable(gs);
  const bool ha_train = path_trainable(ha) || ga_train;
  const bool hs_train = path_trainable(hs) || ha_train;
  const bool prior_train = !net.hyper_prior_frozen();
  if (!fwd.decoded && (ga_train || gs_train)) {
    throw ValidationError(
        "backward_rd: a latent-only forward needs a frozen main path");
  }

  Tensor grad_y;
  if (gs_train || ga_train) {
    Tensor grad_x(fwd.x_tilde.shape());
    const double scale =
        lambda * kDistortionScale * 2.0 / static_cast<double>(fwd.x.numel());
    for (std::size_t i = 0; i < grad_x.numel(); ++i) {
      grad_x[i] = scale * (fwd.x_tilde[i] - fwd.x[i]);
    }
    add_into(grad_y, backward_path(gs, cache(PathId::kMainDecoder),
                                   std::move(grad_x), ga_train));
  }

  Tensor grad_z;
  if (hs_train || ga_train) {
    GaussianRateGrads g = gaussian_rate_backward(
        fwd.y_tilde, fwd.sigma, net.conditional(), inv_pixels);
    if (ga_train) add_into(grad_y, g.values);
    if (hs_train) {
      for (std::size_t i = 0; i < g.sigma.numel(); ++i) {
        const double r = fwd.sigma_raw[i];
        g.sigma[i] *= r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
      }
      add_into(grad_z, backward_path(hs, cache(PathId::kHyperDecoder),
                                     std::move(g.sigma), ha_train));
    }
  }

  if (prior_train || ha_train) {
    Tensor g = factorized_rate_backward(fwd.z_tilde, net.hyper_prior(),
                                        inv_pixels, prior_train, fwd.z_mask);
    if (ha_train) {
      add_into(grad_z, g);
      zero_channels(grad_z, fwd.z_mask);
      add_into(grad_y, backward_path(ha, cache(PathId::kHyperEncoder),
                                     std::move(grad_z), ga_train));
    }
  }

  if (ga_train) {
    backward_path(ga, cache(PathId::kMainEncoder), std::move(grad_y), false);
  }
  return terms;
}

EvalResult forward_eval(const Network& net, const Tensor& x) {
  require_codec_input(x);
  EvalResult r;
  const Tensor y = net.run_path(PathId::kMainEncoder, x);
  r.y_hat = quantize_round(y);
  r.z_hat = quantize_round(net.run_path(PathId::kHyperEncoder, y));
  const std::vector<bool> z_mask = net.hyper_latent_mask();
  zero_channels(r.z_hat, z_mask);
  r.sigma = scale_head(net.run_path(PathId::kHyperDecoder, r.z_hat),
                       net.conditional().scale_floor);
  r.rate_y_bits = gaussian_rate(r.y_hat, r.sigma, net.conditional()).total_bits;
  r.rate_z_bits = factorized_rate(r.z_hat, net.hyper_prior(), z_mask).total_bits;
  r.x_hat = net.run_path(PathId::kMainDecoder, r.y_hat);
  r.mse = mse_255(r.x_hat, x);
  return r;
}

std::size_t count_parameters(const std::vector<Layer>& layers) {
  std::size_t total = 0;
  for (const Layer& l : layers) total += l.parameter_count();
  return total;
}

std::size_t count_parameters(const Network& net, CountScope scope) {
  std::size_t total = 0;
  for (PathId p : kAllPaths) {
    const bool hyper = is_hyper_path(p);
    if ((scope == CountScope::kHyperPath && !hyper) ||
        (scope == CountScope::kMainPath && hyper)) {
      continue;
    }
    total += count_parameters(net.path(p));
  }
  return total;
}

std::vector<LayerCount> count_parameters_per_layer(const Network& net) {
  std::vector<LayerCount> out;
  for (PathId p : kAllPaths) {
    const auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].spec.has_weights()) {
        out.push_back({p, i, layers[i].parameter_count()});
      }
    }
  }
  return out;
}

}  // namespace hyperslim
