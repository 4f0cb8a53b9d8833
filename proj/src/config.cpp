#include "hyperslim/config.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "hyperslim/error.hpp"
#include "json.hpp"

namespace hyperslim {
namespace {

using nlohmann::json;

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("'" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("'" + key + "' must be a string");
  return v.get<std::string>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

LayerSpec parse_layer(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": layer must be an object");
  reject_unknown(j, {"kind", "in", "out", "channels", "ks", "stride", "padding",
                     "output_padding", "alpha", "activation"},
                 where);
  if (!j.contains("kind")) throw ConfigError(where + ": missing 'kind'");
  const std::string kind_name = as_string(j["kind"], where + ".kind");
  const auto kind = layer_kind_from_name(kind_name);
  if (!kind) throw ConfigError(where + ": unknown layer kind '" + kind_name + "'");
  auto get = [&](const char* key, std::size_t fallback) {
    return j.contains(key) ? as_size(j[key], where + "." + key) : fallback;
  };
  if (*kind == LayerKind::kActivation) {
    const std::size_t ch = get("channels", get("in", 0));
    ActivationKind act = ActivationKind::kLeakyRelu;
    if (j.contains("activation")) {
      const std::string a = as_string(j["activation"], where + ".activation");
      if (a == "identity") {
        act = ActivationKind::kIdentity;
      } else if (a != "leaky_relu") {
        throw ConfigError(where + ": unknown activation '" + a + "'");
      }
    }
    return activation_spec(ch, act);
  }
  if (!j.contains("in") || !j.contains("out")) {
    throw ConfigError(where + ": weighted layers need 'in' and 'out'");
  }
  const std::size_t in = get("in", 0);
  const std::size_t out = get("out", 0);
  const std::size_t ks = get("ks", 3);
  const std::size_t stride = get("stride", 1);
  LayerSpec s;
  switch (*kind) {
    case LayerKind::kConv: s = conv_spec(in, out, ks, stride); break;
    case LayerKind::kDeconv: s = deconv_spec(in, out, ks, stride); break;
    case LayerKind::kPixelShuffleConv:
      s = pixelshuffle_conv_spec(in, out, ks, get("alpha", 2));
      if (stride != 1) throw ConfigError(where + ": pixelshuffle_conv uses stride 1");
      break;
    case LayerKind::kActivation: break;
  }
  s.padding = get("padding", s.padding);
  s.output_padding = get("output_padding", s.output_padding);
  return s;
}

json layer_json(const LayerSpec& s) {
  json j;
  j["kind"] = layer_kind_name(s.kind);
  if (s.kind == LayerKind::kActivation) {
    j["channels"] = s.in_channels;
    j["activation"] =
        s.activation == ActivationKind::kIdentity ? "identity" : "leaky_relu";
    return j;
  }
  j["in"] = s.in_channels;
  j["out"] = s.out_channels;
  j["ks"] = s.ks;
  j["stride"] = s.stride;
  j["padding"] = s.padding;
  if (s.kind == LayerKind::kDeconv) j["output_padding"] = s.output_padding;
  if (s.kind == LayerKind::kPixelShuffleConv) j["alpha"] = s.alpha;
  return j;
}

}  // namespace

void RunConfig::finalize() {
  network.seed = seed;
  pretrain.lambda = lambda;
  pretrain.seed = seed;
  prune.lambda = lambda;
  prune.seed = seed;
  if (prune.batch_size == 0) prune.batch_size = pretrain.batch_size;
  assign_prunable(network);
}

void RunConfig::validate() const {
  validate_config(network);
  pretrain.validate();
  prune.validate();
  if (!(manual_ratio > 0.0 && manual_ratio <= 1.0)) {
    throw ConfigError("manual_ratio must lie in (0, 1]");
  }
  if (!(reduction_floor >= 0.0 && reduction_floor <= 1.0)) {
    throw ConfigError("reduction_floor must lie in [0, 1]");
  }
  if (patch_size == 0 || patch_size % kDownsampleFactor != 0) {
    throw ConfigError("patch_size must be a positive multiple of 64");
  }
  if (num_patches == 0) throw ConfigError("num_patches must be >= 1");
  if (train_dir.empty() && (synthetic_train == 0 || synthetic_size < patch_size)) {
    throw ConfigError("synthetic data needs images at least patch_size wide");
  }
  if (val_dir.empty() && synthetic_val == 0) {
    throw ConfigError("synthetic_val must be >= 1");
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : root.items()) {
    (void)value;
    const bool known = std::any_of(std::begin(kRunConfigKeys), std::end(kRunConfigKeys),
                                   [&](const char* k) { return key == k; });
    if (!known) throw ConfigError("config: unknown key '" + key + "'");
  }

  RunConfig cfg;
  auto size_or = [&](const char* key, std::size_t fallback) {
    return root.contains(key) ? as_size(root[key], key) : fallback;
  };
  auto real_or = [&](const char* key, double fallback) {
    return root.contains(key) ? as_double(root[key], key) : fallback;
  };
  const std::size_t n = size_or("N", cfg.network.n);
  const std::size_t m = size_or("M", cfg.network.m);
  cfg.network = default_hyperprior_config(n, m);
  if (root.contains("paths")) {
    const json& paths = root["paths"];
    if (!paths.is_object()) throw ConfigError("'paths' must be an object");
    for (const auto& [name, layers] : paths.items()) {
      const auto pid = path_from_name(name);
      if (!pid) throw ConfigError("paths: unknown path '" + name + "'");
      if (!layers.is_array()) throw ConfigError("paths." + name + " must be an array");
      auto& specs = cfg.network.path(*pid);
      specs.clear();
      for (std::size_t i = 0; i < layers.size(); ++i) {
        specs.push_back(
            parse_layer(layers[i], "paths." + name + "[" + std::to_string(i) + "]"));
      }
    }
  }
  cfg.network.conditional.scale_floor = real_or("scale_floor", 0.11);
  cfg.network.conditional.likelihood_floor = real_or("likelihood_floor", 1e-9);
  cfg.network.hyper_prior_scale_floor = cfg.network.conditional.scale_floor;
  cfg.network.hyper_prior_likelihood_floor = cfg.network.conditional.likelihood_floor;

  cfg.lambda = real_or("lambda", cfg.lambda);
  if (root.contains("seed")) cfg.seed = as_size(root["seed"], "seed");

  cfg.pretrain.steps = size_or("pretrain_steps", 5000);
  cfg.pretrain.lr = real_or("pretrain_lr", 1e-4);
  cfg.pretrain.batch_size = size_or("batch_size", cfg.pretrain.batch_size);

  cfg.prune.beta = real_or("beta", cfg.prune.beta);
  cfg.prune.prune_target = real_or("prune_target", cfg.prune.prune_target);
  cfg.prune.threshold = real_or("threshold", cfg.prune.threshold);
  cfg.prune.selection_interval =
      size_or("selection_interval", cfg.prune.selection_interval);
  cfg.prune.max_steps = size_or("prune_steps", cfg.prune.max_steps);
  cfg.prune.lr = real_or("prune_lr", cfg.prune.lr);
  cfg.prune.min_keep = size_or("min_keep", cfg.prune.min_keep);
  cfg.prune.plateau_sweeps = size_or("plateau_sweeps", cfg.prune.plateau_sweeps);
  cfg.prune.finetune_steps = size_or("finetune_steps", cfg.prune.finetune_steps);
  cfg.prune.finetune_lr = real_or("finetune_lr", cfg.prune.finetune_lr);
  cfg.prune.batch_size = cfg.pretrain.batch_size;
  if (root.contains("optimizer")) {
    const std::string opt = as_string(root["optimizer"], "optimizer");
    if (opt == "adam") {
      cfg.prune.optimizer = cfg.pretrain.optimizer = OptimizerKind::kAdam;
    } else if (opt == "sgd") {
      cfg.prune.optimizer = cfg.pretrain.optimizer = OptimizerKind::kSgd;
    } else {
      throw ConfigError("optimizer must be 'adam' or 'sgd'");
    }
  }
  cfg.manual_ratio = real_or("manual_ratio", cfg.manual_ratio);
  cfg.reduction_floor = real_or("reduction_floor", cfg.reduction_floor);
  if (root.contains("train_dir")) cfg.train_dir = as_string(root["train_dir"], "train_dir");
  if (root.contains("val_dir")) cfg.val_dir = as_string(root["val_dir"], "val_dir");
  cfg.synthetic_train = size_or("synthetic_train", cfg.synthetic_train);
  cfg.synthetic_val = size_or("synthetic_val", cfg.synthetic_val);
  cfg.synthetic_size = size_or("synthetic_size", cfg.synthetic_size);
  cfg.num_patches = size_or("num_patches", cfg.num_patches);
  cfg.patch_size = size_or("patch_size", cfg.patch_size);

  cfg.finalize();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string() + ": cannot open config");
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  try {
    return parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

std::string run_config_json(const RunConfig& cfg) {
  json j;
  j["N"] = cfg.network.n;
  j["M"] = cfg.network.m;
  j["lambda"] = cfg.lambda;
  j["seed"] = cfg.seed;
  j["beta"] = cfg.prune.beta;
  j["prune_target"] = cfg.prune.prune_target;
  j["threshold"] = cfg.prune.threshold;
  j["selection_interval"] = cfg.prune.selection_interval;
  j["prune_steps"] = cfg.prune.max_steps;
  j["prune_lr"] = cfg.prune.lr;
  j["min_keep"] = cfg.prune.min_keep;
  j["plateau_sweeps"] = cfg.prune.plateau_sweeps;
  j["finetune_steps"] = cfg.prune.finetune_steps;
  j["finetune_lr"] = cfg.prune.finetune_lr;
  j["pretrain_steps"] = cfg.pretrain.steps;
  j["pretrain_lr"] = cfg.pretrain.lr;
  j["batch_size"] = cfg.pretrain.batch_size;
  j["optimizer"] = cfg.pretrain.optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  j["manual_ratio"] = cfg.manual_ratio;
  j["reduction_floor"] = cfg.reduction_floor;
  j["train_dir"] = cfg.train_dir;
  j["val_dir"] = cfg.val_dir;
  j["synthetic_train"] = cfg.synthetic_train;
  j["synthetic_val"] = cfg.synthetic_val;
  j["synthetic_size"] = cfg.synthetic_size;
  j["num_patches"] = cfg.num_patches;
  j["patch_size"] = cfg.patch_size;
  j["scale_floor"] = cfg.network.conditional.scale_floor;
  j["likelihood_floor"] = cfg.network.conditional.likelihood_floor;
  json paths = json::object();
  for (PathId p : kAllPaths) {
    json layers = json::array();
    for (const LayerSpec& s : cfg.network.path(p)) layers.push_back(layer_json(s));
    paths[path_name(p)] = layers;
  }
  j["paths"] = paths;
  return j.dump(2) + "\n";
}

}  // namespace hyperslim
