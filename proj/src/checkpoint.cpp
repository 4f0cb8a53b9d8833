#include "hyperslim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "hyperslim/error.hpp"

namespace hyperslim {
namespace {

static_assert(std::endian::native == std::endian::little,
              "HPCK I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& name)
      : bytes_(bytes), name_(name) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(name_ + ": " + why);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated ") + what);
  }

  const std::string& bytes_;
  const std::string& name_;
  std::size_t pos_ = 0;
};

std::string layer_key(PathId p, std::size_t index, const char* field) {
  return std::string(path_name(p)) + "." + std::to_string(index) + "." + field;
}

Tensor mask_tensor(const std::vector<bool>& mask) {
  Tensor t({mask.size()});
  for (std::size_t i = 0; i < mask.size(); ++i) t[i] = mask[i] ? 1.0 : 0.0;
  return t;
}

}  // namespace

std::string encode_hpck(const std::vector<NamedTensor>& tensors) {
  std::string out = "HPCK";
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) throw ValidationError("tensor name too long: " + name);
    if (t.rank() > 0xFF) throw ValidationError("tensor rank too large: " + name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) {
      if (d > 0xFFFFFFFFu) throw ValidationError("dimension too large: " + name);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    const auto data = t.data();
    out.append(reinterpret_cast<const char*>(data.data()),
               data.size() * sizeof(double));
  }
  return out;
}

std::vector<NamedTensor> decode_hpck(const std::string& bytes,
                                     const std::string& name) {
  Reader r(bytes, name);
  if (r.take(4, "magic") != "HPCK") r.fail("bad magic, not an HPCK file");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    r.fail("unsupported HPCK version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.get<std::uint16_t>("name length");
    std::string tensor_name = r.take(len, "name");
    const auto ndim = r.get<std::uint8_t>("ndim");
    Shape shape(ndim);
    for (auto& d : shape) d = r.get<std::uint32_t>("dims");
    const std::size_t numel = shape_numel(shape);
    if (numel > bytes.size() / sizeof(double)) r.fail("tensor larger than file");
    const std::string payload = r.take(numel * sizeof(double), "payload");
    std::vector<double> values(numel);
    std::memcpy(values.data(), payload.data(), payload.size());
    out.emplace_back(std::move(tensor_name), Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) r.fail("trailing bytes after last tensor");
  return out;
}

void write_hpck(const std::filesystem::path& file,
                const std::vector<NamedTensor>& tensors) {
  const std::string bytes = encode_hpck(tensors);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(file.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(file.string() + ": write failed");
}

std::vector<NamedTensor> read_hpck(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(file.string() + ": cannot open checkpoint");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_hpck(bytes, file.string());
}

std::vector<NamedTensor> network_tensors(const Network& net) {
  std::vector<NamedTensor> out;
  for (PathId p : kAllPaths) {
    const auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Layer& l = layers[i];
      if (!l.spec.has_weights()) continue;
      out.emplace_back(layer_key(p, i, "weight"), l.params.weight);
      out.emplace_back(layer_key(p, i, "bias"), l.params.bias);
      if (l.compactor) {
        out.emplace_back(layer_key(p, i, "compactor"), l.compactor->r);
        out.emplace_back(layer_key(p, i, "mask"), mask_tensor(l.compactor->mask));
      }
    }
  }
  out.emplace_back("hyper_prior.mean", net.hyper_prior().mean);
  out.emplace_back("hyper_prior.scale", net.hyper_prior().scale);
  for (auto& [name, t] : out) t.drop_grad();
  return out;
}

Network network_from_tensors(const std::vector<NamedTensor>& tensors,
                             const NetworkConfig& topology) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& [name, t] : tensors) {
    if (!by_name.emplace(name, &t).second) {
      throw FormatError("duplicate tensor " + name);
    }
  }
  std::size_t used = 0;
  auto fetch = [&](const std::string& key, bool required) -> const Tensor* {
    auto it = by_name.find(key);
    if (it == by_name.end()) {
      if (required) throw FormatError("checkpoint is missing tensor " + key);
      return nullptr;
    }
    ++used;
    return it->second;
  };

  NetworkConfig config = topology;
  std::array<std::vector<const Tensor*>, 4> compactors;
  std::array<std::vector<const Tensor*>, 4> masks;
  for (PathId p : kAllPaths) {
    auto& specs = config.path(p);
    const auto pi = static_cast<std::size_t>(p);
    compactors[pi].assign(specs.size(), nullptr);
    masks[pi].assign(specs.size(), nullptr);
    std::size_t current = 0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      LayerSpec& s = specs[i];
      if (!s.has_weights()) {
        if (i > 0) s.in_channels = s.out_channels = current;
        continue;
      }
      const Tensor& w = *fetch(layer_key(p, i, "weight"), true);
      if (w.rank() != 4 || w.dim(2) != s.ks || w.dim(3) != s.ks) {
        throw FormatError(layer_key(p, i, "weight") + ": shape " +
                          shape_to_string(w.shape()) +
                          " does not match the layer kernel");
      }
      const bool deconv = s.kind == LayerKind::kDeconv;
      s.in_channels = deconv ? w.dim(0) : w.dim(1);
      std::size_t out = deconv ? w.dim(1) : w.dim(0);
      if (s.kind == LayerKind::kPixelShuffleConv) {
        const std::size_t group = s.alpha * s.alpha;
        if (out % group != 0) {
          throw FormatError(layer_key(p, i, "weight") +
                            ": filters not divisible by alpha^2");
        }
        out /= group;
      }
      s.out_channels = out;
      current = out;
      compactors[pi][i] = fetch(layer_key(p, i, "compactor"), false);
      masks[pi][i] = fetch(layer_key(p, i, "mask"), compactors[pi][i] != nullptr);
    }
  }
  const auto& ga = config.path(PathId::kMainEncoder);
  for (auto it = ga.rbegin(); it != ga.rend(); ++it) {
    if (it->has_weights()) {
      config.m = it->out_channels;
      break;
    }
  }

  Network net = build_hyperprior(config);
  for (PathId p : kAllPaths) {
    auto& layers = net.path(p);
    const auto pi = static_cast<std::size_t>(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      Layer& l = layers[i];
      if (!l.spec.has_weights()) continue;
      l.params.weight = *by_name.at(layer_key(p, i, "weight"));
      const Tensor& bias = *fetch(layer_key(p, i, "bias"), true);
      if (bias.shape() != l.params.bias.shape()) {
        throw FormatError(layer_key(p, i, "bias") + ": shape " +
                          shape_to_string(bias.shape()) + ", expected " +
                          shape_to_string(l.params.bias.shape()));
      }
      l.params.bias = bias;
      if (const Tensor* r = compactors[pi][i]) {
        const Tensor& m = *masks[pi][i];
        if (r->rank() != 2 || r->dim(1) != l.spec.out_channels ||
            m.numel() != r->dim(0)) {
          throw FormatError(layer_key(p, i, "compactor") + ": bad shape " +
                            shape_to_string(r->shape()));
        }
        Compactor c = init_identity(l.spec.out_channels, l.spec.compactor_placement());
        c.r = *r;
        c.mask.assign(m.numel(), true);
        for (std::size_t k = 0; k < m.numel(); ++k) c.mask[k] = m[k] != 0.0;
        l.compactor = std::move(c);
      }
    }
  }
  const Tensor& mean = *fetch("hyper_prior.mean", true);
  const Tensor& scale = *fetch("hyper_prior.scale", true);
  if (mean.numel() != net.hyper_latent_channels() ||
      scale.numel() != net.hyper_latent_channels()) {
    throw FormatError("hyper_prior: channel count does not match the network");
  }
  net.hyper_prior().mean = mean;
  net.hyper_prior().scale = scale;
  if (used != by_name.size()) {
    for (const auto& [name, t] : by_name) {
      (void)t;
      bool known = false;
      for (const auto& ref : network_tensors(net)) known |= ref.first == name;
      if (!known) throw FormatError("unexpected tensor " + name);
    }
  }
  net.validate();
  return net;
}

void save_network(const Network& net, const std::filesystem::path& file) {
  write_hpck(file, network_tensors(net));
}

Network load_network(const std::filesystem::path& file,
                     const NetworkConfig& topology) {
  return network_from_tensors(read_hpck(file), topology);
}

}  // namespace hyperslim
