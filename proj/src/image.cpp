#include "hyperslim/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "hyperslim/error.hpp"
#include "hyperslim/random.hpp"

namespace hyperslim {
namespace {

class HeaderReader {
 public:
  HeaderReader(const std::string& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() &&
           std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) fail(std::string(what) + " out of range");
      ++pos_;
      ++digits;
    }
    if (digits == 0) fail(std::string("missing ") + what);
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() ||
        !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      fail("missing whitespace before raster");
    }
    return pos_ + 1;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw FormatError(name_ + ": " + why);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::string name_;
  std::size_t pos_ = 2;
};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double smoothstep(double edge, double softness, double d) {
  const double t = clamp01((edge - d) / softness + 0.5);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Tensor decode_pnm(const std::string& bytes, const std::string& name) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError(name + ": not a binary PPM (P6) or PGM (P5) file");
  }
  const bool color = bytes[1] == '6';
  HeaderReader header(bytes, name);
  const std::size_t width = header.number("width");
  const std::size_t height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (width == 0 || height == 0) header.fail("zero image dimension");
  if (maxval == 0 || maxval > 255) {
    header.fail("maxval " + std::to_string(maxval) + " is not 8-bit");
  }
  const std::size_t start = header.raster_start();
  const std::size_t channels = color ? 3 : 1;
  const std::size_t need = width * height * channels;
  if (bytes.size() - start < need) header.fail("truncated raster");

  Tensor out({1, 3, height, width});
  const double denom = static_cast<double>(maxval);
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t px = (y * width + x) * channels;
      for (std::size_t c = 0; c < 3; ++c) {
        const unsigned v = raster[px + (color ? c : 0)];
        if (v > maxval) header.fail("sample exceeds maxval");
        out.at(0, c, y, x) = static_cast<double>(v) / denom;
      }
    }
  }
  return out;
}

Tensor read_pnm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError(file.string() + ": cannot open");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return decode_pnm(bytes, file.string());
}

std::string encode_ppm(const Tensor& image) {
  if (image.rank() != 4 || image.n() != 1 || image.c() != 3) {
    throw ShapeError("encode_ppm", "shape (1, 3, h, w) channels",
                     3, image.rank() == 4 ? image.c() : 0);
  }
  std::string out = "P6\n" + std::to_string(image.w()) + " " +
                    std::to_string(image.h()) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.h() * image.w() * 3);
  std::size_t i = header;
  for (std::size_t y = 0; y < image.h(); ++y) {
    for (std::size_t x = 0; x < image.w(); ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::round(clamp01(image.at(0, c, y, x)) * 255.0);
        out[i++] = static_cast<char>(static_cast<unsigned char>(v));
      }
    }
  }
  return out;
}

void write_ppm(const std::filesystem::path& file, const Tensor& image) {
  const std::string bytes = encode_ppm(image);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(file.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ValidationError(dir.string() + ": not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Tensor> load_images(const std::filesystem::path& dir) {
  std::vector<Tensor> images;
  for (const auto& f : list_images(dir)) images.push_back(read_pnm(f));
  if (images.empty()) throw ValidationError(dir.string() + ": no PPM/PGM images");
  return images;
}

Tensor reflect_pad(const Tensor& image, std::size_t multiple) {
  const std::size_t h = image.h();
  const std::size_t w = image.w();
  const std::size_t ph = (h + multiple - 1) / multiple * multiple;
  const std::size_t pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return image;
  if ((ph - h >= h && h > 1) || (pw - w >= w && w > 1)) {
    throw ValidationError("reflect_pad: image too small to reflect");
  }
  auto reflect = [](std::size_t i, std::size_t n) {
    return n == 1 ? 0 : (i < n ? i : 2 * (n - 1) - i);
  };
  Tensor out({image.n(), image.c(), ph, pw});
  for (std::size_t n = 0; n < image.n(); ++n)
    for (std::size_t c = 0; c < image.c(); ++c)
      for (std::size_t y = 0; y < ph; ++y)
        for (std::size_t x = 0; x < pw; ++x)
          out.at(n, c, y, x) = image.at(n, c, reflect(y, h), reflect(x, w));
  return out;
}

Tensor crop(const Tensor& image, std::size_t top, std::size_t left,
            std::size_t height, std::size_t width) {
  if (top + height > image.h() || left + width > image.w()) {
    throw ShapeError("crop", "extent", image.h(), top + height);
  }
  Tensor out({image.n(), image.c(), height, width});
  for (std::size_t n = 0; n < image.n(); ++n)
    for (std::size_t c = 0; c < image.c(); ++c)
      for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
          out.at(n, c, y, x) = image.at(n, c, top + y, left + x);
  return out;
}

Tensor stack(const std::vector<const Tensor*>& items) {
  if (items.empty()) throw ValidationError("stack: no tensors");
  const Shape& first = items.front()->shape();
  Tensor out({items.size() * first[0], first[1], first[2], first[3]});
  std::size_t offset = 0;
  for (const Tensor* t : items) {
    if (t->shape() != first) {
      throw ShapeError("stack", "item shape", shape_numel(first), t->numel());
    }
    std::copy(t->data().begin(), t->data().end(), out.data().begin() + offset);
    offset += t->numel();
  }
  return out;
}

std::vector<Tensor> sample_patches(const std::vector<Tensor>& images,
                                   std::size_t count, std::size_t patch,
                                   std::uint64_t seed) {
  if (images.empty()) throw ValidationError("sample_patches: no images");
  for (const Tensor& im : images) {
    if (im.h() < patch || im.w() < patch) {
      throw ValidationError("sample_patches: image smaller than patch size " +
                            std::to_string(patch));
    }
  }
  std::mt19937_64 rng(mix_seed(seed, 11));
  std::vector<Tensor> patches;
  patches.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Tensor& im = images[i % images.size()];
    const auto top = static_cast<std::size_t>(
        unit_uniform(rng) * static_cast<double>(im.h() - patch + 1));
    const auto left = static_cast<std::size_t>(
        unit_uniform(rng) * static_cast<double>(im.w() - patch + 1));
    patches.push_back(crop(im, top, left, patch, patch));
  }
  return patches;
}

std::vector<Tensor> synthetic_images(std::size_t count, std::size_t height,
                                     std::size_t width, std::uint64_t seed) {
  std::vector<Tensor> images;
  for (std::size_t k = 0; k < count; ++k) {
    std::mt19937_64 rng(mix_seed(seed, 1000 + k));
    auto u = [&] { return unit_uniform(rng); };
    Tensor im({1, 3, height, width});
    double c0[3];
    double c1[3];
    for (int c = 0; c < 3; ++c) {
      c0[c] = 0.15 + 0.7 * u();
      c1[c] = 0.15 + 0.7 * u();
    }
    const double angle = 6.283185307179586 * u();
    const double gx = std::cos(angle);
    const double gy = std::sin(angle);
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double t = clamp01(0.5 + 0.5 * (gx * (x / double(width) - 0.5) +
                                              gy * (y / double(height) - 0.5)) *
                                           1.6);
        for (std::size_t c = 0; c < 3; ++c) {
          im.at(0, c, y, x) = c0[c] * (1.0 - t) + c1[c] * t;
        }
      }
    }

    const int shapes = 4 + static_cast<int>(u() * 8);
    for (int s = 0; s < shapes; ++s) {
      const double cx = u() * width;
      const double cy = u() * height;
      const double rx = (0.05 + 0.25 * u()) * width;
      const double ry = (0.05 + 0.25 * u()) * height;
      const bool box = u() < 0.4;
      const double softness = 0.5 + 3.0 * u();
      double col[3];
      for (double& c : col) c = u();
      const double opacity = 0.5 + 0.5 * u();
      for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
          const double dx = (x - cx) / rx;
          const double dy = (y - cy) / ry;
          const double d = box ? std::max(std::abs(dx), std::abs(dy))
                               : std::sqrt(dx * dx + dy * dy);
          const double a =
              opacity * smoothstep(1.0, softness / std::min(rx, ry), d);
          if (a <= 0.0) continue;
          for (std::size_t c = 0; c < 3; ++c) {
            double& p = im.at(0, c, y, x);
            p = p * (1.0 - a) + col[c] * a;
          }
        }
      }
    }

    const double fx = 0.05 + 0.4 * u();
    const double fy = 0.05 + 0.4 * u();
    const double amp = 0.01 + 0.04 * u();
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double texture = amp * std::sin(fx * x) * std::cos(fy * y);
        for (std::size_t c = 0; c < 3; ++c) {
          double& p = im.at(0, c, y, x);
          p = std::round(clamp01(p + texture + 0.02 * (u() - 0.5)) * 255.0) / 255.0;
        }
      }
    }
    images.push_back(std::move(im));
  }
  return images;
}

BatchSampler::BatchSampler(std::size_t size, std::size_t batch,
                           std::uint64_t seed)
    : size_(size), batch_(batch), seed_(seed) {
  if (size == 0 || batch == 0) {
    throw ValidationError("BatchSampler: dataset and batch must be non-empty");
  }
  reshuffle();
}

void BatchSampler::reshuffle() {
  order_.resize(size_);
  for (std::size_t i = 0; i < size_; ++i) order_[i] = i;
  std::mt19937_64 rng(mix_seed(seed_, 5000 + epoch_));
  // Fisher-Yates with our own uniform draw so the order is portable.
  for (std::size_t i = size_; i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(i));
    std::swap(order_[i - 1], order_[j]);
  }
  cursor_ = 0;
  ++epoch_;
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> out;
  out.reserve(batch_);
  while (out.size() < batch_) {
    if (cursor_ == size_) reshuffle();
    out.push_back(order_[cursor_++]);
  }
  return out;
}

}  // namespace hyperslim
