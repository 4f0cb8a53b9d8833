#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyperslim/tensor.hpp"

namespace hyperslim {

// Binary PPM (P6) or PGM (P5) with maxval <= 255, decoded to a (1, 3, h, w)
// tensor in [0, 1]. Grayscale is replicated to three channels. Errors carry
// the file name.
Tensor read_pnm(const std::filesystem::path& file);
Tensor decode_pnm(const std::string& bytes, const std::string& name = "<memory>");

// Writes a (1, 3, h, w) tensor as P6, clamping to [0, 1] and rounding.
void write_ppm(const std::filesystem::path& file, const Tensor& image);
std::string encode_ppm(const Tensor& image);

// All .ppm/.pgm/.pnm files of a directory, sorted by file name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);
std::vector<Tensor> load_images(const std::filesystem::path& dir);

// Reflect-pads the bottom/right edges up to the next multiple.
Tensor reflect_pad(const Tensor& image, std::size_t multiple);
Tensor crop(const Tensor& image, std::size_t top, std::size_t left,
            std::size_t height, std::size_t width);

// Concatenates (1, c, h, w) tensors along the batch axis.
Tensor stack(const std::vector<const Tensor*>& items);

// Random square crops. Offsets are drawn from `seed` so a fixed seed gives
// a fixed patch set.
std::vector<Tensor> sample_patches(const std::vector<Tensor>& images,
                                   std::size_t count, std::size_t patch,
                                   std::uint64_t seed);

// Procedural test images: smooth colour gradients, soft-edged shapes and a
// little texture, quantized to 8 bits.
std::vector<Tensor> synthetic_images(std::size_t count, std::size_t height,
                                     std::size_t width, std::uint64_t seed);

// Epoch-shuffled mini-batch indices over a dataset of `size` items.
class BatchSampler {
 public:
  BatchSampler(std::size_t size, std::size_t batch, std::uint64_t seed);
  std::vector<std::size_t> next();

 private:
  void reshuffle();

  std::size_t size_;
  std::size_t batch_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace hyperslim
