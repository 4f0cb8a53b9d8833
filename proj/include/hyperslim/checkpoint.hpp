#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hyperslim/network.hpp"
#include "hyperslim/tensor.hpp"

namespace hyperslim {

// HPCK v1: "HPCK", u32 version, u32 tensor count, then per tensor a u16 name
// length, the UTF-8 name, u8 ndim, u32 dims and little-endian f64 data.
inline constexpr std::uint32_t kCheckpointVersion = 1;

using NamedTensor = std::pair<std::string, Tensor>;

std::string encode_hpck(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_hpck(const std::string& bytes,
                                     const std::string& name = "<memory>");

void write_hpck(const std::filesystem::path& file,
                const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_hpck(const std::filesystem::path& file);

// Tensor names are "<path>.<layer>.weight|bias|compactor|mask" and
// "hyper_prior.mean|scale". Masks are stored as 0/1 values.
std::vector<NamedTensor> network_tensors(const Network& net);

// Rebuilds a network from stored tensors. Layer kinds, kernels and strides
// come from `topology`; channel widths are read off the weight shapes, so a
// pruned checkpoint loads into its slim shape.
Network network_from_tensors(const std::vector<NamedTensor>& tensors,
                             const NetworkConfig& topology);

void save_network(const Network& net, const std::filesystem::path& file);
Network load_network(const std::filesystem::path& file,
                     const NetworkConfig& topology);

}  // namespace hyperslim
