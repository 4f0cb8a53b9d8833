#pragma once

#include <cstddef>

#include "hyperslim/tensor.hpp"

namespace hyperslim {

// Weight storage order. Conv kernels are (C_out, C_in, ks, ks); transposed
// convolutions swap the channel axes to (C_in, C_out, ks, ks).
enum class KernelLayout { kConv, kDeconv };

struct ConvWeights {
  Tensor weight;
  Tensor bias;  // rank 1, length C_out
  KernelLayout layout = KernelLayout::kConv;
  std::size_t stride = 1;
  std::size_t padding = 0;
  // Extra rows/cols appended to a transposed convolution's output so that
  // stride-s upsampling can produce exactly s*h outputs. Ignored for kConv.
  std::size_t output_padding = 0;

  std::size_t in_channels() const;
  std::size_t out_channels() const;
  std::size_t kernel_size() const { return weight.dim(2); }
  std::size_t parameter_count() const { return weight.numel() + bias.numel(); }

  // Throws ShapeError if the tensors disagree with the layout.
  void validate(const char* op) const;
};

ConvWeights make_conv(std::size_t c_in, std::size_t c_out, std::size_t ks,
                      std::size_t stride, std::size_t padding);
ConvWeights make_deconv(std::size_t c_in, std::size_t c_out, std::size_t ks,
                        std::size_t stride, std::size_t padding,
                        std::size_t output_padding = 0);

struct ConvGrads {
  // Each member is empty when not requested.
  Tensor input;
  Tensor weight;
  Tensor bias;
};

// Symmetric zero padding. Output is (n, C_out, (h+2p-ks)/s+1, (w+2p-ks)/s+1).
Tensor conv2d(const Tensor& input, const ConvWeights& w);
ConvGrads conv2d_backward(const Tensor& input, const ConvWeights& w,
                          const Tensor& grad_output, bool need_input_grad,
                          bool need_weight_grad = true);

// Output is (n, C_out, (h-1)s - 2p + ks + output_padding, ...).
Tensor deconv2d(const Tensor& input, const ConvWeights& w);
ConvGrads deconv2d_backward(const Tensor& input, const ConvWeights& w,
                            const Tensor& grad_output, bool need_input_grad,
                            bool need_weight_grad = true);

// Output channel c at sub-position (i, j) reads input channel
// c*alpha^2 + i*alpha + j.
Tensor pixel_shuffle(const Tensor& input, std::size_t alpha);
// Exact inverse of pixel_shuffle; also its gradient.
Tensor pixel_unshuffle(const Tensor& input, std::size_t alpha);

enum class ActivationKind { kLeakyRelu, kIdentity };
inline constexpr double kLeakySlope = 0.01;

Tensor activation(const Tensor& input, ActivationKind kind);
// Subgradient at 0 uses the negative-side slope.
Tensor activation_backward(const Tensor& input, const Tensor& grad_output,
                           ActivationKind kind);

// out[n, j, h, w] = sum_c r[j, c] * t[n, c, h, w]
Tensor channel_mix(const Tensor& input, const Tensor& r);
// Returns grad w.r.t. input and accumulates grad w.r.t. r into r_grad
// (shape rows x cols) when non-empty.
Tensor channel_mix_backward(const Tensor& input, const Tensor& r,
                            const Tensor& grad_output,
                            std::span<double> r_grad);

}  // namespace hyperslim
