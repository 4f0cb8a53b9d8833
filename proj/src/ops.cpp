#include "hyperslim/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>
#include <vector>

#include "hyperslim/error.hpp"

namespace hyperslim {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

// Sliding-window geometry shared by conv and its adjoint. `grid` is the
// set of window origins (the conv output, or the deconv input), `image` is
// the plane the windows read from (conv input, deconv output).
struct Geometry {
  std::size_t channels;
  std::size_t image_h, image_w;
  std::size_t grid_h, grid_w;
  std::size_t ks, stride, padding;

  std::size_t col_rows() const { return channels * ks * ks; }
  std::size_t col_cols() const { return grid_h * grid_w; }
};

void im2col(const double* image, const Geometry& g, double* col) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const double* plane = image + c * g.image_h * g.image_w;
    for (std::size_t u = 0; u < g.ks; ++u) {
      for (std::size_t v = 0; v < g.ks; ++v) {
        double* row = col + ((c * g.ks + u) * g.ks + v) * g.col_cols();
        for (std::size_t oh = 0; oh < g.grid_h; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * g.stride + u) - pad;
          double* out = row + oh * g.grid_w;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.image_h)) {
            std::fill(out, out + g.grid_w, 0.0);
            continue;
          }
          const double* src = plane + ih * g.image_w;
          for (std::size_t ow = 0; ow < g.grid_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + v) - pad;
            out[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.image_w))
                          ? 0.0
                          : src[iw];
          }
        }
      }
    }
  }
}

// Scatter-accumulate the adjoint of im2col.
void col2im_add(const double* col, const Geometry& g, double* image) {
  const auto pad = static_cast<std::ptrdiff_t>(g.padding);
  for (std::size_t c = 0; c < g.channels; ++c) {
    double* plane = image + c * g.image_h * g.image_w;
    for (std::size_t u = 0; u < g.ks; ++u) {
      for (std::size_t v = 0; v < g.ks; ++v) {
        const double* row = col + ((c * g.ks + u) * g.ks + v) * g.col_cols();
        for (std::size_t oh = 0; oh < g.grid_h; ++oh) {
          const std::ptrdiff_t ih =
              static_cast<std::ptrdiff_t>(oh * g.stride + u) - pad;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.image_h)) continue;
          double* dst = plane + ih * g.image_w;
          const double* in = row + oh * g.grid_w;
          for (std::size_t ow = 0; ow < g.grid_w; ++ow) {
            const std::ptrdiff_t iw =
                static_cast<std::ptrdiff_t>(ow * g.stride + v) - pad;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.image_w)) continue;
            dst[iw] += in[ow];
          }
        }
      }
    }
  }
}

bool is_pointwise(const Geometry& g) {
  return g.ks == 1 && g.stride == 1 && g.padding == 0 &&
         g.grid_h == g.image_h && g.grid_w == g.image_w;
}

void require_rank4(const Tensor& t, const char* op) {
  if (t.rank() != 4) throw ShapeError(op, "input rank", 4, t.rank());
}

void add_bias(const Tensor& bias, std::size_t plane, double* out) {
  for (std::size_t c = 0; c < bias.numel(); ++c) {
    double* p = out + c * plane;
    const double b = bias[c];
    for (std::size_t i = 0; i < plane; ++i) p[i] += b;
  }
}

void accumulate_bias_grad(const double* grad_out, std::size_t channels,
                          std::size_t plane, Tensor& bias_grad) {
  for (std::size_t c = 0; c < channels; ++c) {
    const double* p = grad_out + c * plane;
    double s = 0.0;
    for (std::size_t i = 0; i < plane; ++i) s += p[i];
    bias_grad[c] += s;
  }
}

Geometry conv_geometry(const Tensor& input, const ConvWeights& w) {
  const std::size_t ks = w.kernel_size();
  const std::size_t h = input.h() + 2 * w.padding;
  const std::size_t wd = input.w() + 2 * w.padding;
  if (h < ks) throw ShapeError("conv2d", "padded height", ks, h);
  if (wd < ks) throw ShapeError("conv2d", "padded width", ks, wd);
  return Geometry{input.c(),
                  input.h(),
                  input.w(),
                  (h - ks) / w.stride + 1,
                  (wd - ks) / w.stride + 1,
                  ks,
                  w.stride,
                  w.padding};
}

Geometry deconv_geometry(const Tensor& input, const ConvWeights& w) {
  const std::size_t ks = w.kernel_size();
  const std::size_t full_h = (input.h() - 1) * w.stride + ks + w.output_padding;
  const std::size_t full_w = (input.w() - 1) * w.stride + ks + w.output_padding;
  if (full_h <= 2 * w.padding) {
    throw ShapeError("deconv2d", "output height", 2 * w.padding + 1, full_h);
  }
  if (full_w <= 2 * w.padding) {
    throw ShapeError("deconv2d", "output width", 2 * w.padding + 1, full_w);
  }
  return Geometry{w.out_channels(),
                  full_h - 2 * w.padding,
                  full_w - 2 * w.padding,
                  input.h(),
                  input.w(),
                  ks,
                  w.stride,
                  w.padding};
}

}  // namespace

std::size_t ConvWeights::in_channels() const {
  return layout == KernelLayout::kConv ? weight.dim(1) : weight.dim(0);
}

std::size_t ConvWeights::out_channels() const {
  return layout == KernelLayout::kConv ? weight.dim(0) : weight.dim(1);
}

void ConvWeights::validate(const char* op) const {
  if (weight.rank() != 4) throw ShapeError(op, "weight rank", 4, weight.rank());
  if (weight.dim(2) != weight.dim(3)) {
    throw ShapeError(op, "kernel width", weight.dim(2), weight.dim(3));
  }
  if (bias.rank() != 1) throw ShapeError(op, "bias rank", 1, bias.rank());
  if (bias.dim(0) != out_channels()) {
    throw ShapeError(op, "bias length", out_channels(), bias.dim(0));
  }
  if (stride == 0) throw ShapeError(op, "stride", 1, 0);
  if (layout == KernelLayout::kDeconv && output_padding >= stride &&
      output_padding > 0) {
    throw ShapeError(op, "output padding", stride - 1, output_padding);
  }
}

ConvWeights make_conv(std::size_t c_in, std::size_t c_out, std::size_t ks,
                      std::size_t stride, std::size_t padding) {
  return ConvWeights{Tensor({c_out, c_in, ks, ks}), Tensor({c_out}),
                     KernelLayout::kConv, stride, padding, 0};
}

ConvWeights make_deconv(std::size_t c_in, std::size_t c_out, std::size_t ks,
                        std::size_t stride, std::size_t padding,
                        std::size_t output_padding) {
  return ConvWeights{Tensor({c_in, c_out, ks, ks}), Tensor({c_out}),
                     KernelLayout::kDeconv, stride, padding, output_padding};
}

Tensor conv2d(const Tensor& input, const ConvWeights& w) {
  require_rank4(input, "conv2d");
  w.validate("conv2d");
  if (w.layout != KernelLayout::kConv) {
    throw ValidationError("conv2d: weights use the deconv layout");
  }
  if (input.c() != w.in_channels()) {
    throw ShapeError("conv2d", "input channels", w.in_channels(), input.c());
  }
  const Geometry g = conv_geometry(input, w);
  const std::size_t c_out = w.out_channels();
  Tensor out({input.n(), c_out, g.grid_h, g.grid_w});
  const ConstMatrixMap weight(w.weight.data().data(), c_out, g.col_rows());
  std::vector<double> col(is_pointwise(g) ? 0 : g.col_rows() * g.col_cols());
  const std::size_t in_stride = input.c() * input.h() * input.w();
  const std::size_t out_stride = c_out * g.col_cols();
  for (std::size_t n = 0; n < input.n(); ++n) {
    const double* src = input.data().data() + n * in_stride;
    if (!col.empty()) im2col(src, g, col.data());
    const ConstMatrixMap cols(col.empty() ? src : col.data(), g.col_rows(),
                              g.col_cols());
    MatrixMap dst(out.data().data() + n * out_stride, c_out, g.col_cols());
    dst.noalias() = weight * cols;
    add_bias(w.bias, g.col_cols(), dst.data());
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& input, const ConvWeights& w,
                          const Tensor& grad_output, bool need_input_grad,
                          bool need_weight_grad) {
  const Geometry g = conv_geometry(input, w);
  const std::size_t c_out = w.out_channels();
  const Shape expected{input.n(), c_out, g.grid_h, g.grid_w};
  if (grad_output.shape() != expected) {
    throw ValidationError("conv2d_backward: grad_output shape " +
                          shape_to_string(grad_output.shape()) +
                          ", expected " + shape_to_string(expected));
  }
  ConvGrads grads{
      need_input_grad ? Tensor::zeros_like(input) : Tensor(),
      need_weight_grad ? Tensor::zeros_like(w.weight) : Tensor(),
      need_weight_grad ? Tensor::zeros_like(w.bias) : Tensor()};
  const ConstMatrixMap weight(w.weight.data().data(), c_out, g.col_rows());
  const bool pointwise = is_pointwise(g);
  std::vector<double> col(pointwise || !need_weight_grad
                              ? 0
                              : g.col_rows() * g.col_cols());
  std::vector<double> col_grad(
      need_input_grad && !pointwise ? g.col_rows() * g.col_cols() : 0);
  const std::size_t in_stride = input.c() * input.h() * input.w();
  const std::size_t out_stride = c_out * g.col_cols();
  for (std::size_t n = 0; n < input.n(); ++n) {
    const double* src = input.data().data() + n * in_stride;
    const ConstMatrixMap upstream(grad_output.data().data() + n * out_stride,
                                  c_out, g.col_cols());
    if (need_weight_grad) {
      accumulate_bias_grad(upstream.data(), c_out, g.col_cols(), grads.bias);
      if (!pointwise) im2col(src, g, col.data());
      const ConstMatrixMap cols(pointwise ? src : col.data(), g.col_rows(),
                                g.col_cols());
      MatrixMap(grads.weight.data().data(), c_out, g.col_rows()).noalias() +=
          upstream * cols.transpose();
    }
    if (!need_input_grad) continue;
    double* dx = grads.input.data().data() + n * in_stride;
    if (pointwise) {
      MatrixMap(dx, g.col_rows(), g.col_cols()).noalias() =
          weight.transpose() * upstream;
    } else {
      MatrixMap(col_grad.data(), g.col_rows(), g.col_cols()).noalias() =
          weight.transpose() * upstream;
      col2im_add(col_grad.data(), g, dx);
    }
  }
  return grads;
}

Tensor deconv2d(const Tensor& input, const ConvWeights& w) {
  require_rank4(input, "deconv2d");
  w.validate("deconv2d");
  if (w.layout != KernelLayout::kDeconv) {
    throw ValidationError("deconv2d: weights use the conv layout");
  }
  if (input.c() != w.in_channels()) {
    throw ShapeError("deconv2d", "input channels", w.in_channels(), input.c());
  }
  const Geometry g = deconv_geometry(input, w);
  const std::size_t c_in = w.in_channels();
  const std::size_t c_out = w.out_channels();
  Tensor out({input.n(), c_out, g.image_h, g.image_w});
  const ConstMatrixMap weight(w.weight.data().data(), c_in, g.col_rows());
  const bool pointwise = is_pointwise(g);
  std::vector<double> col(pointwise ? 0 : g.col_rows() * g.col_cols());
  const std::size_t in_stride = c_in * g.col_cols();
  const std::size_t out_plane = g.image_h * g.image_w;
  for (std::size_t n = 0; n < input.n(); ++n) {
    const ConstMatrixMap x(input.data().data() + n * in_stride, c_in,
                           g.col_cols());
    double* dst = out.data().data() + n * c_out * out_plane;
    if (pointwise) {
      MatrixMap(dst, c_out, out_plane).noalias() = weight.transpose() * x;
    } else {
      MatrixMap(col.data(), g.col_rows(), g.col_cols()).noalias() =
          weight.transpose() * x;
      col2im_add(col.data(), g, dst);
    }
    add_bias(w.bias, out_plane, dst);
  }
  return out;
}

ConvGrads deconv2d_backward(const Tensor& input, const ConvWeights& w,
                            const Tensor& grad_output, bool need_input_grad,
                            bool need_weight_grad) {
  const Geometry g = deconv_geometry(input, w);
  const std::size_t c_in = w.in_channels();
  const std::size_t c_out = w.out_channels();
  const Shape expected{input.n(), c_out, g.image_h, g.image_w};
  if (grad_output.shape() != expected) {
    throw ValidationError("deconv2d_backward: grad_output shape " +
                          shape_to_string(grad_output.shape()) +
                          ", expected " + shape_to_string(expected));
  }
  ConvGrads grads{
      need_input_grad ? Tensor::zeros_like(input) : Tensor(),
      need_weight_grad ? Tensor::zeros_like(w.weight) : Tensor(),
      need_weight_grad ? Tensor::zeros_like(w.bias) : Tensor()};
  const ConstMatrixMap weight(w.weight.data().data(), c_in, g.col_rows());
  const bool pointwise = is_pointwise(g);
  std::vector<double> col(pointwise ? 0 : g.col_rows() * g.col_cols());
  const std::size_t in_stride = c_in * g.col_cols();
  const std::size_t out_plane = g.image_h * g.image_w;
  for (std::size_t n = 0; n < input.n(); ++n) {
    const double* upstream =
        grad_output.data().data() + n * c_out * out_plane;
    if (!pointwise) im2col(upstream, g, col.data());
    const ConstMatrixMap cols(pointwise ? upstream : col.data(), g.col_rows(),
                              g.col_cols());
    if (need_weight_grad) {
      accumulate_bias_grad(upstream, c_out, out_plane, grads.bias);
      const ConstMatrixMap x(input.data().data() + n * in_stride, c_in,
                             g.col_cols());
      MatrixMap(grads.weight.data().data(), c_in, g.col_rows()).noalias() +=
          x * cols.transpose();
    }
    if (need_input_grad) {
      MatrixMap(grads.input.data().data() + n * in_stride, c_in, g.col_cols())
          .noalias() = weight * cols;
    }
  }
  return grads;
}

Tensor pixel_shuffle(const Tensor& input, std::size_t alpha) {
  require_rank4(input, "pixel_shuffle");
  if (alpha == 0) throw ShapeError("pixel_shuffle", "alpha", 1, 0);
  const std::size_t a2 = alpha * alpha;
  if (input.c() % a2 != 0) {
    throw ShapeError("pixel_shuffle", "channels modulo alpha^2", 0,
                     input.c() % a2);
  }
  const std::size_t c_out = input.c() / a2;
  const std::size_t h = input.h();
  const std::size_t w = input.w();
  Tensor out({input.n(), c_out, h * alpha, w * alpha});
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t c = 0; c < c_out; ++c) {
      for (std::size_t i = 0; i < alpha; ++i) {
        for (std::size_t j = 0; j < alpha; ++j) {
          const std::size_t src_c = c * a2 + i * alpha + j;
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
              out.at(n, c, y * alpha + i, x * alpha + j) =
                  input.at(n, src_c, y, x);
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor pixel_unshuffle(const Tensor& input, std::size_t alpha) {
  require_rank4(input, "pixel_unshuffle");
  if (alpha == 0) throw ShapeError("pixel_unshuffle", "alpha", 1, 0);
  if (input.h() % alpha != 0) {
    throw ShapeError("pixel_unshuffle", "height modulo alpha", 0,
                     input.h() % alpha);
  }
  if (input.w() % alpha != 0) {
    throw ShapeError("pixel_unshuffle", "width modulo alpha", 0,
                     input.w() % alpha);
  }
  const std::size_t a2 = alpha * alpha;
  const std::size_t h = input.h() / alpha;
  const std::size_t w = input.w() / alpha;
  Tensor out({input.n(), input.c() * a2, h, w});
  for (std::size_t n = 0; n < input.n(); ++n) {
    for (std::size_t c = 0; c < input.c(); ++c) {
      for (std::size_t i = 0; i < alpha; ++i) {
        for (std::size_t j = 0; j < alpha; ++j) {
          const std::size_t dst_c = c * a2 + i * alpha + j;
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
              out.at(n, dst_c, y, x) =
                  input.at(n, c, y * alpha + i, x * alpha + j);
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor activation(const Tensor& input, ActivationKind kind) {
  Tensor out = input;
  out.drop_grad();
  if (kind == ActivationKind::kLeakyRelu) {
    for (double& v : out.data()) {
      if (v <= 0.0) v *= kLeakySlope;
    }
  }
  return out;
}

Tensor activation_backward(const Tensor& input, const Tensor& grad_output,
                           ActivationKind kind) {
  if (input.shape() != grad_output.shape()) {
    throw ValidationError("activation_backward: shape mismatch");
  }
  Tensor grad(grad_output.shape(), grad_output.values());
  if (kind == ActivationKind::kLeakyRelu) {
    for (std::size_t i = 0; i < grad.numel(); ++i) {
      if (input[i] <= 0.0) grad[i] *= kLeakySlope;
    }
  }
  return grad;
}

Tensor channel_mix(const Tensor& input, const Tensor& r) {
  require_rank4(input, "channel_mix");
  if (r.rank() != 2) throw ShapeError("channel_mix", "matrix rank", 2, r.rank());
  if (r.dim(1) != input.c()) {
    throw ShapeError("channel_mix", "input channels", r.dim(1), input.c());
  }
  const std::size_t plane = input.h() * input.w();
  const std::size_t rows = r.dim(0);
  Tensor out({input.n(), rows, input.h(), input.w()});
  const ConstMatrixMap mix(r.data().data(), rows, r.dim(1));
  for (std::size_t n = 0; n < input.n(); ++n) {
    const ConstMatrixMap x(input.data().data() + n * input.c() * plane,
                           input.c(), plane);
    MatrixMap(out.data().data() + n * rows * plane, rows, plane).noalias() =
        mix * x;
  }
  return out;
}

Tensor channel_mix_backward(const Tensor& input, const Tensor& r,
                            const Tensor& grad_output,
                            std::span<double> r_grad) {
  const std::size_t plane = input.h() * input.w();
  const std::size_t rows = r.dim(0);
  const std::size_t cols = r.dim(1);
  if (grad_output.c() != rows) {
    throw ShapeError("channel_mix_backward", "grad channels", rows,
                     grad_output.c());
  }
  Tensor grad_input = Tensor::zeros_like(input);
  const ConstMatrixMap mix(r.data().data(), rows, cols);
  for (std::size_t n = 0; n < input.n(); ++n) {
    const ConstMatrixMap upstream(
        grad_output.data().data() + n * rows * plane, rows, plane);
    MatrixMap(grad_input.data().data() + n * cols * plane, cols, plane)
        .noalias() = mix.transpose() * upstream;
    if (!r_grad.empty()) {
      const ConstMatrixMap x(input.data().data() + n * cols * plane, cols,
                             plane);
      MatrixMap(r_grad.data(), rows, cols).noalias() += upstream * x.transpose();
    }
  }
  return grad_input;
}

}  // namespace hyperslim
