#include "hyperslim/compactor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperslim/error.hpp"

namespace hyperslim {
namespace {

void require_matrix(const Tensor& rp, const char* op) {
  if (rp.rank() != 2) throw ShapeError(op, "compactor rank", 2, rp.rank());
}

// out[j, :] = sum_m rp[j, m] * in[m, :] over rows of length `row_len`,
// where input row m lives at offset (m * row_stride + row_offset) * row_len.
void mix_rows(const Tensor& rp, const double* in, std::size_t row_len,
              std::size_t in_row_step, std::size_t in_row_offset, double* out,
              std::size_t out_row_step, std::size_t out_row_offset) {
  const std::size_t kept = rp.dim(0);
  const std::size_t full = rp.dim(1);
  for (std::size_t j = 0; j < kept; ++j) {
    double* dst = out + (j * out_row_step + out_row_offset) * row_len;
    std::fill(dst, dst + row_len, 0.0);
    for (std::size_t m = 0; m < full; ++m) {
      const double coeff = rp[j * full + m];
      if (coeff == 0.0) continue;
      const double* src = in + (m * in_row_step + in_row_offset) * row_len;
      for (std::size_t e = 0; e < row_len; ++e) dst[e] += coeff * src[e];
    }
  }
}

}  // namespace

const char* placement_name(Placement placement) {
  switch (placement) {
    case Placement::kAfterConv: return "after-conv";
    case Placement::kAfterShuffle: return "after-shuffle";
    case Placement::kAfterDeconv: return "after-deconv";
  }
  return "unknown";
}

std::size_t Compactor::kept() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

Tensor Compactor::kept_rows() const {
  if (mask.size() != rows()) {
    throw ShapeError("Compactor::kept_rows", "mask length", rows(),
                     mask.size());
  }
  const std::size_t cols = channels();
  Tensor out({kept(), cols});
  std::size_t dst = 0;
  for (std::size_t j = 0; j < rows(); ++j) {
    if (!mask[j]) continue;
    std::copy_n(r.data().begin() + j * cols, cols,
                out.data().begin() + dst * cols);
    ++dst;
  }
  return out;
}

void Compactor::apply_mask() {
  const std::size_t cols = channels();
  const bool has_grad = r.has_grad();
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) continue;
    std::fill_n(r.data().begin() + j * cols, cols, 0.0);
    if (has_grad) std::fill_n(r.grad().begin() + j * cols, cols, 0.0);
  }
}

Compactor init_identity(std::size_t channels, Placement placement) {
  if (channels < 1) {
    throw ValidationError("init_identity: compactor needs at least 1 channel");
  }
  Compactor c{Tensor({channels, channels}), placement,
              std::vector<bool>(channels, true)};
  for (std::size_t i = 0; i < channels; ++i) c.r[i * channels + i] = 1.0;
  return c;
}

Tensor apply_compactor(const Tensor& t, const Compactor& c) {
  return channel_mix(t, c.r);
}

double lasso_penalty(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) sum += std::abs(w);
  return sum;
}

std::vector<double> row_norms(const Tensor& r) {
  require_matrix(r, "row_norms");
  const std::size_t cols = r.dim(1);
  std::vector<double> norms(r.dim(0));
  for (std::size_t j = 0; j < norms.size(); ++j) {
    double sq = 0.0;
    for (std::size_t m = 0; m < cols; ++m) {
      const double v = r[j * cols + m];
      sq += v * v;
    }
    norms[j] = std::sqrt(sq);
  }
  return norms;
}

double group_lasso_penalty(const Tensor& r) {
  const auto norms = row_norms(r);
  return std::accumulate(norms.begin(), norms.end(), 0.0);
}

double group_lasso_penalty(const std::vector<const Compactor*>& compactors) {
  double total = 0.0;
  for (const Compactor* c : compactors) total += group_lasso_penalty(c->r);
  return total;
}

Tensor group_lasso_gradient(const Tensor& r, double dead_zone) {
  const auto norms = row_norms(r);
  const std::size_t cols = r.dim(1);
  Tensor grad(r.shape());
  for (std::size_t j = 0; j < norms.size(); ++j) {
    if (norms[j] <= dead_zone) continue;
    for (std::size_t m = 0; m < cols; ++m) {
      grad[j * cols + m] = r[j * cols + m] / norms[j];
    }
  }
  return grad;
}

std::vector<bool> select_channels(const Compactor& c, double threshold,
                                  std::size_t min_keep) {
  if (min_keep < 1) throw ValidationError("select_channels: min_keep must be >= 1");
  const auto norms = row_norms(c.r);
  std::vector<bool> mask(norms.size());
  std::size_t survivors = 0;
  for (std::size_t j = 0; j < norms.size(); ++j) {
    mask[j] = norms[j] >= threshold;
    survivors += mask[j] ? 1 : 0;
  }
  if (survivors >= std::min(min_keep, norms.size())) return mask;

  std::vector<std::size_t> order(norms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  std::fill(mask.begin(), mask.end(), false);
  for (std::size_t i = 0; i < std::min(min_keep, order.size()); ++i) {
    mask[order[i]] = true;
  }
  return mask;
}

ConvWeights merge_conv(const ConvWeights& w, const Tensor& rp) {
  require_matrix(rp, "merge_conv");
  w.validate("merge_conv");
  if (w.layout != KernelLayout::kConv) {
    throw ValidationError("merge_conv: expects conv layout");
  }
  if (rp.dim(1) != w.out_channels()) {
    throw ShapeError("merge_conv", "compactor columns", w.out_channels(),
                     rp.dim(1));
  }
  const std::size_t kept = rp.dim(0);
  const std::size_t ks = w.kernel_size();
  const std::size_t row_len = w.in_channels() * ks * ks;
  ConvWeights merged = make_conv(w.in_channels(), kept, ks, w.stride, w.padding);
  mix_rows(rp, w.weight.data().data(), row_len, 1, 0,
           merged.weight.data().data(), 1, 0);
  mix_rows(rp, w.bias.data().data(), 1, 1, 0, merged.bias.data().data(), 1, 0);
  return merged;
}

ConvWeights merge_pixelshuffle(const ConvWeights& w, const Tensor& rp,
                               std::size_t alpha) {
  require_matrix(rp, "merge_pixelshuffle");
  w.validate("merge_pixelshuffle");
  if (w.layout != KernelLayout::kConv) {
    throw ValidationError("merge_pixelshuffle: expects conv layout");
  }
  const std::size_t a2 = alpha * alpha;
  if (alpha == 0 || w.out_channels() % a2 != 0) {
    throw ShapeError("merge_pixelshuffle", "conv outputs modulo alpha^2", 0,
                     alpha == 0 ? 1 : w.out_channels() % a2);
  }
  const std::size_t channels = w.out_channels() / a2;
  if (rp.dim(1) != channels) {
    throw ShapeError("merge_pixelshuffle", "compactor columns", channels,
                     rp.dim(1));
  }
  const std::size_t kept = rp.dim(0);
  const std::size_t ks = w.kernel_size();
  const std::size_t row_len = w.in_channels() * ks * ks;
  ConvWeights merged =
      make_conv(w.in_channels(), kept * a2, ks, w.stride, w.padding);
  for (std::size_t phase = 0; phase < a2; ++phase) {
    mix_rows(rp, w.weight.data().data(), row_len, a2, phase,
             merged.weight.data().data(), a2, phase);
    mix_rows(rp, w.bias.data().data(), 1, a2, phase, merged.bias.data().data(),
             a2, phase);
  }
  return merged;
}

ConvWeights merge_deconv(const ConvWeights& w, const Tensor& rp) {
  require_matrix(rp, "merge_deconv");
  w.validate("merge_deconv");
  if (w.layout != KernelLayout::kDeconv) {
    throw ValidationError("merge_deconv: expects deconv layout");
  }
  if (rp.dim(1) != w.out_channels()) {
    throw ShapeError("merge_deconv", "compactor columns", w.out_channels(),
                     rp.dim(1));
  }
  const std::size_t kept = rp.dim(0);
  const std::size_t c_in = w.in_channels();
  const std::size_t c_out = w.out_channels();
  const std::size_t ks = w.kernel_size();
  const std::size_t plane = ks * ks;
  ConvWeights merged = make_deconv(c_in, kept, ks, w.stride, w.padding,
                                   w.output_padding);
  // Each input channel holds a (C_out x ks*ks) block mixed on its rows.
  for (std::size_t c = 0; c < c_in; ++c) {
    mix_rows(rp, w.weight.data().data() + c * c_out * plane, plane, 1, 0,
             merged.weight.data().data() + c * kept * plane, 1, 0);
  }
  mix_rows(rp, w.bias.data().data(), 1, 1, 0, merged.bias.data().data(), 1, 0);
  return merged;
}

ConvWeights slice_input_channels(const ConvWeights& w,
                                 const std::vector<bool>& mask) {
  w.validate("slice_input_channels");
  if (mask.size() != w.in_channels()) {
    throw ShapeError("slice_input_channels", "mask length", w.in_channels(),
                     mask.size());
  }
  const std::size_t kept =
      static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  const std::size_t ks = w.kernel_size();
  const std::size_t plane = ks * ks;
  ConvWeights out = w;
  if (w.layout == KernelLayout::kConv) {
    const std::size_t c_out = w.out_channels();
    out.weight = Tensor({c_out, kept, ks, ks});
    for (std::size_t o = 0; o < c_out; ++o) {
      std::size_t dst = 0;
      for (std::size_t c = 0; c < mask.size(); ++c) {
        if (!mask[c]) continue;
        std::copy_n(w.weight.data().begin() + (o * mask.size() + c) * plane,
                    plane, out.weight.data().begin() + (o * kept + dst) * plane);
        ++dst;
      }
    }
  } else {
    const std::size_t block = w.out_channels() * plane;
    out.weight = Tensor({kept, w.out_channels(), ks, ks});
    std::size_t dst = 0;
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (!mask[c]) continue;
      std::copy_n(w.weight.data().begin() + c * block, block,
                  out.weight.data().begin() + dst * block);
      ++dst;
    }
  }
  out.bias = Tensor(w.bias.shape(), w.bias.values());
  return out;
}

Tensor selection_matrix(const std::vector<bool>& mask) {
  const std::size_t kept =
      static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  Tensor s({kept, mask.size()});
  std::size_t row = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) s[row++ * mask.size() + j] = 1.0;
  }
  return s;
}

}  // namespace hyperslim
