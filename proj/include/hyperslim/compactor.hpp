#pragma once

#include <cstddef>
#include <vector>

#include "hyperslim/ops.hpp"
#include "hyperslim/tensor.hpp"

namespace hyperslim {

// Where a compactor sits relative to its host layer. For PixelShuffle hosts
// the compactor always follows the shuffle, so that each kept channel owns
// a whole alpha^2 group of conv filters.
enum class Placement { kAfterConv, kAfterShuffle, kAfterDeconv };

const char* placement_name(Placement placement);

// A 1x1 channel mixer R (rows x C) appended to a host layer.
//
// Fresh compactors are the C x C identity. `mask` has one entry per row of
// the unpruned compactor; rows with a false entry are soft-pruned (held at
// zero) until physical pruning drops them.
struct Compactor {
  Tensor r;
  Placement placement = Placement::kAfterConv;
  std::vector<bool> mask;

  std::size_t channels() const { return r.dim(1); }
  std::size_t rows() const { return r.dim(0); }
  std::size_t kept() const;

  // Rows of R with a true mask entry, in ascending original order.
  Tensor kept_rows() const;
  // Zeroes the rows (and their gradients) whose mask entry is false.
  void apply_mask();
};

Compactor init_identity(std::size_t channels,
                        Placement placement = Placement::kAfterConv);

// out[n, j, h, w] = sum_c R[j, c] * t[n, c, h, w]
Tensor apply_compactor(const Tensor& t, const Compactor& c);

// Plain L1 norm of a weight array.
double lasso_penalty(std::span<const double> weights);

// Euclidean norms of the rows of a rank-2 matrix.
std::vector<double> row_norms(const Tensor& r);

// Sum over compactors of the row norms of R. Unscaled; multiply by beta.
double group_lasso_penalty(const std::vector<const Compactor*>& compactors);
double group_lasso_penalty(const Tensor& r);

inline constexpr double kNormDeadZone = 1e-12;

// Row j of the result is row_j / ||row_j|| when the norm exceeds
// `dead_zone`, and zero otherwise.
Tensor group_lasso_gradient(const Tensor& r, double dead_zone = kNormDeadZone);

// Keeps rows whose norm is >= threshold. If fewer than min_keep survive,
// the min_keep largest-norm rows are kept instead, ties going to the lower
// index.
std::vector<bool> select_channels(const Compactor& c, double threshold,
                                  std::size_t min_keep);

// conv(x, merged) == apply_compactor(conv(x, w), rp).
ConvWeights merge_conv(const ConvWeights& w, const Tensor& rp);

// For a conv feeding PixelShuffle(alpha), folds a compactor that sits after
// the shuffle into the conv. Every phase k (the filters k, k + alpha^2, ...)
// is mixed by rp exactly as merge_conv mixes whole channels; merged filter
// c' * alpha^2 + k belongs to kept channel c' and phase k.
ConvWeights merge_pixelshuffle(const ConvWeights& w, const Tensor& rp,
                               std::size_t alpha);

// Same algebra for the transposed layout (C_in, C_out, ks, ks).
ConvWeights merge_deconv(const ConvWeights& w, const Tensor& rp);

// Keeps only the input-channel slices of a consumer whose mask entry is
// true. Handles both layouts.
ConvWeights slice_input_channels(const ConvWeights& w,
                                 const std::vector<bool>& mask);

// rows-of-identity selection matrix for `mask`.
Tensor selection_matrix(const std::vector<bool>& mask);

}  // namespace hyperslim
