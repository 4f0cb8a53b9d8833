#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hyperslim/network.hpp"

namespace hyperslim {

inline constexpr double kPsnrCap = 100.0;

// 10 log10(255^2 / mse) with mse on the 0..255 scale; zero mse gives the cap.
double psnr_from_mse(double mse);
// Images in [0, 1].
double psnr(const Tensor& x, const Tensor& x_hat);

double bpp(double total_bits, std::size_t width, std::size_t height);

struct ImageMetrics {
  std::size_t width = 0;
  std::size_t height = 0;
  double mse = 0.0;
  double psnr_db = 0.0;
  double bpp_y = 0.0;
  double bpp_z = 0.0;
  double bpp = 0.0;
};

// Reflect-pads to a multiple of 64, codes with hard rounding and measures
// distortion on the original region only.
ImageMetrics evaluate_image(const Network& net, const Tensor& image);

struct RDReport {
  std::string model;
  std::vector<ImageMetrics> images;
  double psnr_db = 0.0;  // means over images
  double bpp = 0.0;
  double bpp_y = 0.0;
  double bpp_z = 0.0;
  double mse = 0.0;
  std::size_t params_total = 0;
  std::size_t params_main = 0;
  std::size_t params_hyper = 0;

  // bpp + lambda * mse, averaged per image.
  double rd_loss(double lambda) const;
};

RDReport evaluate(const Network& net, const std::vector<Tensor>& images,
                  const std::string& model);

// One row per model, header
// model,psnr_db,bpp,bpp_y,bpp_z,params_total,params_hyper
// with every real printed to 6 decimals. Parsing and re-emitting the text
// reproduces it byte for byte.
std::string rd_report_csv(const std::vector<RDReport>& reports);
std::vector<RDReport> parse_rd_report_csv(const std::string& text);

struct RatioReport {
  double hyper_param_ratio = 0.0;  // hyper params / total params
  double z_rate_ratio = 0.0;       // mean bpp_z / mean bpp
};
RatioReport ratio_report(const Network& net, const std::vector<Tensor>& eval_set);
RatioReport ratio_report(const RDReport& report);

struct ComparisonTable {
  std::string csv;
  std::string text;
};

// Rows are models plus a trailing "mean" row; deltas are relative to the
// first report. Parameter deltas read like "7.748M/11.582M(33.1%↓)".
ComparisonTable compare_models(const std::vector<RDReport>& reports);

// "12.3k" below a million, "4.969M" above.
std::string format_params(std::size_t count);

}  // namespace hyperslim
