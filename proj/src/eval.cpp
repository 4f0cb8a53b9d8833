#include "hyperslim/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hyperslim/error.hpp"
#include "hyperslim/image.hpp"

namespace hyperslim {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw FormatError("bad " + what + ": '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw FormatError("bad " + what + ": '" + s + "'");
  }
  return static_cast<std::size_t>(std::stoull(s));
}

const char* kCsvHeader = "model,psnr_db,bpp,bpp_y,bpp_z,params_total,params_hyper";

std::string pad_right(const std::string& s, std::size_t width) {
  // Column widths count code points so the arrow glyph does not skew them.
  std::size_t visible = 0;
  for (unsigned char c : s) visible += (c & 0xC0) != 0x80;
  return s + std::string(width > visible ? width - visible : 0, ' ');
}

std::string percent_delta(double base, double value) {
  if (base == 0.0) return "n/a";
  const double pct = 100.0 * (value - base) / base;
  if (std::abs(pct) < 0.05) return "0.0%";
  return fixed(std::abs(pct), 1) + (pct < 0 ? "%↓" : "%↑");
}

}  // namespace

double psnr_from_mse(double mse) {
  if (!(mse >= 0.0)) throw ValidationError("psnr: mse must be >= 0");
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(kDistortionScale / mse));
}

double psnr(const Tensor& x, const Tensor& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw ShapeError("psnr", "element count", x.numel(), x_hat.numel());
  }
  if (x.numel() == 0) throw ValidationError("psnr: empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = x[i] - x_hat[i];
    sum += d * d;
  }
  return psnr_from_mse(kDistortionScale * sum / static_cast<double>(x.numel()));
}

double bpp(double total_bits, std::size_t width, std::size_t height) {
  if (width * height == 0) throw ValidationError("bpp: image has no pixels");
  return total_bits / static_cast<double>(width * height);
}

ImageMetrics evaluate_image(const Network& net, const Tensor& image) {
  if (image.rank() != 4 || image.n() != 1) {
    throw ShapeError("evaluate_image", "batch", 1, image.rank() == 4 ? image.n() : 0);
  }
  const Tensor padded = reflect_pad(image, kDownsampleFactor);
  const EvalResult r = forward_eval(net, padded);
  const Tensor x_hat = crop(r.x_hat, 0, 0, image.h(), image.w());
  ImageMetrics m;
  m.width = image.w();
  m.height = image.h();
  double sum = 0.0;
  for (std::size_t i = 0; i < image.numel(); ++i) {
    const double d = image[i] - x_hat[i];
    sum += d * d;
  }
  m.mse = kDistortionScale * sum / static_cast<double>(image.numel());
  m.psnr_db = psnr_from_mse(m.mse);
  m.bpp_y = bpp(r.rate_y_bits, m.width, m.height);
  m.bpp_z = bpp(r.rate_z_bits, m.width, m.height);
  m.bpp = bpp(r.rate_y_bits + r.rate_z_bits, m.width, m.height);
  return m;
}

double RDReport::rd_loss(double lambda) const { return bpp + lambda * mse; }

RDReport evaluate(const Network& net, const std::vector<Tensor>& images,
                  const std::string& model) {
  if (images.empty()) throw ValidationError("evaluate: empty image set");
  RDReport rep;
  rep.model = model;
  for (const Tensor& im : images) rep.images.push_back(evaluate_image(net, im));
  const double n = static_cast<double>(images.size());
  for (const auto& m : rep.images) {
    rep.psnr_db += m.psnr_db / n;
    rep.bpp_y += m.bpp_y / n;
    rep.bpp_z += m.bpp_z / n;
    rep.mse += m.mse / n;
  }
  rep.bpp = rep.bpp_y + rep.bpp_z;
  rep.params_total = count_parameters(net, CountScope::kTotal);
  rep.params_main = count_parameters(net, CountScope::kMainPath);
  rep.params_hyper = count_parameters(net, CountScope::kHyperPath);
  return rep;
}

std::string rd_report_csv(const std::vector<RDReport>& reports) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : reports) {
    if (r.model.find_first_of(",\n\"") != std::string::npos) {
      throw ValidationError("model tag may not contain commas, quotes or newlines");
    }
    out += r.model + "," + fixed6(r.psnr_db) + "," + fixed6(r.bpp) + "," +
           fixed6(r.bpp_y) + "," + fixed6(r.bpp_z) + "," +
           std::to_string(r.params_total) + "," + std::to_string(r.params_hyper) +
           "\n";
  }
  return out;
}

std::vector<RDReport> parse_rd_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw FormatError("RD report: missing or unexpected header");
  }
  std::vector<RDReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) {
      throw FormatError("RD report: expected 7 columns in '" + line + "'");
    }
    RDReport r;
    r.model = cells[0];
    r.psnr_db = parse_double(cells[1], "psnr_db");
    r.bpp = parse_double(cells[2], "bpp");
    r.bpp_y = parse_double(cells[3], "bpp_y");
    r.bpp_z = parse_double(cells[4], "bpp_z");
    r.params_total = parse_count(cells[5], "params_total");
    r.params_hyper = parse_count(cells[6], "params_hyper");
    r.params_main = r.params_total - std::min(r.params_total, r.params_hyper);
    out.push_back(std::move(r));
  }
  return out;
}

RatioReport ratio_report(const RDReport& report) {
  RatioReport r;
  if (report.params_total > 0) {
    r.hyper_param_ratio = static_cast<double>(report.params_hyper) /
                          static_cast<double>(report.params_total);
  }
  if (report.bpp > 0.0) r.z_rate_ratio = report.bpp_z / report.bpp;
  return r;
}

RatioReport ratio_report(const Network& net, const std::vector<Tensor>& eval_set) {
  if (eval_set.empty()) {
    RatioReport r;
    const std::size_t total = count_parameters(net, CountScope::kTotal);
    if (total > 0) {
      r.hyper_param_ratio =
          static_cast<double>(count_parameters(net, CountScope::kHyperPath)) /
          static_cast<double>(total);
    }
    return r;
  }
  return ratio_report(evaluate(net, eval_set, "ratio"));
}

std::string format_params(std::size_t count) {
  const double c = static_cast<double>(count);
  if (count >= 1000000) return fixed(c / 1e6, 3) + "M";
  return fixed(c / 1e3, 1) + "k";
}

ComparisonTable compare_models(const std::vector<RDReport>& reports) {
  if (reports.size() < 2) {
    throw ValidationError("compare_models: need at least two reports");
  }
  const RDReport& base = reports.front();
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"model", "psnr_db", "bpp", "params_total", "params_hyper",
                  "d_psnr_db", "d_bpp_pct", "hyper_params"});
  ComparisonTable table;
  table.csv =
      "model,psnr_db,bpp,params_total,params_hyper,d_psnr_db,d_bpp_pct,"
      "d_params_hyper_pct\n";
  double sum_psnr = 0.0;
  double sum_bpp = 0.0;
  double sum_total = 0.0;
  double sum_hyper = 0.0;
  for (const auto& r : reports) {
    const double d_psnr = r.psnr_db - base.psnr_db;
    const double d_bpp = base.bpp == 0.0 ? 0.0 : 100.0 * (r.bpp - base.bpp) / base.bpp;
    const double d_hyper =
        base.params_hyper == 0
            ? 0.0
            : 100.0 * (static_cast<double>(r.params_hyper) -
                       static_cast<double>(base.params_hyper)) /
                  static_cast<double>(base.params_hyper);
    table.csv += r.model + "," + fixed6(r.psnr_db) + "," + fixed6(r.bpp) + "," +
                 std::to_string(r.params_total) + "," +
                 std::to_string(r.params_hyper) + "," + fixed6(d_psnr) + "," +
                 fixed6(d_bpp) + "," + fixed6(d_hyper) + "\n";
    const std::string hyper_cell =
        format_params(r.params_hyper) + "/" + format_params(base.params_hyper) +
        "(" +
        percent_delta(static_cast<double>(base.params_hyper),
                      static_cast<double>(r.params_hyper)) +
        ")";
    rows.push_back({r.model, fixed(r.psnr_db, 3), fixed(r.bpp, 4),
                    format_params(r.params_total), format_params(r.params_hyper),
                    (d_psnr >= 0 ? "+" : "") + fixed(d_psnr, 3),
                    (d_bpp >= 0 ? "+" : "") + fixed(d_bpp, 2) + "%", hyper_cell});
    sum_psnr += r.psnr_db;
    sum_bpp += r.bpp;
    sum_total += static_cast<double>(r.params_total);
    sum_hyper += static_cast<double>(r.params_hyper);
  }
  const double n = static_cast<double>(reports.size());
  table.csv += "mean," + fixed6(sum_psnr / n) + "," + fixed6(sum_bpp / n) + "," +
               fixed6(sum_total / n) + "," + fixed6(sum_hyper / n) + ",,,\n";
  rows.push_back({"mean", fixed(sum_psnr / n, 3), fixed(sum_bpp / n, 4),
                  format_params(static_cast<std::size_t>(std::llround(sum_total / n))),
                  format_params(static_cast<std::size_t>(std::llround(sum_hyper / n))),
                  "", "", ""});

  std::vector<std::size_t> widths(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::size_t visible = 0;
      for (unsigned char ch : row[c]) visible += (ch & 0xC0) != 0x80;
      widths[c] = std::max(widths[c], visible);
    }
  }
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += pad_right(row[c], widths[c] + 2);
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    table.text += line + "\n";
  }
  return table;
}

}  // namespace hyperslim
