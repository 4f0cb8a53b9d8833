#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "hyperslim/checkpoint.hpp"
#include "hyperslim/compactor.hpp"
#include "hyperslim/config.hpp"
#include "hyperslim/entropy.hpp"
#include "hyperslim/error.hpp"
#include "hyperslim/eval.hpp"
#include "hyperslim/pipeline.hpp"
#include "hyperslim/prune.hpp"

namespace py = pybind11;
using namespace hyperslim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  std::vector<double> values(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(values));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

// Accepts (3, h, w) or (1, 3, h, w).
Tensor to_image(const Array& a) {
  Tensor t = to_tensor(a);
  if (t.rank() == 3) t = t.reshaped({1, t.dim(0), t.dim(1), t.dim(2)});
  if (t.rank() != 4 || t.n() != 1 || t.c() != 3) {
    throw ValidationError("images must have shape (3, h, w) or (1, 3, h, w)");
  }
  return t;
}

ConvWeights weights(const Array& w, const Array& b, KernelLayout layout,
                    std::size_t stride, std::size_t padding,
                    std::size_t output_padding) {
  ConvWeights cw;
  cw.weight = to_tensor(w);
  cw.bias = to_tensor(b);
  cw.layout = layout;
  cw.stride = stride;
  cw.padding = padding;
  cw.output_padding = output_padding;
  cw.validate("python");
  return cw;
}

py::tuple pair(const ConvWeights& w) {
  return py::make_tuple(to_array(w.weight), to_array(w.bias));
}

CountScope scope_from(const std::string& s) {
  if (s == "total") return CountScope::kTotal;
  if (s == "main") return CountScope::kMainPath;
  if (s == "hyper") return CountScope::kHyperPath;
  throw ValidationError("scope must be 'total', 'main' or 'hyper'");
}

py::dict report_dict(const RDReport& r) {
  py::dict d;
  d["model"] = r.model;
  d["psnr_db"] = r.psnr_db;
  d["bpp"] = r.bpp;
  d["bpp_y"] = r.bpp_y;
  d["bpp_z"] = r.bpp_z;
  d["mse"] = r.mse;
  d["params_total"] = r.params_total;
  d["params_hyper"] = r.params_hyper;
  d["csv"] = rd_report_csv({r});
  return d;
}

// A network bundled with the run configuration that describes its topology.
struct PyNetwork {
  RunConfig cfg;
  Network net;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hyper-path channel pruning for learned image codecs";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def("resolve_config",
        [](const std::string& json) { return run_config_json(parse_run_config(json)); },
        py::arg("config_json") = "{}",
        "Validates a run configuration and returns it with defaults filled in.");

  m.def("conv2d",
        [](const Array& x, const Array& w, const Array& b, std::size_t stride,
           std::size_t padding) {
          return to_array(conv2d(to_tensor(x), weights(w, b, KernelLayout::kConv, stride, padding, 0)));
        },
        py::arg("x"), py::arg("weight"), py::arg("bias"), py::arg("stride") = 1,
        py::arg("padding") = 0);
  m.def("deconv2d",
        [](const Array& x, const Array& w, const Array& b, std::size_t stride,
           std::size_t padding, std::size_t output_padding) {
          return to_array(deconv2d(
              to_tensor(x), weights(w, b, KernelLayout::kDeconv, stride, padding, output_padding)));
        },
        py::arg("x"), py::arg("weight"), py::arg("bias"), py::arg("stride") = 1,
        py::arg("padding") = 0, py::arg("output_padding") = 0);
  m.def("pixel_shuffle",
        [](const Array& x, std::size_t alpha) { return to_array(pixel_shuffle(to_tensor(x), alpha)); },
        py::arg("x"), py::arg("alpha"));

  m.def("merge_conv",
        [](const Array& w, const Array& b, const Array& rp) {
          return pair(merge_conv(weights(w, b, KernelLayout::kConv, 1, 0, 0), to_tensor(rp)));
        },
        py::arg("weight"), py::arg("bias"), py::arg("rp"),
        "Folds a compactor (rows rp) into a conv; returns (weight, bias).");
  m.def("merge_pixelshuffle",
        [](const Array& w, const Array& b, const Array& rp, std::size_t alpha) {
          return pair(merge_pixelshuffle(weights(w, b, KernelLayout::kConv, 1, 0, 0),
                                         to_tensor(rp), alpha));
        },
        py::arg("weight"), py::arg("bias"), py::arg("rp"), py::arg("alpha"));
  m.def("merge_deconv",
        [](const Array& w, const Array& b, const Array& rp) {
          return pair(merge_deconv(weights(w, b, KernelLayout::kDeconv, 1, 0, 0), to_tensor(rp)));
        },
        py::arg("weight"), py::arg("bias"), py::arg("rp"));

  m.def("gaussian_rate_bits",
        [](const Array& values, const Array& sigma) {
          return gaussian_rate(to_tensor(values), to_tensor(sigma), GaussianConditionalModel{})
              .total_bits;
        },
        py::arg("values"), py::arg("sigma"));
  m.def("psnr_from_mse", &psnr_from_mse, py::arg("mse"));

  m.def("verify_merges",
        [](std::uint64_t seed, std::size_t trials) {
          py::list out;
          for (const auto& c : verify_merges(seed, trials)) {
            py::dict d;
            d["op"] = c.op;
            d["trials"] = c.trials;
            d["max_relative_error"] = c.max_relative_error;
            out.append(d);
          }
          return out;
        },
        py::arg("seed") = 0, py::arg("trials") = 100);

  py::class_<PyNetwork>(m, "Network")
      .def(py::init([](const std::string& json) {
             PyNetwork p;
             p.cfg = parse_run_config(json);
             p.net = build_hyperprior(p.cfg.network);
             return p;
           }),
           py::arg("config_json") = "{}")
      .def_static("load",
                  [](const std::string& path, const std::string& json) {
                    PyNetwork p;
                    p.cfg = parse_run_config(json);
                    p.net = load_network(path, p.cfg.network);
                    return p;
                  },
                  py::arg("path"), py::arg("config_json") = "{}")
      .def("save", [](const PyNetwork& p, const std::string& path) { save_network(p.net, path); })
      .def("count_parameters",
           [](const PyNetwork& p, const std::string& scope) {
             return count_parameters(p.net, scope_from(scope));
           },
           py::arg("scope") = "total")
      .def_property_readonly("compactor_count",
                             [](const PyNetwork& p) { return p.net.compactor_count(); })
      .def("evaluate",
           [](const PyNetwork& p, const std::vector<Array>& images, const std::string& tag) {
             std::vector<Tensor> ims;
             for (const auto& a : images) ims.push_back(to_image(a));
             return report_dict(evaluate(p.net, ims, tag));
           },
           py::arg("images"), py::arg("tag") = "model")
      .def("encode",
           [](const PyNetwork& p, const Array& image) {
             const EvalResult r = forward_eval(p.net, to_image(image));
             py::dict d;
             d["x_hat"] = to_array(r.x_hat);
             d["y_hat"] = to_array(r.y_hat);
             d["z_hat"] = to_array(r.z_hat);
             d["rate_y_bits"] = r.rate_y_bits;
             d["rate_z_bits"] = r.rate_z_bits;
             return d;
           },
           py::arg("image"), "Hard-rounding forward pass on an image whose sides are multiples of 64.")
      .def("attach_and_freeze", [](PyNetwork& p) { attach_and_freeze(p.net); })
      .def("merge",
           [](PyNetwork& p) { return physical_prune_and_merge(p.net).size(); },
           "Folds all compactors into their hosts; returns the number merged.")
      .def("manual_uniform_prune",
           [](PyNetwork& p, double ratio) { manual_uniform_prune(p.net, ratio); },
           py::arg("ratio"))
      .def("pretrain",
           [](PyNetwork& p, std::size_t steps) {
             RunConfig cfg = p.cfg;
             cfg.pretrain.steps = steps;
             const DataSplit data = load_data(cfg);
             const auto log = pretrain(p.net, training_patches(cfg, data.train), cfg);
             return log.empty() ? 0.0 : log.back().terms.loss;
           },
           py::arg("steps"), "Trains on the configured data; returns the last logged loss.")
      .def("prune",
           [](PyNetwork& p) {
             const DataSplit data = load_data(p.cfg);
             PatchSet patches = training_patches(p.cfg, data.train);
             const PruneRun run = run_prune(p.net, patches, p.cfg);
             py::dict d;
             d["steps"] = run.state.step;
             d["reduction"] = run.state.reduction();
             d["history_csv"] = prune_history_csv(run.state);
             return d;
           },
           "Runs the full compactor pruning pipeline with the configured settings.");
}
