// Command-line driver: pretrain, prune, ablate, evaluate and report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperslim/checkpoint.hpp"
#include "hyperslim/config.hpp"
#include "hyperslim/error.hpp"
#include "hyperslim/eval.hpp"
#include "hyperslim/image.hpp"
#include "hyperslim/pipeline.hpp"
#include "hyperslim/random.hpp"

namespace fs = std::filesystem;
using namespace hyperslim;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Raised for runs that complete but miss a configured requirement.
class RunFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string checkpoint;
  std::string out = ".";
  std::string data;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? parse_run_config("{}") : load_run_config(c.config);
  if (c.seed_set) cfg.seed = c.seed;
  if (!c.data.empty()) {
    cfg.train_dir = (fs::path(c.data) / "train").string();
    cfg.val_dir = (fs::path(c.data) / "val").string();
  }
  cfg.finalize();
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return c.out;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(file.string() + ": cannot open for writing");
  out << text;
  if (!out) throw Error(file.string() + ": write failed");
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError(file.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Network require_checkpoint(const Common& c, const RunConfig& cfg) {
  if (c.checkpoint.empty()) throw ValidationError("--checkpoint is required");
  if (!fs::exists(c.checkpoint)) {
    throw ValidationError(c.checkpoint + ": checkpoint not found");
  }
  return load_network(c.checkpoint, cfg.network);
}

void log(const std::string& msg) { std::cerr << msg << "\n"; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

int cmd_make_data(const Common& c) {
  const RunConfig cfg = resolve(c);
  const fs::path root = out_dir(c);
  const std::size_t s = cfg.synthetic_size;
  for (const auto& [name, count, stream] :
       {std::tuple{"train", cfg.synthetic_train, 41}, std::tuple{"val", cfg.synthetic_val, 42}}) {
    const fs::path dir = root / name;
    fs::create_directories(dir);
    const auto images = synthetic_images(count, s, s, mix_seed(cfg.seed, stream));
    for (std::size_t i = 0; i < images.size(); ++i) {
      char file[32];
      std::snprintf(file, sizeof(file), "img_%04zu.ppm", i);
      write_ppm(dir / file, images[i]);
    }
    log(std::string("wrote ") + std::to_string(images.size()) + " images to " + dir.string());
  }
  return 0;
}

int cmd_pretrain(const Common& c) {
  const RunConfig cfg = resolve(c);
  Network net = c.checkpoint.empty() ? build_hyperprior(cfg.network)
                                     : require_checkpoint(c, cfg);
  const DataSplit data = load_data(cfg);
  const PatchSet patches = training_patches(cfg, data.train);
  log("pretraining " + std::to_string(cfg.pretrain.steps) + " steps on " +
      std::to_string(patches.size()) + " patches");
  const auto history = pretrain(net, patches, cfg);
  const fs::path dir = out_dir(c);
  save_network(net, dir / "model.hpck");
  write_text(dir / "pretrain_log.csv", train_log_csv(history));
  write_text(dir / "config.json", run_config_json(cfg) + "\n");
  const RDReport rep = evaluate(net, data.val, "pretrained");
  write_text(dir / "rd_report.csv", rd_report_csv({rep}));
  std::cout << rd_report_csv({rep});
  return 0;
}

int cmd_prune(const Common& c) {
  const RunConfig cfg = resolve(c);
  Network net = require_checkpoint(c, cfg);
  const DataSplit data = load_data(cfg);
  PatchSet patches = training_patches(cfg, data.train);
  const RDReport base = evaluate(net, data.val, "baseline");

  const PruneRun run = run_prune(net, patches, cfg);
  const RDReport slim = evaluate(net, data.val, "pruned");
  const fs::path dir = out_dir(c);
  save_network(net, dir / "pruned.hpck");
  write_text(dir / "prune_history.csv", prune_history_csv(run.state));
  write_text(dir / "merge_report.csv", merge_report_csv(run.merges));
  write_text(dir / "rd_report.csv", rd_report_csv({base, slim}));
  if (!run.finetune.log.empty()) {
    write_text(dir / "finetune_log.csv", train_log_csv(run.finetune.log));
  }

  const double reduction =
      1.0 - static_cast<double>(slim.params_hyper) / static_cast<double>(base.params_hyper);
  std::cout << compare_models({base, slim}).text;
  std::cout << "hyper-path reduction " << fmt("%.4f", reduction) << " after "
            << run.state.step << " penalized steps; rd loss "
            << fmt("%.6f", slim.rd_loss(cfg.lambda)) << " vs "
            << fmt("%.6f", base.rd_loss(cfg.lambda)) << "\n";
  if (reduction + 1e-12 < cfg.reduction_floor) {
    throw RunFailure("hyper-path reduction " + fmt("%.4f", reduction) +
                     " is below reduction_floor " + fmt("%.4f", cfg.reduction_floor));
  }
  return 0;
}

int cmd_manual_prune(const Common& c, double ratio) {
  RunConfig cfg = resolve(c);
  if (ratio > 0.0) cfg.manual_ratio = ratio;
  cfg.validate();
  Network net = require_checkpoint(c, cfg);
  const auto records = manual_uniform_prune(net, cfg.manual_ratio);
  const fs::path dir = out_dir(c);
  save_network(net, dir / "manual.hpck");
  write_text(dir / "merge_report.csv", merge_report_csv(records));
  std::cout << "hyper-path parameters " << count_parameters(net, CountScope::kHyperPath)
            << "\n";
  return 0;
}

int cmd_finetune(const Common& c, long steps) {
  const RunConfig cfg = resolve(c);
  Network net = require_checkpoint(c, cfg);
  const DataSplit data = load_data(cfg);
  PatchSet patches = training_patches(cfg, data.train);
  const std::size_t n =
      steps >= 0 ? static_cast<std::size_t>(steps) : cfg.prune.finetune_steps;
  const FinetuneResult r = run_finetune(net, patches, cfg, n);
  const fs::path dir = out_dir(c);
  save_network(net, dir / "finetuned.hpck");
  write_text(dir / "finetune_log.csv", train_log_csv(r.log));
  std::cout << "finetune best step " << r.best_step << " loss " << fmt("%.6f", r.best_loss)
            << " (start " << fmt("%.6f", r.start_loss) << ")\n";
  return 0;
}

int cmd_eval(const Common& c, const std::string& tag) {
  const RunConfig cfg = resolve(c);
  const Network net = require_checkpoint(c, cfg);
  const DataSplit data = load_data(cfg);
  const RDReport rep = evaluate(net, data.val, tag);
  const fs::path dir = out_dir(c);
  write_text(dir / "rd_report.csv", rd_report_csv({rep}));
  const RatioReport ratio = ratio_report(rep);
  std::cout << rd_report_csv({rep});
  std::cout << "hyper_param_ratio " << fmt("%.6f", ratio.hyper_param_ratio)
            << " z_rate_ratio " << fmt("%.6f", ratio.z_rate_ratio) << "\n";
  return 0;
}

int cmd_merge_verify(const Common& c, std::size_t trials) {
  bool ok = true;
  for (const auto& m : verify_merges(c.seed, trials)) {
    const bool pass = m.max_relative_error <= 1e-9;
    ok = ok && pass;
    std::printf("%-28s trials %zu max_rel_err %.3e %s\n", m.op.c_str(), m.trials,
                m.max_relative_error, pass ? "ok" : "FAIL");
  }
  if (!ok) throw RunFailure("merge verification exceeded 1e-9");
  return 0;
}

int cmd_report(const Common& c, const std::vector<std::string>& inputs) {
  std::vector<RDReport> reports;
  for (const auto& f : inputs) {
    for (auto& r : parse_rd_report_csv(read_text(f))) reports.push_back(std::move(r));
  }
  const ComparisonTable t = compare_models(reports);
  const fs::path dir = out_dir(c);
  write_text(dir / "comparison.csv", t.csv);
  write_text(dir / "comparison.txt", t.text);
  std::cout << t.text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyper-path channel pruning for learned image codecs"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "run configuration (JSON)");
    sub->add_option("--checkpoint", common.checkpoint, "input checkpoint (HPCK)");
    sub->add_option("--out", common.out, "output directory");
    sub->add_option("--data", common.data, "directory with train/ and val/ PPM images");
    sub->add_option("--seed", common.seed, "seed; overrides the config")
        ->each([&](const std::string&) { common.seed_set = true; });
  };

  auto* make_data = app.add_subcommand("make-data", "write procedural train/val images");
  auto* pre = app.add_subcommand("pretrain", "rate-distortion training of the full codec");
  auto* prune = app.add_subcommand("prune", "compactor pruning of the hyper path");
  auto* manual = app.add_subcommand("manual-prune", "uniform channel pruning baseline");
  double ratio = 0.0;
  manual->add_option("--ratio", ratio, "fraction of channels kept per layer");
  auto* ft = app.add_subcommand("finetune", "hyper-path finetuning");
  long ft_steps = -1;
  ft->add_option("--steps", ft_steps, "steps (default: finetune_steps from config)");
  auto* ev = app.add_subcommand("eval", "evaluate on the validation images");
  std::string tag = "model";
  ev->add_option("--tag", tag, "model name in the report");
  auto* mv = app.add_subcommand("merge-verify", "randomized merge exactness check");
  std::size_t trials = 100;
  mv->add_option("--trials", trials, "instances per merge case");
  auto* rep = app.add_subcommand("report", "compare RD report CSVs");
  std::vector<std::string> inputs;
  rep->add_option("reports", inputs, "RD report CSV files, baseline first")->required();

  for (auto* sub : {make_data, pre, prune, manual, ft, ev, mv, rep}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*make_data) return cmd_make_data(common);
    if (*pre) return cmd_pretrain(common);
    if (*prune) return cmd_prune(common);
    if (*manual) return cmd_manual_prune(common, ratio);
    if (*ft) return cmd_finetune(common, ft_steps);
    if (*ev) return cmd_eval(common, tag);
    if (*mv) return cmd_merge_verify(common, trials);
    if (*rep) return cmd_report(common, inputs);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
