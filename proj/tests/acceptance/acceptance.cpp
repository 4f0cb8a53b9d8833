// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. The desk-scale criteria pretrain three small codecs and
// take several minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyperslim/checkpoint.hpp"
#include "hyperslim/compactor.hpp"
#include "hyperslim/config.hpp"
#include "hyperslim/entropy.hpp"
#include "hyperslim/eval.hpp"
#include "hyperslim/image.hpp"
#include "hyperslim/pipeline.hpp"
#include "hyperslim/random.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace hyperslim;
using namespace hyperslim::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  if (!o.pass) ++failures;
  std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

void run(const std::string& name, const std::function<Outcome()>& body) {
  try {
    report(name, body());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

double rel(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

Tensor random_image(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_tensor({1, 3, 64, 64}, rng, 0.0, 1.0);
}

std::vector<Compactor*> compactors_of(Network& net) {
  std::vector<Compactor*> out;
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder})
    for (Layer& l : net.path(p))
      if (l.compactor) out.push_back(&*l.compactor);
  return out;
}

std::string read_file(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Hyper-path parameters of the default topology for the given widths.
// a0, a2, a4: h_a conv outputs; s0, s2: h_s deconv and post-shuffle widths.
std::size_t hyper_closed_form(std::size_t m, std::size_t a0, std::size_t a2,
                              std::size_t a4, std::size_t s0, std::size_t s2) {
  return (m * a0 * 9 + a0) + (a0 * a2 * 25 + a2) + (a2 * a4 * 25 + a4) +
         (a4 * s0 * 25 + s0) + (s0 * 4 * s2 * 9 + 4 * s2) + (s2 * m * 9 + m);
}

std::size_t closed_form_of(const Network& net) {
  const auto& ha = net.path(PathId::kHyperEncoder);
  const auto& hs = net.path(PathId::kHyperDecoder);
  return hyper_closed_form(net.latent_channels(), ha[0].spec.out_channels,
                           ha[2].spec.out_channels, ha[4].spec.out_channels,
                           hs[0].spec.out_channels, hs[2].spec.out_channels);
}

// ---- finite differences ---------------------------------------------------

struct FdAudit {
  double worst = 0.0;
  std::size_t checked = 0;

  // Central differences at a few step sizes; the best agreement counts, so
  // a step that straddles a kink does not mask a correct gradient.
  void check(double& x, double analytic, const std::function<double()>& loss) {
    const double orig = x;
    double best = 1e300;
    for (double h : {1e-4, 1e-5, 1e-6}) {
      x = orig + h;
      const double up = loss();
      x = orig - h;
      const double down = loss();
      x = orig;
      const double numeric = (up - down) / (2 * h);
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      best = std::min(best, std::abs(numeric - analytic) / scale);
    }
    worst = std::max(worst, best);
    ++checked;
  }

  void sample(Tensor& t, const std::vector<double>& grad, std::mt19937_64& rng,
              std::size_t count, const std::function<double()>& loss) {
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = rng() % t.numel();
      check(t[i], grad[i], loss);
    }
  }
};

std::vector<double> values(const Tensor& t) { return t.values(); }

Outcome gradient_audit() {
  std::mt19937_64 rng(17);
  std::vector<std::string> parts;
  double worst = 0.0;
  auto record = [&](const std::string& name, const FdAudit& a) {
    parts.push_back(name + " " + fmt("%.1e", a.worst));
    worst = std::max(worst, a.worst);
  };

  {  // conv
    Tensor x = random_tensor({2, 3, 7, 7}, rng);
    ConvWeights w = make_conv(3, 4, 3, 2, 1);
    randomize(w, rng);
    const Tensor g = random_tensor(conv2d(x, w).shape(), rng);
    const ConvGrads an = conv2d_backward(x, w, g, true);
    auto loss = [&] { return dot(conv2d(x, w), g); };
    FdAudit a;
    a.sample(x, values(an.input), rng, 12, loss);
    a.sample(w.weight, values(an.weight), rng, 12, loss);
    a.sample(w.bias, values(an.bias), rng, 4, loss);
    record("conv", a);
  }
  {  // deconv
    Tensor x = random_tensor({2, 3, 4, 4}, rng);
    ConvWeights w = make_deconv(3, 4, 5, 2, 2, 1);
    randomize(w, rng);
    const Tensor g = random_tensor(deconv2d(x, w).shape(), rng);
    const ConvGrads an = deconv2d_backward(x, w, g, true);
    auto loss = [&] { return dot(deconv2d(x, w), g); };
    FdAudit a;
    a.sample(x, values(an.input), rng, 12, loss);
    a.sample(w.weight, values(an.weight), rng, 12, loss);
    a.sample(w.bias, values(an.bias), rng, 4, loss);
    record("deconv", a);
  }
  {  // conv -> pixel shuffle -> compactor
    Tensor x = random_tensor({1, 3, 4, 4}, rng);
    ConvWeights w = make_conv(3, 4 * 5, 3, 1, 1);
    randomize(w, rng);
    Tensor r = random_tensor({4, 5}, rng);
    auto forward = [&] { return channel_mix(pixel_shuffle(conv2d(x, w), 2), r); };
    const Tensor g = random_tensor(forward().shape(), rng);
    const Tensor shuffled = pixel_shuffle(conv2d(x, w), 2);
    std::vector<double> r_grad(r.numel(), 0.0);
    const Tensor g_shuffled = channel_mix_backward(shuffled, r, g, r_grad);
    const ConvGrads an = conv2d_backward(x, w, pixel_unshuffle(g_shuffled, 2), true);
    auto loss = [&] { return dot(forward(), g); };
    FdAudit a;
    a.sample(x, values(an.input), rng, 10, loss);
    a.sample(w.weight, values(an.weight), rng, 10, loss);
    a.sample(r, r_grad, rng, 10, loss);
    record("pixelshuffle-path", a);
  }
  {  // activation, away from the kink
    Tensor x = random_tensor({1, 2, 5, 5}, rng);
    for (double& v : x.data()) v += v >= 0 ? 0.05 : -0.05;
    const Tensor g = random_tensor(x.shape(), rng);
    const Tensor an = activation_backward(x, g, ActivationKind::kLeakyRelu);
    auto loss = [&] { return dot(activation(x, ActivationKind::kLeakyRelu), g); };
    FdAudit a;
    a.sample(x, values(an), rng, 20, loss);
    record("activation", a);
  }
  {  // gaussian conditional rate
    Tensor v = random_tensor({1, 3, 4, 4}, rng, -3.0, 3.0);
    Tensor s = random_tensor({1, 3, 4, 4}, rng, 0.2, 3.0);
    const GaussianConditionalModel model;
    const GaussianRateGrads an = gaussian_rate_backward(v, s, model, 1.0);
    auto loss = [&] { return gaussian_rate(v, s, model).total_bits; };
    FdAudit a;
    a.sample(v, values(an.values), rng, 16, loss);
    a.sample(s, values(an.sigma), rng, 16, loss);
    record("gaussian-rate", a);
  }
  {  // factorized rate
    FactorizedModel model = FactorizedModel::make(3);
    for (double& m : model.mean.data()) m = 0.5 * (unit_uniform(rng) - 0.5);
    for (double& s : model.scale.data()) s = 0.5 + 2.0 * unit_uniform(rng);
    Tensor v = random_tensor({2, 3, 2, 2}, rng, -3.0, 3.0);
    model.mean.zero_grad();
    model.scale.zero_grad();
    const Tensor an = factorized_rate_backward(v, model, 1.0, true);
    const std::vector<double> gm(model.mean.grad().begin(), model.mean.grad().end());
    const std::vector<double> gs(model.scale.grad().begin(), model.scale.grad().end());
    auto loss = [&] { return factorized_rate(v, model).total_bits; };
    FdAudit a;
    a.sample(v, values(an), rng, 16, loss);
    for (std::size_t c = 0; c < 3; ++c) {
      a.check(model.mean[c], gm[c], loss);
      a.check(model.scale[c], gs[c], loss);
    }
    record("factorized-rate", a);
  }
  {  // group lasso, rows well away from zero norm
    Tensor r = random_tensor({4, 5}, rng);
    const Tensor an = group_lasso_gradient(r);
    auto loss = [&] { return group_lasso_penalty(r); };
    FdAudit a;
    a.sample(r, values(an), rng, 20, loss);
    record("group-lasso", a);
  }

  std::string detail = "worst rel err " + fmt("%.2e", worst) + " (";
  for (std::size_t i = 0; i < parts.size(); ++i) detail += (i ? ", " : "") + parts[i];
  return {worst <= 1e-4, detail + ")"};
}

// ---- desk-scale pipeline -------------------------------------------------

struct Desk {
  RunConfig cfg;
  DataSplit data;
  PatchSet patches;
  Network pretrained;
  RDReport base;
};

RunConfig desk_config(const fs::path& file, double lambda) {
  RunConfig cfg = load_run_config(file);
  cfg.lambda = lambda;
  cfg.finalize();
  cfg.validate();
  return cfg;
}

Desk make_desk(const fs::path& config, double lambda, const std::string& cache) {
  Desk d;
  d.cfg = desk_config(config, lambda);
  d.data = load_data(d.cfg);
  d.patches = training_patches(d.cfg, d.data.train);
  const fs::path cached =
      cache.empty() ? fs::path() : fs::path(cache) / ("pretrained_" + fmt("%g", lambda) + ".hpck");
  if (!cache.empty() && fs::exists(cached)) {
    d.pretrained = load_network(cached, d.cfg.network);
  } else {
    const auto t0 = Clock::now();
    d.pretrained = build_hyperprior(d.cfg.network);
    pretrain(d.pretrained, d.patches, d.cfg);
    std::fprintf(stderr, "pretrained lambda=%g in %.0f s\n", lambda, seconds_since(t0));
    if (!cache.empty()) {
      fs::create_directories(cache);
      save_network(d.pretrained, cached);
    }
  }
  d.base = evaluate(d.pretrained, d.data.val, "baseline");
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::string config;
  std::string cache;
  std::string work = (fs::temp_directory_path() / "hyperslim_acceptance").string();
  bool quick = false;
  app.add_option("--cli", cli, "command-line tool for the determinism check")->required();
  app.add_option("--config", config, "desk configuration")->required();
  app.add_option("--cache", cache, "reuse pretrained checkpoints from this directory");
  app.add_option("--work", work, "scratch directory");
  app.add_flag("--quick", quick, "skip the desk-scale training criteria");
  CLI11_PARSE(app, argc, argv);
  fs::remove_all(work);
  fs::create_directories(work);

  run("merge exactness", [] {
    const auto t0 = Clock::now();
    double worst = 0.0;
    std::string detail;
    for (const auto& m : verify_merges(0, 100)) {
      worst = std::max(worst, m.max_relative_error);
      detail += m.op + " " + fmt("%.1e", m.max_relative_error) + ", ";
    }
    // The library merge must also agree with the loop-based oracles.
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
      ConvWeights w = make_conv(3, 5, 3, 1 + t % 2, 1);
      randomize(w, rng);
      const Tensor rp = random_tensor({1 + static_cast<std::size_t>(t % 5), 5}, rng);
      const Tensor x = random_tensor({1, 3, 6, 6}, rng);
      worst = std::max(worst, max_relative_error(conv2d(x, merge_conv(w, rp)),
                                                 reference_channel_mix(reference_conv(x, w), rp)));
      ConvWeights d = make_deconv(3, 5, 5, 1 + t % 2, 2, t % 2);
      randomize(d, rng);
      worst = std::max(worst, max_relative_error(deconv2d(x, merge_deconv(d, rp)),
                                                 reference_channel_mix(reference_deconv(x, d), rp)));
    }
    const double secs = seconds_since(t0);
    return Outcome{worst <= 1e-9 && secs < 10.0,
                   detail + "oracle cross-check; worst " + fmt("%.2e", worst) + " in " +
                       fmt("%.2f", secs) + " s"};
  });

  run("identity safety", [] {
    Network net = build_hyperprior(default_hyperprior_config());
    std::vector<Tensor> xs;
    std::vector<EvalResult> before;
    for (std::uint64_t k = 0; k < 10; ++k) {
      xs.push_back(random_image(500 + k));
      before.push_back(forward_eval(net, xs.back()));
    }
    attach_and_freeze(net);
    double worst = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const EvalResult a = forward_eval(net, xs[k]);
      worst = std::max({worst, max_relative_error(a.x_hat, before[k].x_hat),
                        max_relative_error(a.sigma, before[k].sigma),
                        rel(a.rate_y_bits, before[k].rate_y_bits),
                        rel(a.rate_z_bits, before[k].rate_z_bits)});
    }
    return Outcome{worst <= 1e-12 && net.compactor_count() == 5,
                   std::to_string(net.compactor_count()) + " compactors, max rel change " +
                       fmt("%.2e", worst)};
  });

  run("gradient audit", gradient_audit);

  run("penalty mechanics", [] {
    Network net = build_hyperprior(default_hyperprior_config());
    attach_and_freeze(net);
    std::mt19937_64 rng(8);
    for (Compactor* c : compactors_of(net))
      for (double& v : c->r.data()) v = unit_uniform(rng) - 0.25;
    std::vector<std::vector<double>> before;
    for (Compactor* c : compactors_of(net)) before.push_back(row_norms(c->r));
    PatchSet data(synthetic_images(2, 64, 64, 1));
    PruneConfig cfg;
    cfg.beta = 0.2;
    cfg.lr = 0.01;
    Optimizer opt(OptimizerKind::kSgd, net.trainable_parameters());
    penalized_step(net, opt, data.batch({0, 1}), cfg, 3, {.zero_data_gradient = true});
    double worst = 0.0;
    std::size_t rows = 0;
    std::size_t k = 0;
    for (Compactor* c : compactors_of(net)) {
      const auto after = row_norms(c->r);
      for (std::size_t j = 0; j < after.size(); ++j, ++rows)
        worst = std::max(worst, std::abs(before[k][j] - after[j] - cfg.lr * cfg.beta));
      ++k;
    }
    return Outcome{worst <= 1e-12, std::to_string(rows) + " rows, shrink error " +
                                       fmt("%.2e", worst) + " vs lr*beta " +
                                       fmt("%.1e", cfg.lr * cfg.beta)};
  });

  run("soft/hard prune equivalence", [] {
    double worst = 0.0;
    std::size_t inputs = 0;
    for (std::uint64_t trial = 0; trial < 3; ++trial) {
      Network soft = build_hyperprior(default_hyperprior_config());
      attach_and_freeze(soft);
      std::mt19937_64 rng(40 + trial);
      for (Compactor* c : compactors_of(soft)) {
        for (double& v : c->r.data()) v += 0.3 * (unit_uniform(rng) - 0.5);
        for (std::size_t j = 0; j < c->rows(); ++j) c->mask[j] = unit_uniform(rng) < 0.5;
        c->mask[rng() % c->rows()] = true;
      }
      soft.enforce_constraints();
      Network hard = soft;
      physical_prune_and_merge(hard);
      for (std::uint64_t k = 0; k < 20; ++k, ++inputs) {
        worst = std::max(worst, hyper_path_gap(soft, hard, rng));
        const Tensor x = random_image(900 + 20 * trial + k);
        const EvalResult a = forward_eval(soft, x);
        const EvalResult b = forward_eval(hard, x);
        worst = std::max({worst, max_relative_error(b.x_hat, a.x_hat),
                          max_relative_error(b.sigma, a.sigma),
                          rel(b.rate_y_bits, a.rate_y_bits),
                          rel(b.rate_z_bits, a.rate_z_bits)});
      }
    }
    return Outcome{worst <= 1e-9, std::to_string(inputs) + " inputs (image, latent and hyper-latent) over 3 random masks, max rel err " +
                                      fmt("%.2e", worst)};
  });

  run("parameter counter", [] {
    const std::size_t small =
        count_parameters(build_hyperprior(reference_hyperprior_config(128, 192)), CountScope::kTotal);
    const std::size_t large =
        count_parameters(build_hyperprior(reference_hyperprior_config(192, 320)), CountScope::kTotal);
    const bool published_ok = rel(static_cast<double>(small), 4.969e6) <= 0.02 &&
                          rel(static_cast<double>(large), 11.582e6) <= 0.02;

    bool desk_ok = true;
    std::size_t configs = 0;
    for (std::size_t n : {8, 16, 32}) {
      for (std::size_t m : {12, 48}) {
        Network net = build_hyperprior(default_hyperprior_config(n, m));
        desk_ok = desk_ok && count_parameters(net, CountScope::kHyperPath) ==
                                 hyper_closed_form(m, n, n, n, n, n);
        for (double ratio : {0.25, 0.5, 0.75}) {
          Network cut = net;
          manual_uniform_prune(cut, ratio);
          const auto k = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
          desk_ok = desk_ok && count_parameters(cut, CountScope::kHyperPath) ==
                                   hyper_closed_form(m, k, k, k, k, k);
          ++configs;
        }
        // Uneven widths from random masks.
        Network soft = net;
        attach_and_freeze(soft);
        std::mt19937_64 rng(n * 100 + m);
        for (Compactor* c : compactors_of(soft)) {
          for (std::size_t j = 0; j < c->rows(); ++j) c->mask[j] = unit_uniform(rng) < 0.6;
          c->mask[0] = true;
        }
        soft.enforce_constraints();
        const std::size_t projected = projected_hyper_parameters(soft);
        physical_prune_and_merge(soft);
        const std::size_t counted = count_parameters(soft, CountScope::kHyperPath);
        desk_ok = desk_ok && counted == projected && counted == closed_form_of(soft);
        ++configs;
      }
    }
    return Outcome{published_ok && desk_ok,
                   "reference totals " + std::to_string(small) + " / " + std::to_string(large) +
                       " vs 4.969M / 11.582M; " + std::to_string(configs) +
                       " desk configs " + (desk_ok ? "exact" : "MISMATCH")};
  });

  if (quick) {
    std::printf("quick mode: desk-scale criteria skipped\n");
    return failures == 0 ? 0 : 1;
  }

  // Desk-scale criteria share the pretrained lambda = 0.01 model.
  std::vector<Desk> desks;
  for (double lambda : {0.005, 0.01, 0.02}) desks.push_back(make_desk(config, lambda, cache));
  Desk& mid = desks[1];

  run("desk-scale pruning", [&] {
    const auto t0 = Clock::now();
    Network net = mid.pretrained;
    PatchSet patches = mid.patches;
    const PruneRun r = run_prune(net, patches, mid.cfg);
    const RDReport slim = evaluate(net, mid.data.val, "pruned");
    const double reduction = 1.0 - static_cast<double>(slim.params_hyper) /
                                       static_cast<double>(mid.base.params_hyper);
    const double ratio = slim.rd_loss(mid.cfg.lambda) / mid.base.rd_loss(mid.cfg.lambda);
    return Outcome{reduction >= 0.4 && ratio <= 1.02,
                   "hyper params " + std::to_string(mid.base.params_hyper) + " -> " +
                       std::to_string(slim.params_hyper) + " (" + fmt("%.1f", 100 * reduction) +
                       "% reduction), val RD loss " + fmt("%.4f", slim.rd_loss(mid.cfg.lambda)) +
                       " vs " + fmt("%.4f", mid.base.rd_loss(mid.cfg.lambda)) + " (ratio " +
                       fmt("%.4f", ratio) + "), psnr " + fmt("%.3f", slim.psnr_db) + " bpp " +
                       fmt("%.4f", slim.bpp) + " vs " + fmt("%.4f", mid.base.bpp) + ", " +
                       std::to_string(r.state.step) + " penalized steps, " +
                       fmt("%.0f", seconds_since(t0)) + " s"};
  });

  run("ablation vs uniform pruning", [&] {
    std::size_t wins = 0;
    std::string detail;
    bool matched = true;
    for (Desk& d : desks) {
      Network manual = d.pretrained;
      manual_uniform_prune(manual, d.cfg.manual_ratio);
      const std::size_t manual_params = count_parameters(manual, CountScope::kHyperPath);
      PatchSet mp = d.patches;
      run_finetune(manual, mp, d.cfg, d.cfg.prune.finetune_steps);
      const RDReport mr = evaluate(manual, d.data.val, "uniform");

      RunConfig ecfg = d.cfg;
      ecfg.prune.prune_target = 1.0 - static_cast<double>(manual_params) /
                                          static_cast<double>(d.base.params_hyper);
      Network slim = d.pretrained;
      PatchSet ep = d.patches;
      run_prune(slim, ep, ecfg);
      const RDReport er = evaluate(slim, d.data.val, "compactor");

      const double mismatch = rel(static_cast<double>(er.params_hyper),
                                  static_cast<double>(manual_params));
      const bool ok_count = mismatch <= 0.02;
      matched = matched && ok_count;
      const bool win = ok_count && er.bpp <= mr.bpp;
      wins += win;
      detail += "lambda " + fmt("%g", d.cfg.lambda) + ": bpp " + fmt("%.4f", er.bpp) + " vs " +
                fmt("%.4f", mr.bpp) + " at " + std::to_string(er.params_hyper) + "/" +
                std::to_string(manual_params) + " params" + (win ? " (win)" : " (loss)") + "; ";
    }
    return Outcome{wins >= 2, detail + std::to_string(wins) + "/3 wins" +
                                  (matched ? "" : ", parameter match outside 2%")};
  });

  run("z-rate vs hyper-parameter ratio", [&] {
    const RatioReport r = ratio_report(mid.base);
    return Outcome{r.z_rate_ratio < r.hyper_param_ratio,
                   "z-rate ratio " + fmt("%.4f", r.z_rate_ratio) + " < hyper-path param ratio " +
                       fmt("%.4f", r.hyper_param_ratio) + " (" +
                       std::to_string(mid.base.params_hyper) + "/" +
                       std::to_string(mid.base.params_total) + ")"};
  });

  run("determinism", [&] {
    const fs::path dir = fs::path(work) / "determinism";
    fs::create_directories(dir);
    save_network(mid.pretrained, dir / "pretrained.hpck");
    std::vector<std::string> names = {"pruned.hpck", "prune_history.csv", "merge_report.csv",
                                      "rd_report.csv", "finetune_log.csv"};
    for (const char* run_name : {"a", "b"}) {
      const std::string cmd = "\"" + cli + "\" prune --config \"" + config + "\" --seed 0" +
                              " --checkpoint \"" + (dir / "pretrained.hpck").string() +
                              "\" --out \"" + (dir / run_name).string() + "\" > \"" +
                              (dir / (std::string(run_name) + ".log")).string() + "\" 2>&1";
      const int status = std::system(cmd.c_str());
      if (status != 0) return Outcome{false, std::string("prune run ") + run_name + " failed"};
    }
    std::size_t bytes = 0;
    for (const auto& n : names) {
      const std::string a = read_file(dir / "a" / n);
      const std::string b = read_file(dir / "b" / n);
      if (a.empty() || a != b) return Outcome{false, n + " differs between runs"};
      bytes += a.size();
    }
    return Outcome{true, std::to_string(names.size()) + " output files (" +
                             std::to_string(bytes) + " bytes) byte-identical across two runs"};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
