#include "hyperslim/pipeline.hpp"

#include <cstdio>
#include <random>

#include "hyperslim/compactor.hpp"
#include "hyperslim/image.hpp"
#include "hyperslim/random.hpp"

namespace hyperslim {
namespace {

constexpr std::uint64_t kTrainImageStream = 31;
constexpr std::uint64_t kValImageStream = 32;
constexpr std::uint64_t kPatchStream = 33;

std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(hi - lo + 1));
}

void fill_uniform(Tensor& t, std::mt19937_64& rng) {
  for (double& v : t.data()) v = 2.0 * unit_uniform(rng) - 1.0;
}

Tensor random_rp(std::size_t channels, std::mt19937_64& rng) {
  const std::size_t kept = uniform_index(rng, 1, channels);
  Tensor rp({kept, channels});
  fill_uniform(rp, rng);
  return rp;
}

Tensor random_input(std::size_t c, std::size_t size, std::mt19937_64& rng) {
  Tensor x({2, c, size, size});
  fill_uniform(x, rng);
  return x;
}

}  // namespace

DataSplit load_data(const RunConfig& cfg) {
  DataSplit d;
  const std::size_t s = cfg.synthetic_size;
  d.train = cfg.train_dir.empty()
                ? synthetic_images(cfg.synthetic_train, s, s,
                                   mix_seed(cfg.seed, kTrainImageStream))
                : load_images(cfg.train_dir);
  d.val = cfg.val_dir.empty()
              ? synthetic_images(cfg.synthetic_val, s, s,
                                 mix_seed(cfg.seed, kValImageStream))
              : load_images(cfg.val_dir);
  return d;
}

PatchSet training_patches(const RunConfig& cfg, const std::vector<Tensor>& train) {
  return PatchSet(sample_patches(train, cfg.num_patches, cfg.patch_size,
                                 mix_seed(cfg.seed, kPatchStream)));
}

std::vector<TrainLog> pretrain(Network& net, const PatchSet& data,
                               const RunConfig& cfg) {
  return train_rd(net, data, cfg.pretrain);
}

FinetuneResult run_finetune(Network& net, PatchSet& data, const RunConfig& cfg,
                            std::size_t steps) {
  TrainConfig ft = cfg.pretrain;
  ft.steps = steps;
  ft.lr = cfg.prune.finetune_lr;
  ft.batch_size = cfg.prune.batch_size;
  ft.optimizer = cfg.prune.optimizer;
  bool main_frozen = true;
  for (PathId p : {PathId::kMainEncoder, PathId::kMainDecoder})
    for (const Layer& l : net.path(p)) main_frozen = main_frozen && l.spec.frozen;
  if (!main_frozen) {
    net.set_path_frozen(PathId::kMainEncoder, true);
    net.set_path_frozen(PathId::kMainDecoder, true);
  }
  if (!data.has_latents()) data.cache_latents(net);
  return finetune(net, data, ft);
}

PruneRun run_prune(Network& net, PatchSet& data, const RunConfig& cfg) {
  PruneRun run;
  attach_and_freeze(net);
  data.cache_latents(net);
  run.state = make_prune_state(net);
  run_penalized_training(net, data, run.state, cfg.prune);
  run.merges = physical_prune_and_merge(net);
  run.state.phase = PrunePhase::kMerged;
  if (cfg.prune.finetune_steps > 0) {
    run.finetune = run_finetune(net, data, cfg, cfg.prune.finetune_steps);
    run.state.phase = PrunePhase::kFinetuned;
  }
  return run;
}

std::string train_log_csv(const std::vector<TrainLog>& log) {
  std::string out = "step,rate_bpp,distortion,mse,loss\n";
  char buf[160];
  for (const auto& l : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g\n", l.step,
                  l.terms.rate_bpp, l.terms.distortion, l.terms.mse, l.terms.loss);
    out += buf;
  }
  return out;
}

std::vector<MergeCheck> verify_merges(std::uint64_t seed, std::size_t trials) {
  std::mt19937_64 rng(mix_seed(seed, 0));
  std::vector<MergeCheck> out;

  MergeCheck conv{"merge_conv", trials, 0.0};
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t c_in = uniform_index(rng, 1, 5);
    const std::size_t c_out = uniform_index(rng, 1, 6);
    const std::size_t ks = 2 * uniform_index(rng, 0, 2) + 1;
    const std::size_t stride = uniform_index(rng, 1, 2);
    ConvWeights w = make_conv(c_in, c_out, ks, stride, ks / 2);
    fill_uniform(w.weight, rng);
    fill_uniform(w.bias, rng);
    const Tensor rp = random_rp(c_out, rng);
    const Tensor x = random_input(c_in, uniform_index(rng, ks, 9), rng);
    const Tensor ref = channel_mix(conv2d(x, w), rp);
    const Tensor got = conv2d(x, merge_conv(w, rp));
    conv.max_relative_error = std::max(conv.max_relative_error, max_relative_error(got, ref));
  }
  out.push_back(conv);

  for (std::size_t alpha : {2, 3}) {
    MergeCheck ps{"merge_pixelshuffle(alpha=" + std::to_string(alpha) + ")", trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t c_in = uniform_index(rng, 1, 4);
      const std::size_t c_out = uniform_index(rng, 1, 5);
      const std::size_t ks = 2 * uniform_index(rng, 0, 1) + 1;
      ConvWeights w = make_conv(c_in, alpha * alpha * c_out, ks, 1, ks / 2);
      fill_uniform(w.weight, rng);
      fill_uniform(w.bias, rng);
      const Tensor rp = random_rp(c_out, rng);
      const Tensor x = random_input(c_in, uniform_index(rng, 2, 6), rng);
      const Tensor ref = channel_mix(pixel_shuffle(conv2d(x, w), alpha), rp);
      const Tensor got = pixel_shuffle(conv2d(x, merge_pixelshuffle(w, rp, alpha)), alpha);
      ps.max_relative_error = std::max(ps.max_relative_error, max_relative_error(got, ref));
    }
    out.push_back(ps);
  }

  for (std::size_t stride : {1, 2}) {
    MergeCheck dc{"merge_deconv(stride=" + std::to_string(stride) + ")", trials, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      const std::size_t c_in = uniform_index(rng, 1, 5);
      const std::size_t c_out = uniform_index(rng, 1, 6);
      const std::size_t ks = 2 * uniform_index(rng, 1, 2) + 1;
      ConvWeights w = make_deconv(c_in, c_out, ks, stride, ks / 2, stride - 1);
      fill_uniform(w.weight, rng);
      fill_uniform(w.bias, rng);
      const Tensor rp = random_rp(c_out, rng);
      const Tensor x = random_input(c_in, uniform_index(rng, 2, 6), rng);
      const Tensor ref = channel_mix(deconv2d(x, w), rp);
      const Tensor got = deconv2d(x, merge_deconv(w, rp));
      dc.max_relative_error = std::max(dc.max_relative_error, max_relative_error(got, ref));
    }
    out.push_back(dc);
  }
  return out;
}

}  // namespace hyperslim
