#include "hyperslim/prune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "hyperslim/compactor.hpp"
#include "hyperslim/error.hpp"
#include "hyperslim/image.hpp"
#include "hyperslim/random.hpp"

namespace hyperslim {
namespace {

// Seed streams for the different stochastic consumers of a run.
constexpr std::uint64_t kSamplerStream = 21;
constexpr std::uint64_t kNoiseStream = 1u << 20;
constexpr std::uint64_t kMonitorStream = 77;

std::size_t last_weighted(const std::vector<Layer>& layers) {
  for (std::size_t i = layers.size(); i-- > 0;) {
    if (layers[i].spec.has_weights()) return i;
  }
  return layers.size();
}

std::size_t first_weighted(const std::vector<Layer>& layers) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].spec.has_weights()) return i;
  }
  return layers.size();
}

std::size_t count_true(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::size_t layer_params(const LayerSpec& s, std::size_t in, std::size_t out) {
  const std::size_t filters =
      s.kind == LayerKind::kPixelShuffleConv ? s.alpha * s.alpha * out : out;
  return filters * in * s.ks * s.ks + filters;
}

std::string compactor_label(PathId p, std::size_t index) {
  return std::string(path_name(p)) + "_" + std::to_string(index);
}

template <typename F>
void for_each_compactor(Network& net, F&& f) {
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder}) {
    auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].compactor) f(p, i, layers[i]);
    }
  }
}

std::vector<Compactor*> mutable_compactors(Network& net) {
  std::vector<Compactor*> out;
  for_each_compactor(net, [&](PathId, std::size_t, Layer& l) {
    out.push_back(&*l.compactor);
  });
  return out;
}

ConvWeights merge_into_host(const Layer& host, const Tensor& rp) {
  switch (host.spec.kind) {
    case LayerKind::kDeconv:
      return merge_deconv(host.params, rp);
    case LayerKind::kPixelShuffleConv:
      return merge_pixelshuffle(host.params, rp, host.spec.alpha);
    default:
      return merge_conv(host.params, rp);
  }
}

// Locates the layer that consumes the output channels of (path, index).
std::pair<PathId, std::size_t> find_consumer(const Network& net, PathId path,
                                             std::size_t index) {
  const auto& layers = net.path(path);
  for (std::size_t i = index + 1; i < layers.size(); ++i) {
    if (layers[i].spec.has_weights()) return {path, i};
  }
  if (path == PathId::kHyperEncoder) {
    const auto& hs = net.path(PathId::kHyperDecoder);
    const std::size_t first = first_weighted(hs);
    if (first < hs.size()) return {PathId::kHyperDecoder, first};
  }
  throw ValidationError(std::string(path_name(path)) + "[" +
                        std::to_string(index) +
                        "]: output channels have no prunable consumer");
}

std::size_t consumer_params(const Network& net, PathId path, std::size_t index) {
  const auto [cp, ci] = find_consumer(net, path, index);
  return net.path(cp)[ci].parameter_count();
}

MergeRecord prune_layer(Network& net, PathId path, std::size_t index,
                        const Tensor& rp, const std::vector<bool>& mask) {
  Layer& host = net.path(path)[index];
  const std::size_t kept = count_true(mask);
  const std::string label =
      std::string(path_name(path)) + "[" + std::to_string(index) + "]";
  if (kept == 0) throw ValidationError(label + ": pruning would remove every channel");
  if (!host.spec.prunable) {
    throw ValidationError(label + ": layer is not prunable");
  }
  MergeRecord rec{path, index, host.spec.compactor_placement(), kept,
                  host.spec.out_channels, 0, 0};
  rec.params_before = host.parameter_count() + consumer_params(net, path, index);
  host.params = merge_into_host(host, rp);
  host.spec.out_channels = kept;
  host.compactor.reset();
  rewire_downstream(net, path, index, mask);
  rec.params_after = net.path(path)[index].parameter_count() +
                     consumer_params(net, path, index);
  return rec;
}

double mean_of(double sum, std::size_t n) {
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

PatchSet::PatchSet(std::vector<Tensor> patches) : patches_(std::move(patches)) {
  if (patches_.empty()) throw ValidationError("PatchSet: no patches");
  for (const Tensor& p : patches_) {
    if (p.shape() != patches_.front().shape()) {
      throw ShapeError("PatchSet", "patch numel", patches_.front().numel(),
                       p.numel());
    }
    require_codec_input(p);
  }
}

void PatchSet::cache_latents(const Network& net) {
  latents_.clear();
  latents_.reserve(patches_.size());
  for (const Tensor& p : patches_) {
    latents_.push_back(net.run_path(PathId::kMainEncoder, p));
  }
}

PatchSet::Batch PatchSet::batch(const std::vector<std::size_t>& indices) const {
  Batch b;
  std::vector<const Tensor*> items;
  for (std::size_t i : indices) items.push_back(&patches_.at(i));
  if (has_latents()) {
    std::vector<const Tensor*> ys;
    for (std::size_t i : indices) ys.push_back(&latents_.at(i));
    b.y = stack(ys);
    const Tensor& first = patches_.at(indices.front());
    b.pixels = indices.size() * first.h() * first.w();
  } else {
    b.x = stack(items);
    b.pixels = b.x.n() * b.x.h() * b.x.w();
  }
  return b;
}

TrainForward forward_batch(const Network& net, const PatchSet::Batch& batch,
                           std::uint64_t seed) {
  if (!batch.y.empty()) return forward_train_latent(net, batch.y, batch.pixels, seed);
  return forward_train(net, batch.x, seed);
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (monitor_interval == 0) throw ConfigError("monitor_interval must be >= 1");
}

std::vector<TrainLog> train_rd(Network& net, const PatchSet& data,
                               const TrainConfig& cfg) {
  cfg.validate();
  std::vector<TrainLog> log;
  if (cfg.steps == 0) return log;
  Optimizer opt(cfg.optimizer, net.trainable_parameters());
  BatchSampler sampler(data.size(), cfg.batch_size,
                       mix_seed(cfg.seed, kSamplerStream));
  const std::size_t report = std::max<std::size_t>(1, cfg.monitor_interval);
  RdTerms acc;
  std::size_t acc_n = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto batch = data.batch(sampler.next());
    net.zero_grad();
    const TrainForward fwd =
        forward_batch(net, batch, mix_seed(cfg.seed, kNoiseStream + step));
    const RdTerms t = backward_rd(net, fwd, cfg.lambda);
    net.enforce_constraints();
    opt.step(cfg.lr);
    net.enforce_constraints();
    acc.rate_bpp += t.rate_bpp;
    acc.distortion += t.distortion;
    acc.mse += t.mse;
    acc.loss += t.loss;
    ++acc_n;
    if ((step + 1) % report == 0 || step + 1 == cfg.steps) {
      RdTerms mean;
      mean.rate_bpp = mean_of(acc.rate_bpp, acc_n);
      mean.distortion = mean_of(acc.distortion, acc_n);
      mean.mse = mean_of(acc.mse, acc_n);
      mean.loss = mean_of(acc.loss, acc_n);
      log.push_back({step + 1, mean});
      acc = RdTerms();
      acc_n = 0;
    }
  }
  return log;
}

void PruneConfig::validate() const {
  if (!(prune_target > 0.0 && prune_target <= 1.0)) {
    throw ConfigError("prune_target must lie in (0, 1]");
  }
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
  if (selection_interval == 0) throw ConfigError("selection_interval must be >= 1");
  if (min_keep == 0) throw ConfigError("min_keep must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0) || !(finetune_lr > 0.0)) {
    throw ConfigError("learning rates must be > 0");
  }
}

const char* phase_name(PrunePhase phase) {
  switch (phase) {
    case PrunePhase::kPenalizedTraining: return "penalized_training";
    case PrunePhase::kPruned: return "pruned";
    case PrunePhase::kMerged: return "merged";
    case PrunePhase::kFinetuned: return "finetuned";
  }
  return "unknown";
}

double PruneState::reduction() const {
  if (original_hyper_parameters == 0) return 0.0;
  return 1.0 - static_cast<double>(current_hyper_parameters) /
                   static_cast<double>(original_hyper_parameters);
}

bool PruneState::finished(const PruneConfig& cfg) const {
  return target_reached || step >= cfg.max_steps ||
         (any_deselected && idle_sweeps >= cfg.plateau_sweeps);
}

void attach_and_freeze(Network& net) {
  if (net.compactor_count() != 0) {
    throw ValidationError("attach_and_freeze: compactors are already attached");
  }
  for (PathId p : kAllPaths) {
    for (Layer& l : net.path(p)) {
      if (!l.spec.prunable) continue;
      l.compactor = init_identity(l.spec.out_channels, l.spec.compactor_placement());
    }
  }
  net.set_path_frozen(PathId::kMainEncoder, true);
  net.set_path_frozen(PathId::kMainDecoder, true);
}

std::size_t projected_hyper_parameters(const Network& net) {
  std::size_t total = 0;
  std::size_t channels = net.latent_channels();
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder}) {
    for (const Layer& l : net.path(p)) {
      if (!l.spec.has_weights()) continue;
      const std::size_t out =
          l.compactor ? count_true(l.compactor->mask) : l.spec.out_channels;
      total += layer_params(l.spec, channels, out);
      channels = out;
    }
  }
  return total;
}

PruneState make_prune_state(const Network& net) {
  PruneState s;
  s.original_hyper_parameters = count_parameters(net, CountScope::kHyperPath);
  s.current_hyper_parameters = projected_hyper_parameters(net);
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder}) {
    const auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].compactor) s.compactor_labels.push_back(compactor_label(p, i));
    }
  }
  return s;
}

LossBreakdown penalized_step(Network& net, Optimizer& opt,
                             const PatchSet::Batch& batch,
                             const PruneConfig& cfg, std::uint64_t noise_seed,
                             PenalizedStepOptions options) {
  net.zero_grad();
  const TrainForward fwd = forward_batch(net, batch, noise_seed);
  const RdTerms terms = options.zero_data_gradient
                            ? rd_terms(fwd, cfg.lambda)
                            : backward_rd(net, fwd, cfg.lambda);
  LossBreakdown out;
  out.rate_bpp = terms.rate_bpp;
  out.distortion = terms.distortion;
  double norms = 0.0;
  for_each_compactor(net, [&](PathId, std::size_t, Layer& l) {
    norms += group_lasso_penalty(l.compactor->r);
    if (l.spec.frozen || cfg.beta == 0.0) return;
    const Tensor g = group_lasso_gradient(l.compactor->r);
    auto grad = l.compactor->r.grad();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.beta * g[i];
  });
  out.lasso = cfg.beta * norms;
  out.total = terms.loss + out.lasso;
  net.enforce_constraints();
  opt.step(cfg.lr);
  net.enforce_constraints();
  return out;
}

std::size_t selection_sweep(Network& net, PruneState& state,
                            const PruneConfig& cfg) {
  std::vector<Compactor*> comps = mutable_compactors(net);
  struct Candidate {
    double norm;
    std::size_t compactor;
    std::size_t row;
  };
  std::vector<Candidate> candidates;
  std::vector<std::vector<double>> norms;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Compactor& c = *comps[k];
    norms.push_back(row_norms(c.r));
    const std::vector<bool> keep = select_channels(c, cfg.threshold, cfg.min_keep);
    for (std::size_t j = 0; j < c.rows(); ++j) {
      if (c.mask[j] && !keep[j] && norms[k][j] < cfg.threshold) {
        candidates.push_back({norms[k][j], k, j});
      }
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return std::tie(a.norm, a.compactor, a.row) <
                            std::tie(b.norm, b.compactor, b.row);
                   });
  const double original = static_cast<double>(state.original_hyper_parameters);
  std::size_t removed = 0;
  for (const Candidate& cand : candidates) {
    Compactor& c = *comps[cand.compactor];
    c.mask[cand.row] = false;
    const double reduction =
        1.0 - static_cast<double>(projected_hyper_parameters(net)) / original;
    if (reduction > cfg.prune_target + 1e-12) {
      c.mask[cand.row] = true;
      state.target_reached = true;
      break;
    }
    ++removed;
  }
  net.enforce_constraints();
  state.current_hyper_parameters = projected_hyper_parameters(net);
  if (removed > 0) {
    state.any_deselected = true;
    state.idle_sweeps = 0;
  } else if (state.any_deselected) {
    ++state.idle_sweeps;
  }
  state.norm_history.push_back(std::move(norms));
  return removed;
}

void run_penalized_training(Network& net, const PatchSet& data,
                            PruneState& state, const PruneConfig& cfg) {
  cfg.validate();
  if (net.compactor_count() == 0) {
    throw ValidationError("penalized training needs attached compactors");
  }
  state.phase = PrunePhase::kPenalizedTraining;
  Optimizer opt(cfg.optimizer, net.trainable_parameters());
  BatchSampler sampler(data.size(), cfg.batch_size,
                       mix_seed(cfg.seed, kSamplerStream));
  LossBreakdown acc;
  std::size_t acc_n = 0;
  while (!state.finished(cfg)) {
    const auto batch = data.batch(sampler.next());
    const LossBreakdown l = penalized_step(
        net, opt, batch, cfg, mix_seed(cfg.seed, kNoiseStream + state.step));
    ++state.step;
    acc.rate_bpp += l.rate_bpp;
    acc.distortion += l.distortion;
    acc.lasso += l.lasso;
    acc.total += l.total;
    ++acc_n;
    const bool sweep = state.step % cfg.selection_interval == 0;
    if (sweep) selection_sweep(net, state, cfg);
    if (sweep || state.finished(cfg)) {
      PruneHistoryRow row;
      row.step = state.step;
      row.phase = state.phase;
      row.loss = {mean_of(acc.rate_bpp, acc_n), mean_of(acc.distortion, acc_n),
                  mean_of(acc.lasso, acc_n), mean_of(acc.total, acc_n)};
      row.hyper_parameters = state.current_hyper_parameters;
      for (const Compactor* c : net.compactors()) row.kept.push_back(c->kept());
      state.history.push_back(std::move(row));
      acc = LossBreakdown();
      acc_n = 0;
    }
  }
  state.phase = PrunePhase::kPruned;
}

void rewire_downstream(Network& net, PathId path, std::size_t index,
                       const std::vector<bool>& mask) {
  auto& layers = net.path(path);
  if (index >= layers.size() || !layers[index].spec.has_weights()) {
    throw ValidationError("rewire_downstream: no weighted layer at index " +
                          std::to_string(index));
  }
  if (path == PathId::kHyperDecoder && index == last_weighted(layers)) {
    throw ValidationError(
        "rewire_downstream: the last hyper-decoder layer's output channels "
        "cannot change");
  }
  const auto [cp, ci] = find_consumer(net, path, index);
  Layer& consumer = net.path(cp)[ci];
  if (mask.size() != consumer.spec.in_channels) {
    throw ShapeError("rewire_downstream", "mask length",
                     consumer.spec.in_channels, mask.size());
  }
  const std::size_t kept = count_true(mask);
  if (kept == 0) throw ValidationError("rewire_downstream: mask keeps no channel");
  consumer.params = slice_input_channels(consumer.params, mask);
  consumer.spec.in_channels = kept;

  // Activations between producer and consumer carry the new width.
  auto retag = [&](std::vector<Layer>& ls, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
      if (!ls[i].spec.has_weights()) ls[i].spec.in_channels = ls[i].spec.out_channels = kept;
    }
  };
  if (cp == path) {
    retag(layers, index + 1, ci);
  } else {
    retag(layers, index + 1, layers.size());
    retag(net.path(cp), 0, ci);
    FactorizedModel& prior = net.hyper_prior();
    FactorizedModel slim = FactorizedModel::make(kept);
    slim.scale_floor = prior.scale_floor;
    slim.likelihood_floor = prior.likelihood_floor;
    std::size_t j = 0;
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (!mask[c]) continue;
      slim.mean[j] = prior.mean[c];
      slim.scale[j] = prior.scale[c];
      ++j;
    }
    prior = std::move(slim);
  }
}

std::vector<MergeRecord> physical_prune_and_merge(Network& net) {
  std::vector<MergeRecord> records;
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder}) {
    auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!layers[i].compactor) continue;
      const Compactor& c = *layers[i].compactor;
      const std::vector<bool> mask = c.mask;
      const Tensor rp = c.kept_rows();
      records.push_back(prune_layer(net, p, i, rp, mask));
    }
  }
  net.validate();
  return records;
}

std::vector<MergeRecord> manual_uniform_prune(Network& net, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ValidationError("manual_uniform_prune: ratio must lie in (0, 1]");
  }
  if (net.compactor_count() != 0) {
    throw ValidationError("manual_uniform_prune: merge compactors first");
  }
  std::vector<MergeRecord> records;
  for (PathId p : {PathId::kHyperEncoder, PathId::kHyperDecoder}) {
    auto& layers = net.path(p);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!layers[i].spec.prunable) continue;
      const std::size_t c = layers[i].spec.out_channels;
      // The epsilon keeps exact products such as 0.5 * 16 from rounding up.
      const auto keep = static_cast<std::size_t>(
          std::ceil(ratio * static_cast<double>(c) - 1e-9));
      if (keep == 0) {
        throw ValidationError("manual_uniform_prune: ratio leaves no channel");
      }
      std::vector<bool> mask(c, false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(keep), true);
      records.push_back(prune_layer(net, p, i, selection_matrix(mask), mask));
    }
  }
  net.validate();
  return records;
}

FinetuneResult finetune(Network& net, const PatchSet& data,
                        const TrainConfig& cfg) {
  cfg.validate();
  FinetuneResult result;
  std::vector<std::size_t> monitor_idx;
  for (std::size_t i = 0; i < std::min(data.size(), 4 * cfg.batch_size); ++i) {
    monitor_idx.push_back(i);
  }
  const auto monitor = data.batch(monitor_idx);
  const std::uint64_t monitor_seed = mix_seed(cfg.seed, kMonitorStream);
  auto score = [&] {
    return rd_terms(forward_batch(net, monitor, monitor_seed), cfg.lambda).loss;
  };
  result.start_loss = result.best_loss = score();
  if (cfg.steps == 0) return result;

  Network best = net;
  Optimizer opt(cfg.optimizer, net.trainable_parameters());
  BatchSampler sampler(data.size(), cfg.batch_size,
                       mix_seed(cfg.seed, kSamplerStream));
  RdTerms acc;
  std::size_t acc_n = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto batch = data.batch(sampler.next());
    net.zero_grad();
    const TrainForward fwd =
        forward_batch(net, batch, mix_seed(cfg.seed, kNoiseStream + step));
    const RdTerms t = backward_rd(net, fwd, cfg.lambda);
    opt.step(cfg.lr);
    net.enforce_constraints();
    acc.rate_bpp += t.rate_bpp;
    acc.distortion += t.distortion;
    acc.loss += t.loss;
    ++acc_n;
    if ((step + 1) % cfg.monitor_interval == 0 || step + 1 == cfg.steps) {
      RdTerms mean;
      mean.rate_bpp = mean_of(acc.rate_bpp, acc_n);
      mean.distortion = mean_of(acc.distortion, acc_n);
      mean.loss = mean_of(acc.loss, acc_n);
      result.log.push_back({step + 1, mean});
      acc = RdTerms();
      acc_n = 0;
      const double s = score();
      if (s < result.best_loss) {
        result.best_loss = s;
        result.best_step = step + 1;
        best = net;
      }
    }
  }
  net = std::move(best);
  net.zero_grad();
  return result;
}

std::string prune_history_csv(const PruneState& state) {
  std::string out = "step,phase,rate_bpp,distortion,lasso,loss,hyper_params";
  for (const auto& label : state.compactor_labels) out += ",kept_" + label;
  out += "\n";
  for (const auto& row : state.history) {
    out += std::to_string(row.step) + "," + phase_name(row.phase) + "," +
           fmt(row.loss.rate_bpp) + "," + fmt(row.loss.distortion) + "," +
           fmt(row.loss.lasso) + "," + fmt(row.loss.total) + "," +
           std::to_string(row.hyper_parameters);
    for (std::size_t k : row.kept) out += "," + std::to_string(k);
    out += "\n";
  }
  return out;
}

std::string merge_report_csv(const std::vector<MergeRecord>& records) {
  std::string out =
      "path,layer,placement,kept,total,params_before,params_after,params_delta\n";
  for (const auto& r : records) {
    out += std::string(path_name(r.path)) + "," + std::to_string(r.index) + "," +
           placement_name(r.placement) + "," + std::to_string(r.kept) + "," +
           std::to_string(r.total) + "," + std::to_string(r.params_before) + "," +
           std::to_string(r.params_after) + "," +
           std::to_string(static_cast<long long>(r.params_after) -
                          static_cast<long long>(r.params_before)) +
           "\n";
  }
  return out;
}

}  // namespace hyperslim
