#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperslim/config.hpp"
#include "hyperslim/network.hpp"
#include "hyperslim/prune.hpp"

namespace hyperslim {

// Training and validation images for a run: the configured directories, or
// procedural images when a directory is not set.
struct DataSplit {
  std::vector<Tensor> train;
  std::vector<Tensor> val;
};
DataSplit load_data(const RunConfig& cfg);

PatchSet training_patches(const RunConfig& cfg, const std::vector<Tensor>& train);

std::vector<TrainLog> pretrain(Network& net, const PatchSet& data,
                               const RunConfig& cfg);

struct PruneRun {
  PruneState state;
  std::vector<MergeRecord> merges;
  FinetuneResult finetune;
};

// attach_and_freeze, penalized training with sweeps, merge, then
// cfg.prune.finetune_steps of finetuning. Latents are cached on `data`.
PruneRun run_prune(Network& net, PatchSet& data, const RunConfig& cfg);

// Hyper-path finetune with the run's finetune settings.
FinetuneResult run_finetune(Network& net, PatchSet& data, const RunConfig& cfg,
                            std::size_t steps);

std::string train_log_csv(const std::vector<TrainLog>& log);

// Randomized merged-vs-unmerged checks for every merge case.
struct MergeCheck {
  std::string op;  // e.g. "merge_pixelshuffle(alpha=3)"
  std::size_t trials = 0;
  double max_relative_error = 0.0;
};
std::vector<MergeCheck> verify_merges(std::uint64_t seed, std::size_t trials = 100);

}  // namespace hyperslim
