#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "hyperslim/network.hpp"
#include "hyperslim/prune.hpp"

namespace hyperslim {

// Everything a CLI run needs. Loaded from a JSON object whose keys are
// listed in kRunConfigKeys; anything else is rejected.
struct RunConfig {
  NetworkConfig network = default_hyperprior_config();
  double lambda = 0.01;
  std::uint64_t seed = 0;

  TrainConfig pretrain;  // steps, lr, batch_size
  PruneConfig prune;
  double manual_ratio = 0.5;
  // The prune command fails when the achieved hyper-path reduction is below
  // this floor.
  double reduction_floor = 0.0;

  // Image data. Empty directories fall back to synthetic images.
  std::string train_dir;
  std::string val_dir;
  std::size_t synthetic_train = 32;
  std::size_t synthetic_val = 8;
  std::size_t synthetic_size = 128;
  std::size_t num_patches = 256;
  std::size_t patch_size = 64;

  // Keeps derived fields (lambda, seed, batch sizes) in sync.
  void finalize();
  void validate() const;
};

inline constexpr const char* kRunConfigKeys[] = {
    "N",               "M",              "lambda",          "beta",
    "prune_target",    "seed",           "paths",           "threshold",
    "selection_interval", "prune_steps", "prune_lr",        "min_keep",
    "plateau_sweeps",  "finetune_steps", "finetune_lr",     "pretrain_steps",
    "pretrain_lr",     "batch_size",     "optimizer",       "manual_ratio",
    "reduction_floor", "train_dir",      "val_dir",         "synthetic_train",
    "synthetic_val",   "synthetic_size", "num_patches",     "patch_size",
    "scale_floor",     "likelihood_floor"};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& file);

// Resolved configuration as canonical JSON (sorted keys, paths spelled out).
std::string run_config_json(const RunConfig& cfg);

}  // namespace hyperslim
