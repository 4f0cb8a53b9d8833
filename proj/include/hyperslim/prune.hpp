#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperslim/network.hpp"
#include "hyperslim/optim.hpp"

namespace hyperslim {

// A fixed set of equally sized training patches. When the main encoder is
// frozen its outputs can be cached once, which makes hyper-path training
// independent of image size.
class PatchSet {
 public:
  PatchSet() = default;
  explicit PatchSet(std::vector<Tensor> patches);

  std::size_t size() const { return patches_.size(); }
  const Tensor& patch(std::size_t i) const { return patches_.at(i); }

  void cache_latents(const Network& net);
  void clear_latents() { latents_.clear(); }
  bool has_latents() const { return !latents_.empty(); }

  struct Batch {
    Tensor x;
    Tensor y;  // empty unless latents are cached
    std::size_t pixels = 0;
  };
  Batch batch(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<Tensor> patches_;
  std::vector<Tensor> latents_;
};

// Runs forward_train, or forward_train_latent when the batch carries a latent.
TrainForward forward_batch(const Network& net, const PatchSet::Batch& batch,
                           std::uint64_t seed);

struct TrainConfig {
  double lambda = 0.01;
  double lr = 1e-4;
  std::size_t steps = 0;
  std::size_t batch_size = 4;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;
  // Finetuning only: how often the monitor batch is scored.
  std::size_t monitor_interval = 100;

  void validate() const;
};

struct TrainLog {
  std::size_t step = 0;
  RdTerms terms;
};

// Plain rate-distortion training of every unfrozen parameter.
std::vector<TrainLog> train_rd(Network& net, const PatchSet& data,
                               const TrainConfig& cfg);

struct PruneConfig {
  double beta = 1e-9;
  double lambda = 0.01;
  double prune_target = 0.7;  // fraction of hyper-path parameters to remove
  double threshold = 1e-4;
  std::size_t selection_interval = 500;
  std::size_t max_steps = 2000;
  std::size_t min_keep = 1;
  std::size_t plateau_sweeps = 3;
  std::size_t batch_size = 4;
  double lr = 1e-4;
  double finetune_lr = 1e-4;
  std::size_t finetune_steps = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class PrunePhase { kPenalizedTraining, kPruned, kMerged, kFinetuned };
const char* phase_name(PrunePhase phase);

struct LossBreakdown {
  double rate_bpp = 0.0;
  double distortion = 0.0;  // lambda * mse
  double lasso = 0.0;       // beta * sum of compactor row norms
  double total = 0.0;
};

struct PruneHistoryRow {
  std::size_t step = 0;
  PrunePhase phase = PrunePhase::kPenalizedTraining;
  LossBreakdown loss;
  std::size_t hyper_parameters = 0;
  std::vector<std::size_t> kept;  // per compactor
};

struct PruneState {
  std::size_t step = 0;
  PrunePhase phase = PrunePhase::kPenalizedTraining;
  std::size_t original_hyper_parameters = 0;
  std::size_t current_hyper_parameters = 0;
  std::size_t idle_sweeps = 0;
  bool any_deselected = false;
  bool target_reached = false;
  std::vector<std::string> compactor_labels;
  // Row norms of every compactor, one entry per sweep.
  std::vector<std::vector<std::vector<double>>> norm_history;
  std::vector<PruneHistoryRow> history;

  double reduction() const;
  bool finished(const PruneConfig& cfg) const;
};

// Attaches identity compactors to every prunable hyper-path layer and
// freezes the main path. Throws if compactors are already attached.
void attach_and_freeze(Network& net);

// Hyper-path parameter count the network would have after physical pruning
// of every masked compactor row.
std::size_t projected_hyper_parameters(const Network& net);

PruneState make_prune_state(const Network& net);

struct PenalizedStepOptions {
  // Drops the rate-distortion gradient so only the penalty moves weights.
  bool zero_data_gradient = false;
};

// One step of R + lambda D + beta * group lasso. The penalty gradient goes to
// compactor rows only. Returns the loss terms at the pre-step weights.
LossBreakdown penalized_step(Network& net, Optimizer& opt,
                             const PatchSet::Batch& batch,
                             const PruneConfig& cfg, std::uint64_t noise_seed,
                             PenalizedStepOptions options = {});

// Soft-prunes rows with norm below the threshold, smallest first, until the
// projected reduction would pass prune_target. Returns the number of rows
// deselected.
std::size_t selection_sweep(Network& net, PruneState& state,
                            const PruneConfig& cfg);

// Penalized training with periodic selection sweeps until the target is
// met, the norms plateau or max_steps is reached.
void run_penalized_training(Network& net, const PatchSet& data,
                            PruneState& state, const PruneConfig& cfg);

// Removes the input-channel slices of the consumer of (path, index) whose
// mask entry is false. When the producer is the last hyper-encoder layer,
// the consumer is the first hyper-decoder layer and the hyper prior loses
// the matching channels too.
void rewire_downstream(Network& net, PathId path, std::size_t index,
                       const std::vector<bool>& mask);

struct MergeRecord {
  PathId path;
  std::size_t index;
  Placement placement;
  std::size_t kept;
  std::size_t total;
  std::size_t params_before;  // host plus consumer
  std::size_t params_after;
};

// Folds every compactor into its host and rewires the consumers.
std::vector<MergeRecord> physical_prune_and_merge(Network& net);

// Keeps the ceil(ratio * C) lowest-index channels of every prunable layer.
std::vector<MergeRecord> manual_uniform_prune(Network& net, double ratio);

struct FinetuneResult {
  double start_loss = 0.0;
  double best_loss = 0.0;
  std::size_t best_step = 0;
  std::vector<TrainLog> log;
};

// Plain RD training of the hyper path; `net` ends at the best-scoring
// weights seen on a fixed monitor batch (including the starting point).
FinetuneResult finetune(Network& net, const PatchSet& data,
                        const TrainConfig& cfg);

std::string prune_history_csv(const PruneState& state);
std::string merge_report_csv(const std::vector<MergeRecord>& records);

}  // namespace hyperslim
