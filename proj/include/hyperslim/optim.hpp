#pragma once

#include <cstddef>
#include <vector>

#include "hyperslim/tensor.hpp"

namespace hyperslim {

enum class OptimizerKind { kSgd, kAdam };

struct AdamSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First-order optimizer over a fixed parameter list. The list is bound at
// construction; Adam moments are kept per position, so rebuild the
// optimizer whenever parameter shapes change (e.g. after pruning).
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<Tensor*> params,
            AdamSettings adam = {});

  // Every parameter must carry a gradient; throws ValidationError otherwise.
  void step(double lr);
  void zero_grad();

  OptimizerKind kind() const { return kind_; }
  std::size_t steps_taken() const { return steps_; }
  const std::vector<Tensor*>& params() const { return params_; }

 private:
  OptimizerKind kind_;
  std::vector<Tensor*> params_;
  AdamSettings adam_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  std::size_t steps_ = 0;
};

}  // namespace hyperslim
