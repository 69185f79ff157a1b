#pragma once

#include <cstddef>
#include <vector>

#include "cmsa/tensor.hpp"

namespace cmsa {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled, applied as lr * wd * theta
  double base_lr = 2.5e-4;
  double poly_power = 0.9;
  std::size_t max_steps = 2000;  // T in the poly schedule
};

/// Adam with bias correction, decoupled weight decay and a polynomial
/// learning-rate schedule: lr(t) = base_lr * (1 - t/T)^power, clamped at 0
/// once t exceeds T. Parameter order is fixed at construction, so updates
/// are deterministic.
class AdamState {
 public:
  AdamState(std::vector<Tensor> params, AdamConfig config);

  /// Learning rate the next step() call will use.
  double lr() const;
  std::size_t steps_taken() const { return t_; }

  /// One update from the gradients currently held by the parameters.
  /// Gradients are left untouched; callers zero them between batches.
  void step();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig config_;
  std::size_t t_ = 0;
};

}  // namespace cmsa
