#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ecc/diffcore/tape.hpp"

namespace ecc::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;

  AdamState() = default;
  AdamState(std::span<Parameter* const> params, AdamConfig cfg);
};

// One bias-corrected Adam update of every parameter from its accumulated
// gradient. Frozen parameters are skipped entirely; gradients are not reset.
// Throws TrainingError naming the first parameter with a non-finite gradient
// (before anything is modified).
void adam_step(std::span<Parameter* const> params, AdamState& state);

void zero_grads(std::span<Parameter* const> params);

// Owns an Adam state bound to a fixed parameter list.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), state_(params_, cfg) {}

  void zero_grad() { zero_grads(params_); }
  void step() { adam_step(params_, state_); }
  const AdamState& state() const { return state_; }
  const std::vector<Parameter*>& params() const { return params_; }

 private:
  std::vector<Parameter*> params_;
  AdamState state_;
};

}  // namespace ecc::diff
