#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ecc/diffcore/tape.hpp"

namespace ecc::diff {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::vector<Tensor> analytic;  // per parameter, zero for frozen ones
  std::vector<Tensor> numeric;   // per parameter, empty for frozen ones
};

using LossBuilder = std::function<Var(Tape&)>;

// Compares backward() against central differences of step h for every entry
// of every non-frozen parameter. The loss builder must be deterministic given
// parameter values. Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport finite_diff_check(const LossBuilder& loss, std::span<Parameter* const> params, double h = 1e-5);

}  // namespace ecc::diff
