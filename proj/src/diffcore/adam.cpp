#include "ecc/diffcore/adam.hpp"

#include <cmath>

#include "ecc/error.hpp"

namespace ecc::diff {

AdamState::AdamState(std::span<Parameter* const> params, AdamConfig cfg) : config(cfg) {
  for (const Parameter* p : params) {
    first_moment.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
    second_moment.push_back(Tensor::Zero(p->value.rows(), p->value.cols()));
  }
}

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw UsageError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols() ||
        state.first_moment[i].rows() != p.value.rows() || state.first_moment[i].cols() != p.value.cols()) {
      throw UsageError("adam_step: shape mismatch for parameter '" + p.name + "'");
    }
    if (!p.frozen && !p.grad.allFinite()) {
      throw TrainingError("non-finite gradient in parameter '" + p.name + "' at step " +
                          std::to_string(state.step + 1));
    }
  }
  ++state.step;
  const AdamConfig& c = state.config;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    if (p.frozen) continue;
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * p.grad;
    v = c.beta2 * v + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= c.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  }
}

void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace ecc::diff
