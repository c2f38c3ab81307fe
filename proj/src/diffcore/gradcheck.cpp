#include "ecc/diffcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ecc/diffcore/adam.hpp"

namespace ecc::diff {

namespace {

double evaluate(const LossBuilder& loss) {
  Tape tape;
  return tape.scalar(loss(tape));
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& loss, std::span<Parameter* const> params, double h) {
  GradCheckReport report;
  zero_grads(params);
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  for (Parameter* p : params) {
    report.analytic.push_back(p->frozen ? Tensor::Zero(p->value.rows(), p->value.cols()) : p->grad);
  }

  constexpr double kFloor = 1e-8;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (p.frozen) {
      report.numeric.emplace_back();
      continue;
    }
    Tensor numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double saved = p.value.data()[i];
      p.value.data()[i] = saved + h;
      double up = evaluate(loss);
      p.value.data()[i] = saved - h;
      double down = evaluate(loss);
      p.value.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * h);

      double a = report.analytic[k].data()[i];
      double n = numeric.data()[i];
      double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), kFloor});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_parameter = p.name + "[" + std::to_string(i) + "]";
      }
    }
    report.numeric.push_back(std::move(numeric));
  }
  return report;
}

}  // namespace ecc::diff
