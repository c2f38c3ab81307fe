#include "ecc/diffcore/gaussian.hpp"

#include <cmath>

#include "ecc/error.hpp"

namespace ecc::diff {

GaussianVar gaussian_head(Tape& tape, Var raw, int dim) {
  if (tape.value(raw).cols() != 2 * dim) {
    throw UsageError("gaussian_head: expected width " + std::to_string(2 * dim) + ", got " +
                     std::to_string(tape.value(raw).cols()));
  }
  Var mean = tape.slice_cols(raw, 0, dim);
  Var log_std = tape.clamp(tape.slice_cols(raw, dim, dim), kLogStdMin, kLogStdMax);
  return {mean, log_std};
}

std::pair<Tensor, Tensor> gaussian_head(const Tensor& raw, int dim) {
  if (raw.cols() != 2 * dim) {
    throw UsageError("gaussian_head: expected width " + std::to_string(2 * dim) + ", got " +
                     std::to_string(raw.cols()));
  }
  Tensor log_std = raw.rightCols(dim).cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  return {raw.leftCols(dim), std::move(log_std)};
}

double gaussian_kl(const DiagGaussian& p, const DiagGaussian& q) {
  if (p.mean.size() != q.mean.size() || p.log_std.size() != p.mean.size() || q.log_std.size() != q.mean.size()) {
    throw UsageError("gaussian_kl: dimension mismatch");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < p.mean.size(); ++i) {
    double var_ratio = std::exp(2.0 * (p.log_std[i] - q.log_std[i]));
    double d = p.mean[i] - q.mean[i];
    kl += q.log_std[i] - p.log_std[i] + 0.5 * (var_ratio + d * d * std::exp(-2.0 * q.log_std[i])) - 0.5;
  }
  return kl;
}

Var gaussian_kl(Tape& tape, const GaussianVar& p, const GaussianVar& q) {
  return tape.gaussian_kl(p.mean, p.log_std, q.mean, q.log_std);
}

Vector reparam_sample(const DiagGaussian& g, const Vector& noise) {
  if (noise.size() != g.mean.size() || g.log_std.size() != g.mean.size()) {
    throw UsageError("reparam_sample: noise length " + std::to_string(noise.size()) + " vs mean length " +
                     std::to_string(g.mean.size()));
  }
  Vector out = g.mean;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (noise[i] != 0.0) out[i] += noise[i] * std::exp(g.log_std[i]);
  }
  return out;
}

Var reparam_sample(Tape& tape, const GaussianVar& g, const Tensor& noise) {
  const Tensor& m = tape.value(g.mean);
  if (noise.rows() != m.rows() || noise.cols() != m.cols()) {
    throw UsageError("reparam_sample: noise shape does not match mean");
  }
  Var scaled = tape.mul(tape.exp(g.log_std), tape.constant(noise));
  return tape.add(g.mean, scaled);
}

double bce_logits(double logit, double label) {
  return std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - label * logit;
}

}  // namespace ecc::diff
