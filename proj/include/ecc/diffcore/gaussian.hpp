#pragma once

#include "ecc/diffcore/tape.hpp"

namespace ecc::diff {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian as plain values.
struct DiagGaussian {
  Vector mean;
  Vector log_std;

  int dim() const { return static_cast<int>(mean.size()); }
  Vector stddev() const { return log_std.array().exp(); }
};

// Diagonal Gaussian over a batch, living on a tape (rows are samples).
struct GaussianVar {
  Var mean;
  Var log_std;
};

// Splits a B x 2n head output into mean and a clamped log-std.
GaussianVar gaussian_head(Tape& tape, Var raw, int dim);
// Same split on inference values; returns (mean, log_std) tensors.
std::pair<Tensor, Tensor> gaussian_head(const Tensor& raw, int dim);

// Closed-form KL(p || q), summed over dimensions.
double gaussian_kl(const DiagGaussian& p, const DiagGaussian& q);
// B x 1 per-sample KL on the tape.
Var gaussian_kl(Tape& tape, const GaussianVar& p, const GaussianVar& q);

// mean + noise * exp(log_std). Zero noise entries return the mean entry unchanged.
Vector reparam_sample(const DiagGaussian& g, const Vector& noise);
Var reparam_sample(Tape& tape, const GaussianVar& g, const Tensor& noise);

// -[y log s(z) + (1 - y) log(1 - s(z))] in the stable form softplus(z) - y z.
double bce_logits(double logit, double label);

}  // namespace ecc::diff
