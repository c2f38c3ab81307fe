#pragma once

#include <string>
#include <vector>

#include "ecc/diffcore/tape.hpp"
#include "ecc/rng.hpp"

namespace ecc::diff {

struct DenseLayer {
  Parameter weight;  // out x in
  Parameter bias;    // 1 x out
};

// Multilayer perceptron: tanh on hidden layers, linear output.
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialized network with layer sizes dims[0] -> ... -> dims.back().
  Mlp(std::string name, const std::vector<int>& dims);
  // Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  static Mlp uniform(std::string name, const std::vector<int>& dims, Rng& rng);

  Var forward(Tape& tape, Var x);
  // Same arithmetic with the parameters entered as constants: gradients reach
  // x but never the parameters.
  Var forward_constant(Tape& tape, Var x) const;
  Tensor infer(const Tensor& x) const;

  int in_dim() const;
  int out_dim() const;
  std::vector<int> dims() const;
  const std::string& name() const { return name_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::vector<Parameter*> parameters();
  void set_frozen(bool frozen);
  bool equal_bytes(const Mlp& other) const;

 private:
  std::string name_;
  std::vector<DenseLayer> layers_;
};

// Per-column standardization fitted once on a dataset and never trained.
struct Standardizer {
  Tensor mean;  // 1 x n
  Tensor std;   // 1 x n, strictly positive

  static Standardizer identity(int n);
  // Column statistics of rows; std is floored at min_std.
  static Standardizer fit(const Tensor& rows, double min_std = 1e-6);

  int dim() const { return static_cast<int>(mean.cols()); }
  Var normalize(Tape& tape, Var x) const;
  Var denormalize(Tape& tape, Var x) const;
  Tensor normalize(const Tensor& x) const;
  Tensor denormalize(const Tensor& x) const;
};

}  // namespace ecc::diff
