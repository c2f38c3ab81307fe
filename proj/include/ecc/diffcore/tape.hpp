#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ecc::diff {

// Dense row-major 2-D array. Batches are rows, features are columns; a single
// vector is a 1 x n tensor.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

std::vector<std::size_t> shape_of(const Tensor& t);
bool all_finite(const Tensor& t);
Tensor row(const Vector& v);
// Elementwise tanh via 1 - 2 / (exp(2x) + 1), which vectorizes; the scalar
// library tanh dominates training time otherwise.
Tensor tanh_of(const Tensor& x);

// A named trainable array. Gradients accumulate in `grad` during backward
// unless `frozen` is set at the time backward runs.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::Zero(value.rows(), value.cols())) {}
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Handle to a node on a tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode computation tape. Every op records its value eagerly and, when
// any input requires a gradient, a closure that pushes the output gradient
// back to its inputs. A tape is single-use: build, backward once, discard.
class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var constant(Tensor value);
  Var input(Tensor value);  // tracks a gradient but is not a parameter
  Var param(Parameter& p);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // x * W^T + b with x: B x in, W: out x in, b: 1 x out (b optional).
  Var linear(Var x, Var w, Var b = {});
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);   // elementwise
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  // Per-column affine x * scale + shift with constant 1 x n scale and shift.
  Var affine_cols(Var x, const Tensor& scale, const Tensor& shift);
  Var tanh(Var a);
  Var exp(Var a);
  Var abs(Var a);  // subgradient 0 at 0
  Var clamp(Var a, double lo, double hi);  // zero gradient outside [lo, hi]
  Var softplus(Var a);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, int start, int count);
  Var sum(Var a);        // -> 1 x 1
  Var mean(Var a);       // -> 1 x 1, over all entries
  Var row_sum(Var a);    // B x n -> B x 1
  Var mean_rows(Var a);  // B x n -> 1 x 1: sum over columns, mean over rows
  // Scalar-weighted sum of 1 x 1 nodes.
  Var weighted_sum(const std::vector<std::pair<double, Var>>& terms);

  // Closed-form KL(p || q) between diagonal Gaussians, summed over columns:
  // B x n inputs -> B x 1.
  Var gaussian_kl(Var mean_p, Var log_std_p, Var mean_q, Var log_std_q);
  // Numerically stable binary cross-entropy on logits against a constant
  // label: B x 1 -> B x 1.
  Var bce_logits(Var logit, double label);

  // Accumulates d(loss)/d(node) for every node and into every non-frozen
  // parameter. Throws UsageError unless loss is 1 x 1.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::function<void()> backprop;
  };

  Var push(Tensor value, bool requires_grad);
  bool any_grad(std::initializer_list<Var> vs) const;
  Tensor& g(Var v) { return nodes_[v.id].grad; }
  const Tensor& val(Var v) const { return nodes_[v.id].value; }
  void check(Var v) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace ecc::diff
