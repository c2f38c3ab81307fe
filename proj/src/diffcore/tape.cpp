#include "ecc/diffcore/tape.hpp"

#include <cmath>

#include "ecc/error.hpp"

namespace ecc::diff {

std::vector<std::size_t> shape_of(const Tensor& t) {
  return {static_cast<std::size_t>(t.rows()), static_cast<std::size_t>(t.cols())};
}

bool all_finite(const Tensor& t) { return t.allFinite(); }

Tensor row(const Vector& v) { return v.transpose(); }

Tensor tanh_of(const Tensor& x) {
  Tensor e = (2.0 * x.array()).exp();
  return 1.0 - 2.0 / (e.array() + 1.0);
}

namespace {

std::string dims(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw UsageError(std::string(op) + ": shape mismatch " + dims(a) + " vs " + dims(b));
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus_value(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

void Tape::check(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw UsageError("invalid Var handle");
  }
}

Var Tape::push(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::any_grad(std::initializer_list<Var> vs) const {
  for (Var v : vs) {
    if (v.valid() && nodes_[v.id].requires_grad) return true;
  }
  return false;
}

double Tape::scalar(Var v) const {
  check(v);
  const Tensor& t = val(v);
  if (t.size() != 1) throw UsageError("scalar(): node is " + dims(t));
  return t(0, 0);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false); }

Var Tape::input(Tensor value) { return push(std::move(value), true); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value, true);
  nodes_[v.id].param = &p;
  return v;
}

Var Tape::linear(Var x, Var w, Var b) {
  check(x);
  check(w);
  const Tensor& xv = val(x);
  const Tensor& wv = val(w);
  if (xv.cols() != wv.cols()) {
    throw UsageError("linear: input " + dims(xv) + " incompatible with weight " + dims(wv));
  }
  Tensor out = xv * wv.transpose();
  if (b.valid()) {
    check(b);
    const Tensor& bv = val(b);
    if (bv.rows() != 1 || bv.cols() != wv.rows()) {
      throw UsageError("linear: bias " + dims(bv) + " incompatible with weight " + dims(wv));
    }
    out.rowwise() += bv.row(0);
  }
  Var o = push(std::move(out), any_grad({x, w, b}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, x, w, b] {
      const Tensor& go = g(o);
      if (nodes_[x.id].requires_grad) g(x).noalias() += go * val(w);
      if (nodes_[w.id].requires_grad) g(w).noalias() += go.transpose() * val(x);
      if (b.valid() && nodes_[b.id].requires_grad) g(b) += go.colwise().sum();
    };
  }
  return o;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(val(a), val(b), "add");
  Var o = push(val(a) + val(b), any_grad({a, b}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, b] {
      if (nodes_[a.id].requires_grad) g(a) += g(o);
      if (nodes_[b.id].requires_grad) g(b) += g(o);
    };
  }
  return o;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(val(a), val(b), "sub");
  Var o = push(val(a) - val(b), any_grad({a, b}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, b] {
      if (nodes_[a.id].requires_grad) g(a) += g(o);
      if (nodes_[b.id].requires_grad) g(b) -= g(o);
    };
  }
  return o;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  require_same_shape(val(a), val(b), "mul");
  Var o = push(val(a).cwiseProduct(val(b)), any_grad({a, b}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, b] {
      if (nodes_[a.id].requires_grad) g(a) += g(o).cwiseProduct(val(b));
      if (nodes_[b.id].requires_grad) g(b) += g(o).cwiseProduct(val(a));
    };
  }
  return o;
}

Var Tape::scale(Var a, double s) {
  check(a);
  Var o = push(val(a) * s, any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, s] { g(a) += g(o) * s; };
  }
  return o;
}

Var Tape::add_scalar(Var a, double s) {
  check(a);
  Var o = push(val(a).array() + s, any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] { g(a) += g(o); };
  }
  return o;
}

Var Tape::affine_cols(Var x, const Tensor& scale, const Tensor& shift) {
  check(x);
  const Tensor& xv = val(x);
  if (scale.rows() != 1 || shift.rows() != 1 || scale.cols() != xv.cols() || shift.cols() != xv.cols()) {
    throw UsageError("affine_cols: scale/shift must be 1x" + std::to_string(xv.cols()));
  }
  Tensor out = xv.array().rowwise() * scale.row(0).array();
  out.rowwise() += shift.row(0);
  Var o = push(std::move(out), any_grad({x}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, x, scale] {
      g(x).array() += g(o).array().rowwise() * scale.row(0).array();
    };
  }
  return o;
}

Var Tape::tanh(Var a) {
  check(a);
  Var o = push(tanh_of(val(a)), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] {
      g(a).array() += g(o).array() * (1.0 - val(o).array().square());
    };
  }
  return o;
}

Var Tape::exp(Var a) {
  check(a);
  Var o = push(val(a).array().exp(), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] { g(a).array() += g(o).array() * val(o).array(); };
  }
  return o;
}

Var Tape::abs(Var a) {
  check(a);
  Var o = push(val(a).cwiseAbs(), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] {
      const Tensor& av = val(a);
      Tensor& ga = g(a);
      const Tensor& go = g(o);
      for (Eigen::Index i = 0; i < av.size(); ++i) {
        double x = av.data()[i];
        double s = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        ga.data()[i] += s * go.data()[i];
      }
    };
  }
  return o;
}

Var Tape::clamp(Var a, double lo, double hi) {
  check(a);
  Var o = push(val(a).cwiseMax(lo).cwiseMin(hi), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, lo, hi] {
      const Tensor& av = val(a);
      Tensor& ga = g(a);
      const Tensor& go = g(o);
      for (Eigen::Index i = 0; i < av.size(); ++i) {
        double x = av.data()[i];
        if (x >= lo && x <= hi) ga.data()[i] += go.data()[i];
      }
    };
  }
  return o;
}

Var Tape::softplus(Var a) {
  check(a);
  Tensor out = val(a).unaryExpr([](double z) { return softplus_value(z); });
  Var o = push(std::move(out), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] {
      g(a).array() += g(o).array() * val(a).unaryExpr([](double z) { return sigmoid(z); }).array();
    };
  }
  return o;
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  if (av.rows() != bv.rows()) throw UsageError("concat_cols: row mismatch " + dims(av) + " vs " + dims(bv));
  Tensor out(av.rows(), av.cols() + bv.cols());
  out << av, bv;
  Var o = push(std::move(out), any_grad({a, b}));
  if (nodes_[o.id].requires_grad) {
    int na = static_cast<int>(av.cols());
    int nb = static_cast<int>(bv.cols());
    nodes_[o.id].backprop = [this, o, a, b, na, nb] {
      if (nodes_[a.id].requires_grad) g(a) += g(o).leftCols(na);
      if (nodes_[b.id].requires_grad) g(b) += g(o).rightCols(nb);
    };
  }
  return o;
}

Var Tape::slice_cols(Var a, int start, int count) {
  check(a);
  const Tensor& av = val(a);
  if (start < 0 || count < 1 || start + count > av.cols()) {
    throw UsageError("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) + ") out of " +
                     dims(av));
  }
  Var o = push(av.middleCols(start, count), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, start, count] { g(a).middleCols(start, count) += g(o); };
  }
  return o;
}

Var Tape::sum(Var a) {
  check(a);
  Tensor out(1, 1);
  out(0, 0) = val(a).sum();
  Var o = push(std::move(out), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] { g(a).array() += g(o)(0, 0); };
  }
  return o;
}

Var Tape::mean(Var a) {
  check(a);
  double n = static_cast<double>(val(a).size());
  Tensor out(1, 1);
  out(0, 0) = val(a).sum() / n;
  Var o = push(std::move(out), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, n] { g(a).array() += g(o)(0, 0) / n; };
  }
  return o;
}

Var Tape::row_sum(Var a) {
  check(a);
  Var o = push(val(a).rowwise().sum(), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a] { g(a).colwise() += g(o).col(0); };
  }
  return o;
}

Var Tape::mean_rows(Var a) {
  check(a);
  double rows = static_cast<double>(val(a).rows());
  Tensor out(1, 1);
  out(0, 0) = val(a).sum() / rows;
  Var o = push(std::move(out), any_grad({a}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, a, rows] { g(a).array() += g(o)(0, 0) / rows; };
  }
  return o;
}

Var Tape::weighted_sum(const std::vector<std::pair<double, Var>>& terms) {
  Tensor out = Tensor::Zero(1, 1);
  bool rg = false;
  for (const auto& [w, v] : terms) {
    check(v);
    if (val(v).size() != 1) throw UsageError("weighted_sum: terms must be 1x1");
    out(0, 0) += w * val(v)(0, 0);
    rg = rg || nodes_[v.id].requires_grad;
  }
  Var o = push(std::move(out), rg);
  if (rg) {
    nodes_[o.id].backprop = [this, o, terms] {
      for (const auto& [w, v] : terms) {
        if (nodes_[v.id].requires_grad) g(v)(0, 0) += w * g(o)(0, 0);
      }
    };
  }
  return o;
}

Var Tape::gaussian_kl(Var mean_p, Var log_std_p, Var mean_q, Var log_std_q) {
  for (Var v : {mean_p, log_std_p, mean_q, log_std_q}) check(v);
  const Tensor& mp = val(mean_p);
  require_same_shape(mp, val(log_std_p), "gaussian_kl");
  require_same_shape(mp, val(mean_q), "gaussian_kl");
  require_same_shape(mp, val(log_std_q), "gaussian_kl");
  auto lsp = val(log_std_p).array();
  auto lsq = val(log_std_q).array();
  Eigen::ArrayXXd var_ratio = (2.0 * (lsp - lsq)).exp();                          // sp^2 / sq^2
  Eigen::ArrayXXd diff = mp.array() - val(mean_q).array();
  Eigen::ArrayXXd inv_var_q = (-2.0 * lsq).exp();
  Eigen::ArrayXXd terms = lsq - lsp + 0.5 * (var_ratio + diff.square() * inv_var_q) - 0.5;
  Tensor out = terms.matrix().rowwise().sum();
  Var o = push(std::move(out), any_grad({mean_p, log_std_p, mean_q, log_std_q}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, mean_p, log_std_p, mean_q, log_std_q, var_ratio, diff, inv_var_q] {
      Eigen::ArrayXXd go = g(o).col(0).replicate(1, diff.cols()).array();
      Eigen::ArrayXXd dmean = diff * inv_var_q;
      if (nodes_[mean_p.id].requires_grad) g(mean_p).array() += go * dmean;
      if (nodes_[mean_q.id].requires_grad) g(mean_q).array() -= go * dmean;
      if (nodes_[log_std_p.id].requires_grad) g(log_std_p).array() += go * (var_ratio - 1.0);
      if (nodes_[log_std_q.id].requires_grad) {
        g(log_std_q).array() += go * (1.0 - var_ratio - diff.square() * inv_var_q);
      }
    };
  }
  return o;
}

Var Tape::bce_logits(Var logit, double label) {
  check(logit);
  const Tensor& z = val(logit);
  Tensor out = z.unaryExpr([label](double x) { return softplus_value(x) - label * x; });
  Var o = push(std::move(out), any_grad({logit}));
  if (nodes_[o.id].requires_grad) {
    nodes_[o.id].backprop = [this, o, logit, label] {
      g(logit).array() +=
          g(o).array() * val(logit).unaryExpr([label](double x) { return sigmoid(x) - label; }).array();
    };
  }
  return o;
}

void Tape::backward(Var loss) {
  check(loss);
  if (val(loss).size() != 1) throw UsageError("backward: loss must be a scalar, got " + dims(val(loss)));
  if (backward_done_) throw UsageError("backward: tape already consumed");
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  for (std::size_t i = 0; i <= static_cast<std::size_t>(loss.id); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) n.grad = Tensor::Zero(n.value.rows(), n.value.cols());
  }
  g(loss)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad) continue;
    if (n.backprop) n.backprop();
    if (n.param && !n.param->frozen) {
      if (n.param->grad.rows() != n.grad.rows() || n.param->grad.cols() != n.grad.cols()) {
        n.param->grad = Tensor::Zero(n.grad.rows(), n.grad.cols());
      }
      n.param->grad += n.grad;
    }
  }
}

}  // namespace ecc::diff
