#include "ecc/diffcore/mlp.hpp"

#include <cmath>
#include <cstring>

#include "ecc/error.hpp"

namespace ecc::diff {

Mlp::Mlp(std::string name, const std::vector<int>& dims) : name_(std::move(name)) {
  if (dims.size() < 2) throw ConfigError("Mlp '" + name_ + "' needs at least input and output sizes");
  for (int d : dims) {
    if (d < 1) throw ConfigError("Mlp '" + name_ + "' has a non-positive layer size");
  }
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    std::string prefix = name_ + ".l" + std::to_string(i);
    layers_.push_back(DenseLayer{Parameter(prefix + ".W", Tensor::Zero(dims[i + 1], dims[i])),
                                 Parameter(prefix + ".b", Tensor::Zero(1, dims[i + 1]))});
  }
}

Mlp Mlp::uniform(std::string name, const std::vector<int>& dims, Rng& rng) {
  Mlp net(std::move(name), dims);
  for (auto& layer : net.layers_) {
    double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.value.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < layer.weight.value.size(); ++i) layer.weight.value.data()[i] = dist(rng);
  }
  return net;
}

Var Mlp::forward(Tape& tape, Var x) {
  if (layers_.empty()) throw ConfigError("Mlp '" + name_ + "' is empty");
  if (tape.value(x).cols() != in_dim()) {
    throw ConfigError("Mlp '" + name_ + "' expects input width " + std::to_string(in_dim()) + ", got " +
                      std::to_string(tape.value(x).cols()));
  }
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = tape.linear(h, tape.param(layers_[i].weight), tape.param(layers_[i].bias));
    if (i + 1 < layers_.size()) h = tape.tanh(h);
  }
  return h;
}

Var Mlp::forward_constant(Tape& tape, Var x) const {
  if (layers_.empty()) throw ConfigError("Mlp '" + name_ + "' is empty");
  if (tape.value(x).cols() != in_dim()) {
    throw ConfigError("Mlp '" + name_ + "' expects input width " + std::to_string(in_dim()) + ", got " +
                      std::to_string(tape.value(x).cols()));
  }
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = tape.linear(h, tape.constant(layers_[i].weight.value), tape.constant(layers_[i].bias.value));
    if (i + 1 < layers_.size()) h = tape.tanh(h);
  }
  return h;
}

Tensor Mlp::infer(const Tensor& x) const {
  if (layers_.empty()) throw ConfigError("Mlp '" + name_ + "' is empty");
  if (x.cols() != in_dim()) {
    throw ConfigError("Mlp '" + name_ + "' expects input width " + std::to_string(in_dim()) + ", got " +
                      std::to_string(x.cols()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Tensor out = h * layers_[i].weight.value.transpose();
    out.rowwise() += layers_[i].bias.value.row(0);
    if (i + 1 < layers_.size()) out = tanh_of(out);
    h = std::move(out);
  }
  return h;
}

int Mlp::in_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.value.cols()); }

int Mlp::out_dim() const { return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.value.rows()); }

std::vector<int> Mlp::dims() const {
  std::vector<int> d;
  if (layers_.empty()) return d;
  d.push_back(in_dim());
  for (const auto& l : layers_) d.push_back(static_cast<int>(l.weight.value.rows()));
  return d;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> ps;
  for (auto& l : layers_) {
    ps.push_back(&l.weight);
    ps.push_back(&l.bias);
  }
  return ps;
}

void Mlp::set_frozen(bool frozen) {
  for (auto* p : parameters()) p->frozen = frozen;
}

bool Mlp::equal_bytes(const Mlp& other) const {
  if (dims() != other.dims()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (auto [a, b] : {std::pair{&layers_[i].weight, &other.layers_[i].weight},
                        std::pair{&layers_[i].bias, &other.layers_[i].bias}}) {
      if (std::memcmp(a->value.data(), b->value.data(), sizeof(double) * a->value.size()) != 0) return false;
    }
  }
  return true;
}

Standardizer Standardizer::identity(int n) { return {Tensor::Zero(1, n), Tensor::Ones(1, n)}; }

Standardizer Standardizer::fit(const Tensor& rows, double min_std) {
  if (rows.rows() < 1) throw UsageError("Standardizer::fit on empty data");
  Standardizer s;
  s.mean = rows.colwise().mean();
  Tensor centered = rows.rowwise() - s.mean.row(0);
  s.std = (centered.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt().matrix();
  s.std = s.std.cwiseMax(min_std);
  return s;
}

Var Standardizer::normalize(Tape& tape, Var x) const {
  Tensor scale = std.cwiseInverse();
  Tensor shift = -mean.cwiseProduct(scale);
  return tape.affine_cols(x, scale, shift);
}

Var Standardizer::denormalize(Tape& tape, Var x) const { return tape.affine_cols(x, std, mean); }

Tensor Standardizer::normalize(const Tensor& x) const {
  Tensor scale = std.cwiseInverse();
  Tensor shift = -mean.cwiseProduct(scale);
  Tensor out = x.array().rowwise() * scale.row(0).array();
  out.rowwise() += shift.row(0);
  return out;
}

Tensor Standardizer::denormalize(const Tensor& x) const {
  Tensor out = x.array().rowwise() * std.row(0).array();
  out.rowwise() += mean.row(0);
  return out;
}

}  // namespace ecc::diff
