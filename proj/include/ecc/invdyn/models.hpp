#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ecc/data/dataset.hpp"
#include "ecc/diffcore/archive.hpp"
#include "ecc/diffcore/gaussian.hpp"
#include "ecc/diffcore/mlp.hpp"

namespace ecc::invdyn {

using data::Domain;
using diff::DiagGaussian;
using diff::GaussianVar;
using diff::Mlp;
using diff::Standardizer;
using diff::Tape;
using diff::Tensor;
using diff::Var;
using diff::Vector;

struct DynTrainConfig {
  int epochs = 50;
  int steps_per_epoch = 100;
  int batch_size = 256;
  double lr = 1e-3;
  double heldout_fraction = 0.1;
  int hidden = 64;
  std::uint64_t seed = 0;
};

// One row per epoch; epoch 0 is the untrained model.
struct CurveRow {
  int epoch = 0;
  double train_l1 = 0.0;    // mean per-dimension training loss over the epoch
  double heldout_l1 = 0.0;  // mean per-dimension error of the point prediction
};

void write_curve_csv(const std::vector<CurveRow>& curve, const std::filesystem::path& path);

// (s, s') -> Gaussian over the action that produced the transition. The
// network sees the standardized state and the standardized difference s' - s.
class InvDynModel {
 public:
  InvDynModel() = default;
  // Zero-initialized: every prediction is N(0, I).
  InvDynModel(Domain domain, int state_dim, int action_dim, int hidden = 64);
  static InvDynModel uniform(Domain domain, const data::TransitionTable& stats_from, int hidden, Rng& rng);

  GaussianVar predict(Tape& tape, Var s, Var s_next);
  DiagGaussian predict(const Vector& s, const Vector& s_next) const;
  std::pair<Tensor, Tensor> predict(const Tensor& s, const Tensor& s_next) const;

  Domain domain() const { return domain_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  bool frozen() const { return frozen_; }
  void freeze();
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  const Standardizer& state_norm() const { return state_norm_; }
  const Standardizer& delta_norm() const { return delta_norm_; }

  void store(diff::Archive& ar) const;
  static InvDynModel restore(const diff::Archive& ar);

 private:
  void check_dims(const Tensor& s, const Tensor& s_next) const;

  Domain domain_ = Domain::Source;
  int state_dim_ = 0;
  int action_dim_ = 0;
  Standardizer state_norm_;
  Standardizer delta_norm_;
  Mlp net_;
  bool frozen_ = false;
};

// (s, a) -> s' point estimate, residual on s.
class FwdDynModel {
 public:
  FwdDynModel() = default;
  FwdDynModel(Domain domain, int state_dim, int action_dim, int hidden = 64);
  static FwdDynModel uniform(Domain domain, const data::TransitionTable& stats_from, int hidden, Rng& rng);

  Var predict(Tape& tape, Var s, Var a);
  Tensor predict(const Tensor& s, const Tensor& a) const;
  Vector predict(const Vector& s, const Vector& a) const;

  Domain domain() const { return domain_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  bool frozen() const { return frozen_; }
  void freeze();
  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }

  void store(diff::Archive& ar) const;
  static FwdDynModel restore(const diff::Archive& ar);

 private:
  void check_dims(const Tensor& s, const Tensor& a) const;

  Domain domain_ = Domain::Source;
  int state_dim_ = 0;
  int action_dim_ = 0;
  Standardizer state_norm_;
  Standardizer action_norm_;
  Standardizer delta_norm_;
  Mlp net_;
  bool frozen_ = false;
};

// Mean over batch and action dimensions of |a - (mu + eps * sigma)|.
Var invdyn_loss(Tape& tape, InvDynModel& model, const data::Batch& batch, const Tensor& noise);
// Mean over batch and state dimensions of |s' - T(s, a)|.
Var fwddyn_loss(Tape& tape, FwdDynModel& model, const data::Batch& batch);

double invdyn_heldout_l1(const InvDynModel& model, const data::TransitionTable& table);
double fwddyn_heldout_l1(const FwdDynModel& model, const data::TransitionTable& table);

template <class Model>
struct Trained {
  Model model;
  std::vector<CurveRow> curve;
  double heldout_l1 = 0.0;
};

// Splits by trajectory, trains with Adam, then freezes the model.
// Throws TrainingError if the loss becomes non-finite.
Trained<InvDynModel> train_inverse_dynamics(const data::Dataset& ds, const DynTrainConfig& cfg);
Trained<FwdDynModel> train_forward_dynamics(const data::Dataset& ds, const DynTrainConfig& cfg);

void save_model(const InvDynModel& m, const std::filesystem::path& path);
void save_model(const FwdDynModel& m, const std::filesystem::path& path);
InvDynModel load_invdyn(const std::filesystem::path& path);
FwdDynModel load_fwddyn(const std::filesystem::path& path);

}  // namespace ecc::invdyn
