#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecc/data/dataset.hpp"
#include "ecc/diffcore/archive.hpp"
#include "ecc/diffcore/gaussian.hpp"
#include "ecc/diffcore/mlp.hpp"
#include "ecc/envs/domain_pair.hpp"
#include "ecc/error.hpp"
#include "ecc/invdyn/models.hpp"

namespace ecc::mappings {

using diff::DiagGaussian;
using diff::GaussianVar;
using diff::Mlp;
using diff::Standardizer;
using diff::Tape;
using diff::Tensor;
using diff::Var;
using diff::Vector;

enum class Method { Ecc, EccNoSym, Dcc, CycleGan, Random };

const std::vector<std::string>& method_names();
std::string to_string(Method m);
// Throws UsageError listing the valid choices.
Method method_from_string(const std::string& s);

// Standardize -> MLP -> destandardize.
struct StateMap {
  Standardizer in;
  Standardizer out;
  Mlp net;

  Var apply(Tape& tape, Var x);
  Tensor apply(const Tensor& x) const;
};

// (state, action) -> Gaussian over the other domain's actions. The mean and
// log-std are in raw action units.
struct ActionMap {
  Standardizer state_in;
  Standardizer action_in;
  Mlp net;
  int out_dim = 0;

  GaussianVar apply(Tape& tape, Var s, Var a);
  std::pair<Tensor, Tensor> apply(const Tensor& s, const Tensor& a) const;
};

// Standardized input -> single logit.
struct Discriminator {
  Standardizer in;
  Mlp net;

  Var logit(Tape& tape, Var x);
  // Gradients reach the input but not the discriminator parameters.
  Var logit_detached(Tape& tape, Var x) const;
  Tensor logit(const Tensor& x) const;
};

struct MappingSet {
  Method method = Method::Ecc;
  int source_state_dim = 0, source_action_dim = 0;
  int target_state_dim = 0, target_action_dim = 0;
  StateMap F;  // X -> Y
  StateMap G;  // Y -> X
  ActionMap H;  // X x A -> U
  ActionMap P;  // Y x U -> A; absent (empty net) for ecc_nosym
  Discriminator DX, DY;
  // Action discriminators of the baselines: on (state, action) for dcc, on
  // raw actions for cyclegan. Empty nets otherwise.
  Discriminator DA, DU;

  bool has_P() const { return !P.net.layers().empty(); }
  bool has_action_discriminators() const { return !DA.net.layers().empty(); }

  std::vector<diff::Parameter*> state_map_params();
  std::vector<diff::Parameter*> action_map_params();
  std::vector<diff::Parameter*> discriminator_params();

  // Deterministic evaluation helpers (H, P use the Gaussian mean).
  Vector map_state(const Vector& x) const;    // F
  Vector unmap_state(const Vector& y) const;  // G
  DiagGaussian map_action(const Vector& x, const Vector& a) const;  // H

  void store(diff::Archive& ar) const;
  static MappingSet restore(const diff::Archive& ar);
};

// Statistics every normalizer is fitted on, computed once from training data.
struct DomainStats {
  Standardizer source_state, source_action, target_state, target_action;
  static DomainStats fit(const data::TransitionTable& src, const data::TransitionTable& tgt);
};

// Randomly initialized networks of the architecture used by `method`.
MappingSet init_mapping_set(Method method, const DomainStats& stats, int hidden, Rng& rng);

// Function views, so the loss builders accept learned or ground-truth maps.
using StateFn = std::function<Var(Tape&, Var)>;
using ActionFn = std::function<GaussianVar(Tape&, Var, Var)>;
using LogitFn = std::function<Var(Tape&, Var)>;
using InvDynFn = std::function<GaussianVar(Tape&, Var, Var)>;

struct Maps {
  StateFn F, G;
  ActionFn H, P;
  LogitFn DX, DY;           // trainable discriminator path
  LogitFn DX_gen, DY_gen;   // same discriminators with parameters held constant
};

Maps view(MappingSet& set);
InvDynFn view(invdyn::InvDynModel& model);

// Ground-truth linear maps of a pair as tape functions. H and P are Gaussians
// centred on N a and N^+ u with constant log-std.
StateFn linear_state_fn(const envs::Matrix& m);
ActionFn linear_action_fn(const envs::Matrix& m, double log_std);

struct AdversarialLosses {
  Var gen_G;   // -log D_X(G(y)), non-saturating
  Var gen_F;   // -log D_Y(F(x))
  Var disc_X;  // BCE of D_X: real x -> 1, detached G(y) -> 0
  Var disc_Y;
};

AdversarialLosses adversarial_losses(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt);
// Batch mean of |x - G(F(x))|_1 + |y - F(G(y))|_1.
Var cycle_loss(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt);

struct EffectLosses {
  Var fh;  // mean KL(invdyn_tgt(F(x), F(x')) || H(x, a))
  Var gp;  // mean KL(invdyn_src(G(y), G(y')) || P(y, u)); invalid without P
};

EffectLosses effect_losses(Tape& tape, const Maps& maps, const InvDynFn& invdyn_src, const InvDynFn& invdyn_tgt,
                           const data::Batch& src, const data::Batch& tgt, bool symmetric = true);

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
};

// lambda1 * (gen_G + gen_F + cycle) + lambda2 * (eff_fh + eff_gp). Terms that
// are invalid Vars are skipped.
Var full_loss(Tape& tape, const LossWeights& w, Var gen_G, Var gen_F, Var cycle, Var eff_fh, Var eff_gp);

// Baseline terms.
// |P(F(x), H(x, a)) - a|_1 + |H(G(y), P(y, u)) - u|_1, using Gaussian means.
Var action_cycle_loss(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt);
// |F(x') - T_tgt(F(x), H(x, a))|_1 with the frozen target forward model.
Var dynamics_consistency_loss(Tape& tape, const Maps& maps, invdyn::FwdDynModel& fwd_tgt, const data::Batch& src);

struct TrainConfig {
  Method method = Method::Ecc;
  LossWeights weights;
  int epochs = 30;         // e
  int phase1_epochs = 2;   // e1
  int phase2_epochs = 2;   // e2
  int steps_per_epoch = 50;
  int batch_size = 256;
  double lr_gen = 1e-4;
  double lr_disc = 2e-4;
  int hidden = 64;
  double dcc_dynamics_weight = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// One minibatch update. Losses a phase did not compute are empty.
struct LogRecord {
  int step = 0;
  int epoch = 0;
  int phase = 0;  // 1 adversarial + cycle, 2 effect, 0 joint (baselines)
  std::optional<double> adv_x, adv_y, cyc, eff_fh, eff_gp;
  std::optional<double> disc_x, disc_y;
  std::optional<double> act_cyc, dyn, act_adv;  // baselines
};

struct PhaseLog {
  std::vector<LogRecord> records;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  MappingSet set;
  PhaseLog log;
};

// Thrown when a loss becomes non-finite; carries the log up to that point.
class DivergenceError : public TrainingError {
 public:
  DivergenceError(const std::string& what, PhaseLog log) : TrainingError(what), log_(std::move(log)) {}
  const PhaseLog& log() const { return log_; }

 private:
  PhaseLog log_;
};

// Optional observer invoked at every phase boundary with the phase just
// finished; used to audit the freezing contract.
using PhaseHook = std::function<void(int phase, const MappingSet& before, const MappingSet& after)>;

// Alternating schedule for ecc / ecc_nosym: e outer epochs of e1 epochs of
// adversarial + cycle on (F, G, D_X, D_Y) with H, P frozen, then e2 epochs of
// effect losses on (F, G, H, P) with the discriminators frozen.
TrainResult train_mappings(const data::Dataset& src, const data::Dataset& tgt, invdyn::InvDynModel& invdyn_src,
                           invdyn::InvDynModel& invdyn_tgt, const TrainConfig& cfg, const PhaseHook& hook = {},
                           const MappingSet* warm_start = nullptr);
// Joint updates for e * (e1 + e2) epochs.
TrainResult train_dcc_baseline(const data::Dataset& src, const data::Dataset& tgt, invdyn::FwdDynModel& fwd_tgt,
                               const TrainConfig& cfg);
TrainResult train_cyclegan_baseline(const data::Dataset& src, const data::Dataset& tgt, const TrainConfig& cfg);
MappingSet random_mapping(const data::Dataset& src, const data::Dataset& tgt, const TrainConfig& cfg);

bool equal_bytes(const StateMap& a, const StateMap& b);
bool equal_bytes(const ActionMap& a, const ActionMap& b);
bool equal_bytes(const Discriminator& a, const Discriminator& b);

void save_mapping_set(const MappingSet& set, const std::filesystem::path& path);
MappingSet load_mapping_set(const std::filesystem::path& path);

}  // namespace ecc::mappings
