#include "ecc/invdyn/models.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "ecc/diffcore/adam.hpp"
#include "ecc/error.hpp"

namespace ecc::invdyn {

namespace {

std::vector<int> layer_dims(int in, int hidden, int out) { return {in, hidden, hidden, out}; }

Tensor deltas(const data::TransitionTable& t) { return t.next_states - t.states; }

std::string domain_tag(Domain d) { return data::to_string(d); }

// Coordinates that never change in the data (the goal) would otherwise get a
// near-zero delta scale, so any drift a learned state map introduces there is
// blown up before it reaches the network.
constexpr double kDeltaScaleFloor = 1e-2;

}  // namespace

void write_curve_csv(const std::vector<CurveRow>& curve, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17) << "epoch,train_l1,heldout_l1\n";
  for (const auto& r : curve) out << r.epoch << ',' << r.train_l1 << ',' << r.heldout_l1 << '\n';
}

// ---------------------------------------------------------------- InvDynModel

InvDynModel::InvDynModel(Domain domain, int state_dim, int action_dim, int hidden)
    : domain_(domain),
      state_dim_(state_dim),
      action_dim_(action_dim),
      state_norm_(Standardizer::identity(state_dim)),
      delta_norm_(Standardizer::identity(state_dim)),
      net_("invdyn", layer_dims(2 * state_dim, hidden, 2 * action_dim)) {}

InvDynModel InvDynModel::uniform(Domain domain, const data::TransitionTable& stats_from, int hidden, Rng& rng) {
  InvDynModel m;
  m.domain_ = domain;
  m.state_dim_ = static_cast<int>(stats_from.states.cols());
  m.action_dim_ = static_cast<int>(stats_from.actions.cols());
  m.state_norm_ = Standardizer::fit(stats_from.states);
  m.delta_norm_ = Standardizer::fit(deltas(stats_from));
  m.delta_norm_.std = m.delta_norm_.std.cwiseMax(kDeltaScaleFloor * m.state_norm_.std);
  m.net_ = Mlp::uniform("invdyn", layer_dims(2 * m.state_dim_, hidden, 2 * m.action_dim_), rng);
  return m;
}

void InvDynModel::check_dims(const Tensor& s, const Tensor& s_next) const {
  if (s.cols() != state_dim_ || s_next.cols() != state_dim_ || s.rows() != s_next.rows()) {
    throw UsageError("invdyn_predict: expected two batches of width " + std::to_string(state_dim_) + ", got " +
                     std::to_string(s.cols()) + " and " + std::to_string(s_next.cols()));
  }
}

GaussianVar InvDynModel::predict(Tape& tape, Var s, Var s_next) {
  check_dims(tape.value(s), tape.value(s_next));
  Var ns = state_norm_.normalize(tape, s);
  Var nd = delta_norm_.normalize(tape, tape.sub(s_next, s));
  return diff::gaussian_head(tape, net_.forward(tape, tape.concat_cols(ns, nd)), action_dim_);
}

std::pair<Tensor, Tensor> InvDynModel::predict(const Tensor& s, const Tensor& s_next) const {
  check_dims(s, s_next);
  Tensor in(s.rows(), 2 * state_dim_);
  in << state_norm_.normalize(s), delta_norm_.normalize(s_next - s);
  return diff::gaussian_head(net_.infer(in), action_dim_);
}

DiagGaussian InvDynModel::predict(const Vector& s, const Vector& s_next) const {
  auto [mean, log_std] = predict(Tensor(diff::row(s)), Tensor(diff::row(s_next)));
  return {mean.row(0).transpose(), log_std.row(0).transpose()};
}

void InvDynModel::freeze() {
  frozen_ = true;
  net_.set_frozen(true);
}

void InvDynModel::store(diff::Archive& ar) const {
  ar.set_attr("invdyn.domain", domain_tag(domain_));
  ar.put_standardizer("invdyn.state_norm", state_norm_);
  ar.put_standardizer("invdyn.delta_norm", delta_norm_);
  ar.put_mlp(net_);
}

InvDynModel InvDynModel::restore(const diff::Archive& ar) {
  InvDynModel m;
  m.domain_ = data::domain_from_string(ar.attr("invdyn.domain"));
  m.state_norm_ = ar.get_standardizer("invdyn.state_norm");
  m.delta_norm_ = ar.get_standardizer("invdyn.delta_norm");
  m.net_ = ar.get_mlp("invdyn");
  m.state_dim_ = m.state_norm_.dim();
  m.action_dim_ = m.net_.out_dim() / 2;
  if (m.net_.in_dim() != 2 * m.state_dim_ || m.delta_norm_.dim() != m.state_dim_ || m.net_.out_dim() % 2 != 0) {
    throw DimensionError("inverse-dynamics snapshot has inconsistent dimensions");
  }
  m.freeze();
  return m;
}

// ---------------------------------------------------------------- FwdDynModel

FwdDynModel::FwdDynModel(Domain domain, int state_dim, int action_dim, int hidden)
    : domain_(domain),
      state_dim_(state_dim),
      action_dim_(action_dim),
      state_norm_(Standardizer::identity(state_dim)),
      action_norm_(Standardizer::identity(action_dim)),
      delta_norm_(Standardizer::identity(state_dim)),
      net_("fwddyn", layer_dims(state_dim + action_dim, hidden, state_dim)) {}

FwdDynModel FwdDynModel::uniform(Domain domain, const data::TransitionTable& stats_from, int hidden, Rng& rng) {
  FwdDynModel m;
  m.domain_ = domain;
  m.state_dim_ = static_cast<int>(stats_from.states.cols());
  m.action_dim_ = static_cast<int>(stats_from.actions.cols());
  m.state_norm_ = Standardizer::fit(stats_from.states);
  m.action_norm_ = Standardizer::fit(stats_from.actions);
  m.delta_norm_ = Standardizer::fit(deltas(stats_from));
  m.net_ = Mlp::uniform("fwddyn", layer_dims(m.state_dim_ + m.action_dim_, hidden, m.state_dim_), rng);
  return m;
}

void FwdDynModel::check_dims(const Tensor& s, const Tensor& a) const {
  if (s.cols() != state_dim_ || a.cols() != action_dim_ || s.rows() != a.rows()) {
    throw UsageError("forward model expects widths " + std::to_string(state_dim_) + "/" +
                     std::to_string(action_dim_) + ", got " + std::to_string(s.cols()) + "/" +
                     std::to_string(a.cols()));
  }
}

Var FwdDynModel::predict(Tape& tape, Var s, Var a) {
  check_dims(tape.value(s), tape.value(a));
  Var in = tape.concat_cols(state_norm_.normalize(tape, s), action_norm_.normalize(tape, a));
  return tape.add(s, delta_norm_.denormalize(tape, net_.forward(tape, in)));
}

Tensor FwdDynModel::predict(const Tensor& s, const Tensor& a) const {
  check_dims(s, a);
  Tensor in(s.rows(), state_dim_ + action_dim_);
  in << state_norm_.normalize(s), action_norm_.normalize(a);
  return s + delta_norm_.denormalize(net_.infer(in));
}

Vector FwdDynModel::predict(const Vector& s, const Vector& a) const {
  return predict(Tensor(diff::row(s)), Tensor(diff::row(a))).row(0).transpose();
}

void FwdDynModel::freeze() {
  frozen_ = true;
  net_.set_frozen(true);
}

void FwdDynModel::store(diff::Archive& ar) const {
  ar.set_attr("fwddyn.domain", domain_tag(domain_));
  ar.put_standardizer("fwddyn.state_norm", state_norm_);
  ar.put_standardizer("fwddyn.action_norm", action_norm_);
  ar.put_standardizer("fwddyn.delta_norm", delta_norm_);
  ar.put_mlp(net_);
}

FwdDynModel FwdDynModel::restore(const diff::Archive& ar) {
  FwdDynModel m;
  m.domain_ = data::domain_from_string(ar.attr("fwddyn.domain"));
  m.state_norm_ = ar.get_standardizer("fwddyn.state_norm");
  m.action_norm_ = ar.get_standardizer("fwddyn.action_norm");
  m.delta_norm_ = ar.get_standardizer("fwddyn.delta_norm");
  m.net_ = ar.get_mlp("fwddyn");
  m.state_dim_ = m.state_norm_.dim();
  m.action_dim_ = m.action_norm_.dim();
  if (m.net_.in_dim() != m.state_dim_ + m.action_dim_ || m.net_.out_dim() != m.state_dim_) {
    throw DimensionError("forward-model snapshot has inconsistent dimensions");
  }
  m.freeze();
  return m;
}

// ---------------------------------------------------------------- losses

Var invdyn_loss(Tape& tape, InvDynModel& model, const data::Batch& batch, const Tensor& noise) {
  GaussianVar g = model.predict(tape, tape.constant(batch.states), tape.constant(batch.next_states));
  Var sample = diff::reparam_sample(tape, g, noise);
  return tape.mean(tape.abs(tape.sub(tape.constant(batch.actions), sample)));
}

Var fwddyn_loss(Tape& tape, FwdDynModel& model, const data::Batch& batch) {
  Var pred = model.predict(tape, tape.constant(batch.states), tape.constant(batch.actions));
  return tape.mean(tape.abs(tape.sub(tape.constant(batch.next_states), pred)));
}

double invdyn_heldout_l1(const InvDynModel& model, const data::TransitionTable& table) {
  if (table.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  auto [mean, log_std] = model.predict(table.states, table.next_states);
  return (table.actions - mean).cwiseAbs().mean();
}

double fwddyn_heldout_l1(const FwdDynModel& model, const data::TransitionTable& table) {
  if (table.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return (table.next_states - model.predict(table.states, table.actions)).cwiseAbs().mean();
}

// ---------------------------------------------------------------- training

namespace {

void validate(const DynTrainConfig& cfg) {
  if (cfg.epochs < 0 || cfg.steps_per_epoch < 1 || cfg.batch_size < 1 || !(cfg.lr > 0) || cfg.hidden < 1) {
    throw ConfigError("dynamics training config out of range");
  }
  if (!(cfg.heldout_fraction >= 0.0 && cfg.heldout_fraction < 1.0)) {
    throw ConfigError("heldout_fraction must be in [0, 1)");
  }
}

// Shared Adam loop: loss(tape, batch, rng) builds the minibatch objective,
// heldout() evaluates the point-prediction error.
template <class Model, class LossFn, class HeldoutFn>
Trained<Model> fit(Model model, const data::TransitionTable& train, const DynTrainConfig& cfg, Rng& rng,
                   const char* what, LossFn loss, HeldoutFn heldout) {
  Trained<Model> out;
  auto params = model.net().parameters();
  diff::Adam opt(params, diff::AdamConfig{cfg.lr});
  out.curve.push_back({0, std::numeric_limits<double>::quiet_NaN(), heldout(model)});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double acc = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      data::Batch batch = data::sample_batch(train, static_cast<std::size_t>(cfg.batch_size), rng);
      Tape tape;
      Var l = loss(tape, model, batch, rng);
      double value = tape.scalar(l);
      if (!std::isfinite(value)) {
        throw TrainingError(std::string(what) + ": loss became non-finite at epoch " + std::to_string(epoch) +
                            " step " + std::to_string(step) + " (last epoch mean " +
                            std::to_string(out.curve.back().train_l1) + ")");
      }
      opt.zero_grad();
      tape.backward(l);
      opt.step();
      acc += value;
    }
    out.curve.push_back({epoch, acc / cfg.steps_per_epoch, heldout(model)});
  }
  model.freeze();
  out.heldout_l1 = out.curve.back().heldout_l1;
  out.model = std::move(model);
  return out;
}

}  // namespace

Trained<InvDynModel> train_inverse_dynamics(const data::Dataset& ds, const DynTrainConfig& cfg) {
  validate(cfg);
  auto [train_ds, held_ds] = data::split_by_trajectory(ds, 1.0 - cfg.heldout_fraction);
  data::TransitionTable train = data::flatten(train_ds);
  data::TransitionTable held = data::flatten(held_ds);
  if (held.size() == 0) held = train;
  Rng init = make_rng(cfg.seed, "invdyn_init", static_cast<std::uint64_t>(ds.domain));
  Rng rng = make_rng(cfg.seed, "invdyn_batches", static_cast<std::uint64_t>(ds.domain));
  std::normal_distribution<double> normal;
  auto loss = [&](Tape& tape, InvDynModel& m, const data::Batch& b, Rng& r) {
    Tensor noise(b.actions.rows(), b.actions.cols());
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(r);
    return invdyn_loss(tape, m, b, noise);
  };
  auto heldout = [&](const InvDynModel& m) { return invdyn_heldout_l1(m, held); };
  return fit(InvDynModel::uniform(ds.domain, train, cfg.hidden, init), train, cfg, rng, "inverse dynamics", loss,
             heldout);
}

Trained<FwdDynModel> train_forward_dynamics(const data::Dataset& ds, const DynTrainConfig& cfg) {
  validate(cfg);
  auto [train_ds, held_ds] = data::split_by_trajectory(ds, 1.0 - cfg.heldout_fraction);
  data::TransitionTable train = data::flatten(train_ds);
  data::TransitionTable held = data::flatten(held_ds);
  if (held.size() == 0) held = train;
  Rng init = make_rng(cfg.seed, "fwddyn_init", static_cast<std::uint64_t>(ds.domain));
  Rng rng = make_rng(cfg.seed, "fwddyn_batches", static_cast<std::uint64_t>(ds.domain));
  auto loss = [](Tape& tape, FwdDynModel& m, const data::Batch& b, Rng&) { return fwddyn_loss(tape, m, b); };
  auto heldout = [&](const FwdDynModel& m) { return fwddyn_heldout_l1(m, held); };
  return fit(FwdDynModel::uniform(ds.domain, train, cfg.hidden, init), train, cfg, rng, "forward dynamics", loss,
             heldout);
}

void save_model(const InvDynModel& m, const std::filesystem::path& path) {
  diff::Archive ar;
  ar.set_attr("kind", "invdyn");
  m.store(ar);
  ar.save(path);
}

void save_model(const FwdDynModel& m, const std::filesystem::path& path) {
  diff::Archive ar;
  ar.set_attr("kind", "fwddyn");
  m.store(ar);
  ar.save(path);
}

InvDynModel load_invdyn(const std::filesystem::path& path) {
  diff::Archive ar = diff::Archive::load(path);
  if (!ar.has_attr("kind") || ar.attr("kind") != "invdyn") throw ParseError(path.string() + " is not an inverse-dynamics snapshot");
  return InvDynModel::restore(ar);
}

FwdDynModel load_fwddyn(const std::filesystem::path& path) {
  diff::Archive ar = diff::Archive::load(path);
  if (!ar.has_attr("kind") || ar.attr("kind") != "fwddyn") throw ParseError(path.string() + " is not a forward-model snapshot");
  return FwdDynModel::restore(ar);
}

}  // namespace ecc::invdyn
