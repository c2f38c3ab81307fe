#include "ecc/mappings/mappings.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ecc/diffcore/adam.hpp"
#include "ecc/error.hpp"

namespace ecc::mappings {

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"ecc", "ecc_nosym", "dcc", "cyclegan", "random"};
  return names;
}

std::string to_string(Method m) { return method_names()[static_cast<std::size_t>(m)]; }

Method method_from_string(const std::string& s) {
  const auto& names = method_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == s) return static_cast<Method>(i);
  }
  throw UsageError("unknown method '" + s + "' (choices: ecc, ecc_nosym, dcc, cyclegan, random)");
}

// ------------------------------------------------------------------ networks

Var StateMap::apply(Tape& tape, Var x) { return out.denormalize(tape, net.forward(tape, in.normalize(tape, x))); }

Tensor StateMap::apply(const Tensor& x) const { return out.denormalize(net.infer(in.normalize(x))); }

GaussianVar ActionMap::apply(Tape& tape, Var s, Var a) {
  Var in = tape.concat_cols(state_in.normalize(tape, s), action_in.normalize(tape, a));
  return diff::gaussian_head(tape, net.forward(tape, in), out_dim);
}

std::pair<Tensor, Tensor> ActionMap::apply(const Tensor& s, const Tensor& a) const {
  Tensor in(s.rows(), s.cols() + a.cols());
  in << state_in.normalize(s), action_in.normalize(a);
  return diff::gaussian_head(net.infer(in), out_dim);
}

Var Discriminator::logit(Tape& tape, Var x) { return net.forward(tape, in.normalize(tape, x)); }

Var Discriminator::logit_detached(Tape& tape, Var x) const { return net.forward_constant(tape, in.normalize(tape, x)); }

Tensor Discriminator::logit(const Tensor& x) const { return net.infer(in.normalize(x)); }

namespace {

void append(std::vector<diff::Parameter*>& out, Mlp& net) {
  for (auto* p : net.parameters()) out.push_back(p);
}

Standardizer concat(const Standardizer& a, const Standardizer& b) {
  Standardizer s;
  s.mean.resize(1, a.dim() + b.dim());
  s.std.resize(1, a.dim() + b.dim());
  s.mean << a.mean, b.mean;
  s.std << a.std, b.std;
  return s;
}

Vector first_row(const Tensor& t) { return t.row(0).transpose(); }

}  // namespace

std::vector<diff::Parameter*> MappingSet::state_map_params() {
  std::vector<diff::Parameter*> ps;
  append(ps, F.net);
  append(ps, G.net);
  return ps;
}

std::vector<diff::Parameter*> MappingSet::action_map_params() {
  std::vector<diff::Parameter*> ps;
  append(ps, H.net);
  if (has_P()) append(ps, P.net);
  return ps;
}

std::vector<diff::Parameter*> MappingSet::discriminator_params() {
  std::vector<diff::Parameter*> ps;
  append(ps, DX.net);
  append(ps, DY.net);
  if (has_action_discriminators()) {
    append(ps, DA.net);
    append(ps, DU.net);
  }
  return ps;
}

Vector MappingSet::map_state(const Vector& x) const { return first_row(F.apply(Tensor(diff::row(x)))); }

Vector MappingSet::unmap_state(const Vector& y) const { return first_row(G.apply(Tensor(diff::row(y)))); }

DiagGaussian MappingSet::map_action(const Vector& x, const Vector& a) const {
  auto [mean, log_std] = H.apply(Tensor(diff::row(x)), Tensor(diff::row(a)));
  return {first_row(mean), first_row(log_std)};
}

void MappingSet::store(diff::Archive& ar) const {
  ar.set_attr("method", to_string(method));
  ar.set_attr("dims", std::to_string(source_state_dim) + " " + std::to_string(source_action_dim) + " " +
                          std::to_string(target_state_dim) + " " + std::to_string(target_action_dim));
  ar.put_standardizer("F.in", F.in);
  ar.put_standardizer("F.out", F.out);
  ar.put_mlp(F.net);
  ar.put_standardizer("G.in", G.in);
  ar.put_standardizer("G.out", G.out);
  ar.put_mlp(G.net);
  ar.put_standardizer("H.state_in", H.state_in);
  ar.put_standardizer("H.action_in", H.action_in);
  ar.put_mlp(H.net);
  if (has_P()) {
    ar.put_standardizer("P.state_in", P.state_in);
    ar.put_standardizer("P.action_in", P.action_in);
    ar.put_mlp(P.net);
  }
  ar.put_standardizer("DX.in", DX.in);
  ar.put_mlp(DX.net);
  ar.put_standardizer("DY.in", DY.in);
  ar.put_mlp(DY.net);
  if (has_action_discriminators()) {
    ar.put_standardizer("DA.in", DA.in);
    ar.put_mlp(DA.net);
    ar.put_standardizer("DU.in", DU.in);
    ar.put_mlp(DU.net);
  }
}

MappingSet MappingSet::restore(const diff::Archive& ar) {
  MappingSet s;
  s.method = method_from_string(ar.attr("method"));
  std::istringstream dims(ar.attr("dims"));
  if (!(dims >> s.source_state_dim >> s.source_action_dim >> s.target_state_dim >> s.target_action_dim)) {
    throw ParseError("mapping snapshot has a malformed dims attribute");
  }
  s.F = {ar.get_standardizer("F.in"), ar.get_standardizer("F.out"), ar.get_mlp("F")};
  s.G = {ar.get_standardizer("G.in"), ar.get_standardizer("G.out"), ar.get_mlp("G")};
  s.H = {ar.get_standardizer("H.state_in"), ar.get_standardizer("H.action_in"), ar.get_mlp("H"),
         s.target_action_dim};
  if (ar.has("P.l0.W")) {
    s.P = {ar.get_standardizer("P.state_in"), ar.get_standardizer("P.action_in"), ar.get_mlp("P"),
           s.source_action_dim};
  }
  s.DX = {ar.get_standardizer("DX.in"), ar.get_mlp("DX")};
  s.DY = {ar.get_standardizer("DY.in"), ar.get_mlp("DY")};
  if (ar.has("DA.l0.W")) {
    s.DA = {ar.get_standardizer("DA.in"), ar.get_mlp("DA")};
    s.DU = {ar.get_standardizer("DU.in"), ar.get_mlp("DU")};
  }
  if (s.F.net.in_dim() != s.source_state_dim || s.F.net.out_dim() != s.target_state_dim ||
      s.G.net.in_dim() != s.target_state_dim || s.G.net.out_dim() != s.source_state_dim ||
      s.H.net.out_dim() != 2 * s.target_action_dim) {
    throw DimensionError("mapping snapshot networks disagree with its dims attribute");
  }
  return s;
}

DomainStats DomainStats::fit(const data::TransitionTable& src, const data::TransitionTable& tgt) {
  return {Standardizer::fit(src.states), Standardizer::fit(src.actions), Standardizer::fit(tgt.states),
          Standardizer::fit(tgt.actions)};
}

MappingSet init_mapping_set(Method method, const DomainStats& st, int hidden, Rng& rng) {
  MappingSet s;
  s.method = method;
  s.source_state_dim = st.source_state.dim();
  s.source_action_dim = st.source_action.dim();
  s.target_state_dim = st.target_state.dim();
  s.target_action_dim = st.target_action.dim();
  const int sx = s.source_state_dim, ax = s.source_action_dim, sy = s.target_state_dim, ay = s.target_action_dim;
  const int h = hidden;
  s.F = {st.source_state, st.target_state, Mlp::uniform("F", {sx, h, h, sy}, rng)};
  s.G = {st.target_state, st.source_state, Mlp::uniform("G", {sy, h, h, sx}, rng)};
  s.H = {st.source_state, st.source_action, Mlp::uniform("H", {sx + ax, h, h, 2 * ay}, rng), ay};
  if (method != Method::EccNoSym) {
    s.P = {st.target_state, st.target_action, Mlp::uniform("P", {sy + ay, h, h, 2 * ax}, rng), ax};
  }
  s.DX = {st.source_state, Mlp::uniform("DX", {sx, h, h, 1}, rng)};
  s.DY = {st.target_state, Mlp::uniform("DY", {sy, h, h, 1}, rng)};
  if (method == Method::Dcc) {
    s.DA = {concat(st.source_state, st.source_action), Mlp::uniform("DA", {sx + ax, h, h, 1}, rng)};
    s.DU = {concat(st.target_state, st.target_action), Mlp::uniform("DU", {sy + ay, h, h, 1}, rng)};
  } else if (method == Method::CycleGan) {
    s.DA = {st.source_action, Mlp::uniform("DA", {ax, h, h, 1}, rng)};
    s.DU = {st.target_action, Mlp::uniform("DU", {ay, h, h, 1}, rng)};
  }
  return s;
}

// ------------------------------------------------------------------ views

Maps view(MappingSet& set) {
  Maps m;
  m.F = [&set](Tape& t, Var x) { return set.F.apply(t, x); };
  m.G = [&set](Tape& t, Var y) { return set.G.apply(t, y); };
  m.H = [&set](Tape& t, Var x, Var a) { return set.H.apply(t, x, a); };
  if (set.has_P()) m.P = [&set](Tape& t, Var y, Var u) { return set.P.apply(t, y, u); };
  m.DX = [&set](Tape& t, Var x) { return set.DX.logit(t, x); };
  m.DY = [&set](Tape& t, Var y) { return set.DY.logit(t, y); };
  m.DX_gen = [&set](Tape& t, Var x) { return set.DX.logit_detached(t, x); };
  m.DY_gen = [&set](Tape& t, Var y) { return set.DY.logit_detached(t, y); };
  return m;
}

InvDynFn view(invdyn::InvDynModel& model) {
  return [&model](Tape& t, Var s, Var s_next) { return model.predict(t, s, s_next); };
}

StateFn linear_state_fn(const envs::Matrix& m) {
  Tensor w = m;
  return [w](Tape& t, Var x) { return t.linear(x, t.constant(w)); };
}

ActionFn linear_action_fn(const envs::Matrix& m, double log_std) {
  Tensor w = m;
  return [w, log_std](Tape& t, Var, Var a) {
    Var mean = t.linear(a, t.constant(w));
    Tensor ls = Tensor::Constant(t.value(a).rows(), w.rows(), log_std);
    return GaussianVar{mean, t.constant(std::move(ls))};
  };
}

// ------------------------------------------------------------------ losses

namespace {

struct Translated {
  Var x, y, fx, gy;
};

Translated translate(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt) {
  Translated tr;
  tr.x = tape.constant(src.states);
  tr.y = tape.constant(tgt.states);
  tr.fx = maps.F(tape, tr.x);
  tr.gy = maps.G(tape, tr.y);
  return tr;
}

Var bce_mean(Tape& tape, Var logit, double label) { return tape.mean(tape.bce_logits(logit, label)); }

// Real -> 1, detached fake -> 0; generator term with discriminator parameters
// held constant.
std::pair<Var, Var> gan_pair(Tape& tape, const LogitFn& disc, const LogitFn& disc_gen, Var real, Var fake) {
  Var gen = bce_mean(tape, disc_gen(tape, fake), 1.0);
  Var detached = tape.constant(tape.value(fake));
  Var d = tape.add(bce_mean(tape, disc(tape, real), 1.0), bce_mean(tape, disc(tape, detached), 0.0));
  return {gen, d};
}

AdversarialLosses adversarial_from(Tape& tape, const Maps& maps, const Translated& tr) {
  AdversarialLosses out;
  std::tie(out.gen_G, out.disc_X) = gan_pair(tape, maps.DX, maps.DX_gen, tr.x, tr.gy);
  std::tie(out.gen_F, out.disc_Y) = gan_pair(tape, maps.DY, maps.DY_gen, tr.y, tr.fx);
  return out;
}

Var l1_rows(Tape& tape, Var a, Var b) { return tape.mean_rows(tape.abs(tape.sub(a, b))); }

Var cycle_from(Tape& tape, const Maps& maps, const Translated& tr) {
  return tape.add(l1_rows(tape, maps.G(tape, tr.fx), tr.x), l1_rows(tape, maps.F(tape, tr.gy), tr.y));
}

}  // namespace

AdversarialLosses adversarial_losses(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt) {
  return adversarial_from(tape, maps, translate(tape, maps, src, tgt));
}

Var cycle_loss(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt) {
  return cycle_from(tape, maps, translate(tape, maps, src, tgt));
}

EffectLosses effect_losses(Tape& tape, const Maps& maps, const InvDynFn& invdyn_src, const InvDynFn& invdyn_tgt,
                           const data::Batch& src, const data::Batch& tgt, bool symmetric) {
  EffectLosses out;
  {
    Var x = tape.constant(src.states), x2 = tape.constant(src.next_states), a = tape.constant(src.actions);
    GaussianVar p = invdyn_tgt(tape, maps.F(tape, x), maps.F(tape, x2));
    GaussianVar q = maps.H(tape, x, a);
    out.fh = tape.mean(diff::gaussian_kl(tape, p, q));
  }
  if (symmetric) {
    if (!maps.P) throw UsageError("effect_losses: symmetric form needs P");
    Var y = tape.constant(tgt.states), y2 = tape.constant(tgt.next_states), u = tape.constant(tgt.actions);
    GaussianVar p = invdyn_src(tape, maps.G(tape, y), maps.G(tape, y2));
    GaussianVar q = maps.P(tape, y, u);
    out.gp = tape.mean(diff::gaussian_kl(tape, p, q));
  }
  return out;
}

Var full_loss(Tape& tape, const LossWeights& w, Var gen_G, Var gen_F, Var cycle, Var eff_fh, Var eff_gp) {
  std::vector<std::pair<double, Var>> terms;
  for (Var v : {gen_G, gen_F, cycle}) {
    if (v.valid() && w.lambda1 != 0.0) terms.emplace_back(w.lambda1, v);
  }
  for (Var v : {eff_fh, eff_gp}) {
    if (v.valid() && w.lambda2 != 0.0) terms.emplace_back(w.lambda2, v);
  }
  if (terms.empty()) return tape.constant(Tensor::Zero(1, 1));
  return tape.weighted_sum(terms);
}

Var action_cycle_loss(Tape& tape, const Maps& maps, const data::Batch& src, const data::Batch& tgt) {
  if (!maps.P) throw UsageError("action_cycle_loss needs P");
  Var x = tape.constant(src.states), a = tape.constant(src.actions);
  Var y = tape.constant(tgt.states), u = tape.constant(tgt.actions);
  Var u_hat = maps.H(tape, x, a).mean;
  Var a_rec = maps.P(tape, maps.F(tape, x), u_hat).mean;
  Var a_hat = maps.P(tape, y, u).mean;
  Var u_rec = maps.H(tape, maps.G(tape, y), a_hat).mean;
  return tape.add(l1_rows(tape, a_rec, a), l1_rows(tape, u_rec, u));
}

Var dynamics_consistency_loss(Tape& tape, const Maps& maps, invdyn::FwdDynModel& fwd_tgt, const data::Batch& src) {
  Var x = tape.constant(src.states), x2 = tape.constant(src.next_states), a = tape.constant(src.actions);
  Var fx = maps.F(tape, x);
  Var pred = fwd_tgt.predict(tape, fx, maps.H(tape, x, a).mean);
  return l1_rows(tape, maps.F(tape, x2), pred);
}

// ------------------------------------------------------------------ training

void TrainConfig::validate() const {
  if (!(weights.lambda1 >= 0.0) || !(weights.lambda2 >= 0.0)) throw ConfigError("lambda1 and lambda2 must be >= 0");
  if (epochs < 1 || phase1_epochs < 1 || phase2_epochs < 1) throw ConfigError("e, e1 and e2 must be >= 1");
  if (steps_per_epoch < 1 || batch_size < 1 || hidden < 1) {
    throw ConfigError("steps_per_epoch, batch_size and hidden must be >= 1");
  }
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(dcc_dynamics_weight >= 0.0)) throw ConfigError("dcc_dynamics_weight must be >= 0");
}

void PhaseLog::write_csv(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "step,phase,loss_adv_x,loss_adv_y,loss_cyc,loss_eff_fh,loss_eff_gp,epoch,loss_disc_x,loss_disc_y,"
         "loss_act_cyc,loss_dyn,loss_act_adv\n";
  auto cell = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << *v;
  };
  for (const auto& r : records) {
    out << r.step << ',' << r.phase;
    cell(r.adv_x);
    cell(r.adv_y);
    cell(r.cyc);
    cell(r.eff_fh);
    cell(r.eff_gp);
    out << ',' << r.epoch;
    cell(r.disc_x);
    cell(r.disc_y);
    cell(r.act_cyc);
    cell(r.dyn);
    cell(r.act_adv);
    out << '\n';
  }
}

bool equal_bytes(const StateMap& a, const StateMap& b) { return a.net.equal_bytes(b.net); }
bool equal_bytes(const ActionMap& a, const ActionMap& b) { return a.net.equal_bytes(b.net); }
bool equal_bytes(const Discriminator& a, const Discriminator& b) { return a.net.equal_bytes(b.net); }

namespace {

struct Harness {
  data::TransitionTable src, tgt;
  MappingSet set;
  Rng rng_src, rng_tgt;
  const TrainConfig& cfg;
  PhaseLog log;
  int step = 0;

  Harness(const data::Dataset& s, const data::Dataset& t, const TrainConfig& c)
      : src(data::flatten(s)),
        tgt(data::flatten(t)),
        rng_src(make_rng(c.seed, "maps_batch_source")),
        rng_tgt(make_rng(c.seed, "maps_batch_target")),
        cfg(c) {
    if (s.domain != data::Domain::Source || t.domain != data::Domain::Target) {
      throw UsageError("mapping training needs a source dataset and a target dataset");
    }
    Rng init = make_rng(c.seed, "maps_init");
    set = init_mapping_set(c.method, DomainStats::fit(src, tgt), c.hidden, init);
  }

  std::pair<data::Batch, data::Batch> batches() {
    auto b = static_cast<std::size_t>(cfg.batch_size);
    data::Batch sb = data::sample_batch(src, b, rng_src);
    data::Batch tb = data::sample_batch(tgt, b, rng_tgt);
    return {std::move(sb), std::move(tb)};
  }

  // Records finite values; throws with the log so far otherwise.
  std::optional<double> value(const Tape& tape, Var v, const char* what) {
    if (!v.valid()) return std::nullopt;
    double x = tape.scalar(v);
    if (!std::isfinite(x)) {
      throw DivergenceError(std::string("non-finite ") + what + " at step " + std::to_string(step) + " (method " +
                                to_string(cfg.method) + ")",
                            log);
    }
    return x;
  }
};

void require_unchanged(bool same, const std::string& what) {
  if (!same) throw TrainingError("schedule violation: " + what + " changed during a phase that freezes it");
}

}  // namespace

TrainResult train_mappings(const data::Dataset& src, const data::Dataset& tgt, invdyn::InvDynModel& invdyn_src,
                           invdyn::InvDynModel& invdyn_tgt, const TrainConfig& cfg, const PhaseHook& hook,
                           const MappingSet* warm_start) {
  cfg.validate();
  if (cfg.method != Method::Ecc && cfg.method != Method::EccNoSym) {
    throw UsageError("train_mappings runs ecc or ecc_nosym; got " + to_string(cfg.method));
  }
  if (!invdyn_src.frozen() || !invdyn_tgt.frozen()) throw UsageError("inverse-dynamics models must be frozen");
  if (invdyn_src.domain() != data::Domain::Source || invdyn_tgt.domain() != data::Domain::Target) {
    throw UsageError("inverse-dynamics models are attached to the wrong domains");
  }
  const bool symmetric = cfg.method == Method::Ecc;
  Harness hs(src, tgt, cfg);
  if (warm_start) {
    if (warm_start->method != cfg.method) throw UsageError("warm start was built for another method");
    hs.set = *warm_start;
  }
  MappingSet& set = hs.set;
  const Mlp inv_src_before = invdyn_src.net(), inv_tgt_before = invdyn_tgt.net();

  Maps maps = view(set);
  InvDynFn inv_src = view(invdyn_src), inv_tgt = view(invdyn_tgt);
  const double lr_g = cfg.lr_gen;
  // Each phase keeps its own moment estimates for F and G: the two objectives
  // have gradient scales orders of magnitude apart.
  diff::Adam opt_fg1(set.state_map_params(), {lr_g}), opt_fg2(set.state_map_params(), {lr_g});
  diff::Adam opt_hp(set.action_map_params(), {lr_g});
  diff::Adam opt_d(set.discriminator_params(), {cfg.lr_disc});
  LossWeights phase1_w{cfg.weights.lambda1, 0.0}, phase2_w{0.0, cfg.weights.lambda2};
  int epoch = 0;

  auto set_frozen = [&](bool actions, bool discs) {
    set.H.net.set_frozen(actions);
    if (set.has_P()) set.P.net.set_frozen(actions);
    set.DX.net.set_frozen(discs);
    set.DY.net.set_frozen(discs);
  };

  for (int outer = 0; outer < cfg.epochs; ++outer) {
    // Phase 1: adversarial + cycle.
    MappingSet before = set;
    set_frozen(true, false);
    for (int e = 0; e < cfg.phase1_epochs; ++e, ++epoch) {
      for (int s = 0; s < cfg.steps_per_epoch; ++s, ++hs.step) {
        auto [sb, tb] = hs.batches();
        Tape tape;
        Translated tr = translate(tape, maps, sb, tb);
        AdversarialLosses adv = adversarial_from(tape, maps, tr);
        Var cyc = cycle_from(tape, maps, tr);
        Var gen = full_loss(tape, phase1_w, adv.gen_G, adv.gen_F, cyc, {}, {});
        Var total = tape.add(gen, tape.add(adv.disc_X, adv.disc_Y));
        LogRecord r;
        r.step = hs.step;
        r.epoch = epoch;
        r.phase = 1;
        r.adv_x = hs.value(tape, adv.gen_G, "loss_adv_x");
        r.adv_y = hs.value(tape, adv.gen_F, "loss_adv_y");
        r.cyc = hs.value(tape, cyc, "loss_cyc");
        r.disc_x = hs.value(tape, adv.disc_X, "loss_disc_x");
        r.disc_y = hs.value(tape, adv.disc_Y, "loss_disc_y");
        opt_fg1.zero_grad();
        opt_d.zero_grad();
        tape.backward(total);
        opt_fg1.step();
        opt_d.step();
        hs.log.records.push_back(r);
      }
    }
    require_unchanged(equal_bytes(before.H, set.H), "H");
    if (set.has_P()) require_unchanged(equal_bytes(before.P, set.P), "P");
    if (hook) hook(1, before, set);

    // Phase 2: effect cycle-consistency.
    before = set;
    set_frozen(false, true);
    for (int e = 0; e < cfg.phase2_epochs; ++e, ++epoch) {
      for (int s = 0; s < cfg.steps_per_epoch; ++s, ++hs.step) {
        auto [sb, tb] = hs.batches();
        Tape tape;
        EffectLosses eff = effect_losses(tape, maps, inv_src, inv_tgt, sb, tb, symmetric);
        Var total = full_loss(tape, phase2_w, {}, {}, {}, eff.fh, eff.gp);
        LogRecord r;
        r.step = hs.step;
        r.epoch = epoch;
        r.phase = 2;
        r.eff_fh = hs.value(tape, eff.fh, "loss_eff_fh");
        r.eff_gp = hs.value(tape, eff.gp, "loss_eff_gp");
        opt_fg2.zero_grad();
        opt_hp.zero_grad();
        tape.backward(total);
        opt_fg2.step();
        opt_hp.step();
        hs.log.records.push_back(r);
      }
    }
    require_unchanged(equal_bytes(before.DX, set.DX), "D_X");
    require_unchanged(equal_bytes(before.DY, set.DY), "D_Y");
    if (hook) hook(2, before, set);
  }
  set_frozen(false, false);
  require_unchanged(invdyn_src.net().equal_bytes(inv_src_before), "source inverse dynamics");
  require_unchanged(invdyn_tgt.net().equal_bytes(inv_tgt_before), "target inverse dynamics");
  return {std::move(hs.set), std::move(hs.log)};
}

namespace {

// Joint generator / discriminator updates shared by the two baselines.
template <class ExtraTerms>
TrainResult train_joint(const data::Dataset& src, const data::Dataset& tgt, const TrainConfig& cfg,
                        ExtraTerms extra) {
  cfg.validate();
  Harness hs(src, tgt, cfg);
  MappingSet& set = hs.set;
  Maps maps = view(set);
  std::vector<diff::Parameter*> gen_params = set.state_map_params();
  for (auto* p : set.action_map_params()) gen_params.push_back(p);
  diff::Adam opt_gen(gen_params, {cfg.lr_gen});
  diff::Adam opt_d(set.discriminator_params(), {cfg.lr_disc});
  const int total_epochs = cfg.epochs * (cfg.phase1_epochs + cfg.phase2_epochs);
  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    for (int s = 0; s < cfg.steps_per_epoch; ++s, ++hs.step) {
      auto [sb, tb] = hs.batches();
      Tape tape;
      Translated tr = translate(tape, maps, sb, tb);
      AdversarialLosses adv = adversarial_from(tape, maps, tr);
      Var cyc = cycle_from(tape, maps, tr);
      LogRecord r;
      r.step = hs.step;
      r.epoch = epoch;
      r.phase = 0;
      r.adv_x = hs.value(tape, adv.gen_G, "loss_adv_x");
      r.adv_y = hs.value(tape, adv.gen_F, "loss_adv_y");
      r.cyc = hs.value(tape, cyc, "loss_cyc");
      r.disc_x = hs.value(tape, adv.disc_X, "loss_disc_x");
      r.disc_y = hs.value(tape, adv.disc_Y, "loss_disc_y");
      auto [gen_extra, disc_extra] = extra(tape, set, maps, tr, sb, tb, r, hs);
      Var gen = tape.add(full_loss(tape, {cfg.weights.lambda1, 0.0}, adv.gen_G, adv.gen_F, cyc, {}, {}), gen_extra);
      Var total = tape.add(gen, tape.add(tape.add(adv.disc_X, adv.disc_Y), disc_extra));
      opt_gen.zero_grad();
      opt_d.zero_grad();
      tape.backward(total);
      opt_gen.step();
      opt_d.step();
      hs.log.records.push_back(r);
    }
  }
  return {std::move(hs.set), std::move(hs.log)};
}

// Action adversarial terms: fakes are (translated state, translated action)
// for dcc and raw translated actions for cyclegan.
std::pair<Var, Var> action_gan(Tape& tape, MappingSet& set, Var real_x, Var real_y, Var fake_x, Var fake_y) {
  LogitFn da = [&set](Tape& t, Var v) { return set.DA.logit(t, v); };
  LogitFn du = [&set](Tape& t, Var v) { return set.DU.logit(t, v); };
  LogitFn da_gen = [&set](Tape& t, Var v) { return set.DA.logit_detached(t, v); };
  LogitFn du_gen = [&set](Tape& t, Var v) { return set.DU.logit_detached(t, v); };
  auto [gen_p, disc_a] = gan_pair(tape, da, da_gen, real_x, fake_x);
  auto [gen_h, disc_u] = gan_pair(tape, du, du_gen, real_y, fake_y);
  return {tape.add(gen_p, gen_h), tape.add(disc_a, disc_u)};
}

}  // namespace

TrainResult train_dcc_baseline(const data::Dataset& src, const data::Dataset& tgt, invdyn::FwdDynModel& fwd_tgt,
                               const TrainConfig& cfg) {
  if (cfg.method != Method::Dcc) throw UsageError("train_dcc_baseline needs method dcc");
  if (!fwd_tgt.frozen()) throw UsageError("the forward model must be frozen");
  if (fwd_tgt.domain() != data::Domain::Target) throw UsageError("the forward model must belong to the target");
  const Mlp fwd_before = fwd_tgt.net();
  auto extra = [&](Tape& tape, MappingSet& set, const Maps& maps, const Translated& tr, const data::Batch& sb,
                   const data::Batch& tb, LogRecord& r, Harness& hs) {
    Var a = tape.constant(sb.actions), u = tape.constant(tb.actions);
    Var x2 = tape.constant(sb.next_states);
    Var u_hat = maps.H(tape, tr.x, a).mean;
    Var a_hat = maps.P(tape, tr.y, u).mean;
    Var act_cyc = tape.add(l1_rows(tape, maps.P(tape, tr.fx, u_hat).mean, a),
                           l1_rows(tape, maps.H(tape, tr.gy, a_hat).mean, u));
    Var dyn = l1_rows(tape, maps.F(tape, x2), fwd_tgt.predict(tape, tr.fx, u_hat));
    auto [gen_act, disc_act] = action_gan(tape, set, tape.concat_cols(tr.x, a), tape.concat_cols(tr.y, u),
                                          tape.concat_cols(tr.gy, a_hat), tape.concat_cols(tr.fx, u_hat));
    r.act_cyc = hs.value(tape, act_cyc, "loss_act_cyc");
    r.dyn = hs.value(tape, dyn, "loss_dyn");
    r.act_adv = hs.value(tape, gen_act, "loss_act_adv");
    Var gen = tape.weighted_sum({{1.0, act_cyc}, {cfg.dcc_dynamics_weight, dyn}, {1.0, gen_act}});
    return std::pair{gen, disc_act};
  };
  TrainResult res = train_joint(src, tgt, cfg, extra);
  require_unchanged(fwd_tgt.net().equal_bytes(fwd_before), "target forward model");
  return res;
}

TrainResult train_cyclegan_baseline(const data::Dataset& src, const data::Dataset& tgt, const TrainConfig& cfg) {
  if (cfg.method != Method::CycleGan) throw UsageError("train_cyclegan_baseline needs method cyclegan");
  auto extra = [&](Tape& tape, MappingSet& set, const Maps& maps, const Translated& tr, const data::Batch& sb,
                   const data::Batch& tb, LogRecord& r, Harness& hs) {
    Var a = tape.constant(sb.actions), u = tape.constant(tb.actions);
    Var u_hat = maps.H(tape, tr.x, a).mean;
    Var a_hat = maps.P(tape, tr.y, u).mean;
    Var act_cyc = tape.add(l1_rows(tape, maps.P(tape, tr.fx, u_hat).mean, a),
                           l1_rows(tape, maps.H(tape, tr.gy, a_hat).mean, u));
    auto [gen_act, disc_act] = action_gan(tape, set, a, u, a_hat, u_hat);
    r.act_cyc = hs.value(tape, act_cyc, "loss_act_cyc");
    r.act_adv = hs.value(tape, gen_act, "loss_act_adv");
    return std::pair{tape.add(act_cyc, gen_act), disc_act};
  };
  return train_joint(src, tgt, cfg, extra);
}

MappingSet random_mapping(const data::Dataset& src, const data::Dataset& tgt, const TrainConfig& cfg) {
  cfg.validate();
  Rng init = make_rng(cfg.seed, "maps_init");
  return init_mapping_set(Method::Random, DomainStats::fit(data::flatten(src), data::flatten(tgt)), cfg.hidden, init);
}

void save_mapping_set(const MappingSet& set, const std::filesystem::path& path) {
  diff::Archive ar;
  ar.set_attr("kind", "mapping_set");
  set.store(ar);
  ar.save(path);
}

MappingSet load_mapping_set(const std::filesystem::path& path) {
  diff::Archive ar = diff::Archive::load(path);
  if (!ar.has_attr("kind") || ar.attr("kind") != "mapping_set") {
    throw ParseError(path.string() + " is not a mapping snapshot");
  }
  return MappingSet::restore(ar);
}

}  // namespace ecc::mappings
