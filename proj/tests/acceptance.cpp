// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//
//   ecc_acceptance [--only 1,3,11] [--out DIR]
//
// Criteria 5-9 share one linear_lift campaign (every method, seeds 0-4) plus
// a dataset-size sweep; its reports are written under DIR.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "ecc/cli/cli.hpp"
#include "ecc/diffcore/gradcheck.hpp"
#include "ecc/envs/domain_pair.hpp"
#include "ecc/error.hpp"
#include "ecc/mappings/mappings.hpp"
#include "ecc/transfer/pipeline.hpp"
#include "ecc/transfer/transfer.hpp"

using namespace ecc;
namespace fs = std::filesystem;
using data::Domain;
using mappings::Method;

namespace tol {
constexpr int kGradNetworks = 20;
constexpr double kGradRelError = 1e-3;
constexpr int kKlPairs = 50;
constexpr int kKlMaxDim = 8;
constexpr int kKlSamples = 100000;
constexpr double kKlRelError = 0.01;
constexpr double kMorphismReturn = 0.02;
constexpr double kMorphismAlignment = 1e-6;
constexpr double kIdentityCycle = 0.05;
constexpr double kIdentityNormalized = 0.95;
constexpr double kLiftNormalized = 0.70;
constexpr double kLiftStateError = 0.1;
constexpr double kMinute = 60.0;
constexpr int kSeeds = 5;
constexpr int kTrajectories = 1000;
constexpr int kEpisodes = 10;
constexpr int kHeldOutTrajectories = 20;
constexpr std::uint64_t kHeldOutSeed = 424242;
const std::vector<int> kSizes{100, 300, 1000, 3000};
}  // namespace tol

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) { return transfer::median(std::move(v)); }

// -------------------------------------------------------------- shared data

data::TransitionTable held_out_states(const envs::Env& env, Domain d) {
  return data::flatten(data::collect_random(env, d, tol::kHeldOutTrajectories, 200, tol::kHeldOutSeed));
}

// mean |F(x) - M x|_1 / dim over held-out source states
double state_map_error(const mappings::MappingSet& set, const envs::GroundTruth& gt, const data::TransitionTable& x) {
  diff::Tensor fx = set.F.apply(x.states);
  diff::Tensor truth = x.states * gt.state_lift.transpose();
  return (fx - truth).cwiseAbs().sum() / (double(fx.rows()) * fx.cols());
}

double cycle_error(const mappings::MappingSet& set, const data::TransitionTable& x) {
  diff::Tensor back = set.G.apply(set.F.apply(x.states));
  return (back - x.states).cwiseAbs().sum() / (double(back.rows()) * back.cols());
}

struct Reference {
  double oracle = 0.0, random = 0.0;
};

Reference references(const envs::DomainPair& pair, std::uint64_t seed) {
  return {transfer::oracle_rollout(pair, tol::kEpisodes, seed).mean(),
          transfer::random_policy_rollout(pair, tol::kEpisodes, seed).mean()};
}

// Phase-boundary audit of the freezing contract.
struct ScheduleAudit {
  int boundaries = 0;
  int violations = 0;
  bool maps_moved_p1 = false, disc_moved_p1 = false, maps_moved_p2 = false, actions_moved_p2 = false;

  mappings::PhaseHook hook() {
    return [this](int phase, const mappings::MappingSet& b, const mappings::MappingSet& a) {
      ++boundaries;
      using mappings::equal_bytes;
      if (phase == 1) {
        if (!equal_bytes(b.H, a.H) || !equal_bytes(b.P, a.P)) ++violations;
        maps_moved_p1 = maps_moved_p1 || !equal_bytes(b.F, a.F);
        disc_moved_p1 = disc_moved_p1 || !equal_bytes(b.DX, a.DX);
      } else {
        if (!equal_bytes(b.DX, a.DX) || !equal_bytes(b.DY, a.DY)) ++violations;
        maps_moved_p2 = maps_moved_p2 || !equal_bytes(b.G, a.G);
        actions_moved_p2 = actions_moved_p2 || !equal_bytes(b.H, a.H);
      }
    };
  }
  bool non_vacuous() const { return maps_moved_p1 && disc_moved_p1 && maps_moved_p2 && actions_moved_p2; }
};

struct SeedRun {
  mappings::MappingSet set;
  transfer::TransferResult result;
  double normalized = 0.0;
  std::optional<transfer::AlignmentCurve> curve;
};

struct Campaign {
  envs::DomainPair pair = envs::make_domain_pair("linear_lift");
  std::map<std::string, std::vector<SeedRun>> runs;
  std::vector<Reference> refs;
  ScheduleAudit audit;
  bool dynamics_untouched = false;
  double seconds = 0.0;
  std::optional<transfer::SweepResult> sweep;
  double sweep_seconds = 0.0;

  void run(const fs::path& out) {
    auto t0 = Clock::now();
    auto [src, tgt] = transfer::collect_pair(pair, tol::kTrajectories, 200, 0);
    transfer::DynamicsModels dyn = transfer::train_dynamics(src, tgt, invdyn::DynTrainConfig{}, true);
    const diff::Mlp inv_s = dyn.source.net(), inv_t = dyn.target.net(), fwd = dyn.target_forward->net();
    for (int s = 0; s < tol::kSeeds; ++s) refs.push_back(references(pair, s));
    for (const std::string name : {"random", "cyclegan", "dcc", "ecc", "ecc_nosym"}) {
      for (int s = 0; s < tol::kSeeds; ++s) {
        mappings::TrainConfig cfg;
        cfg.method = mappings::method_from_string(name);
        cfg.seed = s;
        mappings::TrainResult tr;
        if (cfg.method == Method::Ecc || cfg.method == Method::EccNoSym) {
          tr = mappings::train_mappings(src, tgt, dyn.source, dyn.target, cfg, audit.hook());
        } else {
          tr = transfer::train_method(src, tgt, dyn, cfg);
        }
        SeedRun r{tr.set, transfer::transfer_rollout(pair, transfer::translator(tr.set), tol::kEpisodes, s), 0.0, {}};
        r.normalized = transfer::normalized_return(r.result.mean(), refs[s].oracle, refs[s].random);
        r.curve = transfer::alignment_error_curve(pair, transfer::translator(tr.set), tol::kEpisodes, s);
        std::cout << "  trained " << name << " seed " << s << ": return " << r.result.mean() << ", normalized "
                  << r.normalized << "\n"
                  << std::flush;
        runs[name].push_back(std::move(r));
      }
    }
    dynamics_untouched = dyn.source.net().equal_bytes(inv_s) && dyn.target.net().equal_bytes(inv_t) &&
                         dyn.target_forward->net().equal_bytes(fwd);
    seconds = seconds_since(t0);
    write_reports(out);
  }

  void run_sweep(const fs::path& out) {
    auto t0 = Clock::now();
    transfer::PipelineConfig pc;
    pc.episodes = tol::kEpisodes;
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < tol::kSeeds; ++s) seeds.push_back(s);
    sweep = transfer::dataset_size_sweep(pair, tol::kSizes, seeds, pc);
    transfer::write_size_sweep_csv(*sweep, out / "size_sweep.csv");
    sweep_seconds = seconds_since(t0);
  }

  transfer::MethodResult column(const std::string& name) const {
    transfer::MethodResult m;
    m.method = name;
    const auto& v = runs.at(name);
    for (std::size_t s = 0; s < v.size(); ++s) m.seeds.push_back({s, v[s].result});
    return m;
  }

  void write_reports(const fs::path& out) const {
    transfer::SuiteRow row{pair.name, {}};
    for (const auto& [name, v] : runs) row.columns[name] = column(name);
    transfer::MethodResult oracle;
    oracle.method = "oracle";
    for (int s = 0; s < tol::kSeeds; ++s) {
      oracle.seeds.push_back({std::uint64_t(s), transfer::oracle_rollout(pair, tol::kEpisodes, s)});
    }
    row.columns["oracle"] = oracle;
    transfer::write_performance_csv({row}, out / "performance.csv");
    transfer::write_runs_csv({row}, out / "runs.csv");
    std::vector<transfer::CurveEntry> curves;
    for (const auto& [name, v] : runs) {
      for (std::size_t s = 0; s < v.size(); ++s) curves.push_back({name, s, *v[s].curve});
    }
    transfer::write_alignment_csv(curves, out / "alignment_curve.csv");
    transfer::write_ablation_csv(transfer::ablate_symmetry(column("ecc"), column("ecc_nosym")), out / "ablation.csv");
  }

  std::vector<double> seed_returns(const std::string& name) const {
    std::vector<double> v;
    for (const auto& r : runs.at(name)) v.push_back(r.result.mean());
    return v;
  }
};

// -------------------------------------------------------------- criteria

Outcome gradient_correctness() {
  auto pair = envs::make_domain_pair("linear_lift");
  auto src = data::flatten(data::collect_random(*pair.source, Domain::Source, 2, 20, 1));
  auto tgt = data::flatten(data::collect_random(*pair.target, Domain::Target, 2, 20, 2));
  auto stats = mappings::DomainStats::fit(src, tgt);
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  for (int n = 0; n < tol::kGradNetworks; ++n) {
    Rng rng(1000 + n);
    int hidden = std::uniform_int_distribution<int>(3, 8)(rng);
    std::size_t rows = std::uniform_int_distribution<std::size_t>(3, 8)(rng);
    mappings::MappingSet set = mappings::init_mapping_set(Method::Dcc, stats, hidden, rng);
    mappings::MappingSet cg = mappings::init_mapping_set(Method::CycleGan, stats, hidden, rng);
    mappings::Maps m = mappings::view(set);
    auto inv_s = invdyn::InvDynModel::uniform(Domain::Source, src, hidden, rng);
    auto inv_t = invdyn::InvDynModel::uniform(Domain::Target, tgt, hidden, rng);
    auto fwd = invdyn::FwdDynModel::uniform(Domain::Target, tgt, hidden, rng);
    Rng ra = make_rng(n, "grad_src"), rb = make_rng(n, "grad_tgt");
    data::Batch sb = data::sample_batch(src, rows, ra), tb = data::sample_batch(tgt, rows, rb);
    diff::Tensor noise = diff::Tensor::Random(rows, 2);

    std::vector<diff::Parameter*> gen = set.state_map_params(), disc = set.discriminator_params();
    for (auto* p : set.action_map_params()) gen.push_back(p);
    mappings::LossWeights w{0.7, 1.3};
    using mappings::Tape;
    std::vector<std::tuple<std::string, diff::LossBuilder, std::vector<diff::Parameter*>>> losses{
        {"adversarial_gen",
         [&](Tape& t) {
           auto a = mappings::adversarial_losses(t, m, sb, tb);
           return t.add(a.gen_G, a.gen_F);
         },
         gen},
        {"adversarial_disc",
         [&](Tape& t) {
           auto a = mappings::adversarial_losses(t, m, sb, tb);
           return t.add(a.disc_X, a.disc_Y);
         },
         disc},
        {"cycle", [&](Tape& t) { return mappings::cycle_loss(t, m, sb, tb); }, gen},
        {"effect",
         [&](Tape& t) {
           auto e = mappings::effect_losses(t, m, mappings::view(inv_s), mappings::view(inv_t), sb, tb);
           return t.add(e.fh, e.gp);
         },
         gen},
        {"full",
         [&](Tape& t) {
           auto a = mappings::adversarial_losses(t, m, sb, tb);
           auto e = mappings::effect_losses(t, m, mappings::view(inv_s), mappings::view(inv_t), sb, tb);
           return mappings::full_loss(t, w, a.gen_G, a.gen_F, mappings::cycle_loss(t, m, sb, tb), e.fh, e.gp);
         },
         gen},
        {"action_cycle", [&](Tape& t) { return mappings::action_cycle_loss(t, m, sb, tb); }, gen},
        {"dynamics", [&](Tape& t) { return mappings::dynamics_consistency_loss(t, m, fwd, sb); }, gen},
        {"cyclegan_cycle",
         [&, cm = mappings::view(cg)](Tape& t) { return mappings::cycle_loss(t, cm, sb, tb); },
         cg.state_map_params()},
        {"invdyn", [&](Tape& t) { return invdyn::invdyn_loss(t, inv_s, sb, noise); }, inv_s.net().parameters()},
        {"fwddyn", [&](Tape& t) { return invdyn::fwddyn_loss(t, fwd, tb); }, fwd.net().parameters()},
    };
    for (auto& [name, fn, params] : losses) {
      auto rep = diff::finite_diff_check(fn, params);
      ++checks;
      if (std::isnan(rep.max_rel_error) || rep.max_rel_error > worst) {
        worst = rep.max_rel_error;
        worst_name = name + "/" + rep.worst_parameter;
      }
    }
  }
  bool ok = worst < tol::kGradRelError;
  return {ok, fmt("%d loss checks on %d networks, worst relative error %.3g at %s (tol %.0e)", checks,
                  tol::kGradNetworks, worst, worst_name.c_str(), tol::kGradRelError)};
}

Outcome gaussian_kl_oracle() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> ls(-1.0, 1.0);
  std::uniform_int_distribution<int> dims(1, tol::kKlMaxDim);
  double worst = 0.0;
  for (int k = 0; k < tol::kKlPairs; ++k) {
    int d = dims(rng);
    diff::DiagGaussian p{diff::Vector(d), diff::Vector(d)}, q{diff::Vector(d), diff::Vector(d)};
    for (int j = 0; j < d; ++j) {
      p.mean[j] = normal(rng);
      q.mean[j] = normal(rng);
      p.log_std[j] = ls(rng);
      q.log_std[j] = ls(rng);
    }
    double acc = 0.0;
    for (int n = 0; n < tol::kKlSamples; ++n) {
      double lr = 0.0;
      for (int j = 0; j < d; ++j) {
        double z = p.mean[j] + std::exp(p.log_std[j]) * normal(rng);
        double zp = (z - p.mean[j]) / std::exp(p.log_std[j]);
        double zq = (z - q.mean[j]) / std::exp(q.log_std[j]);
        lr += (-p.log_std[j] - 0.5 * zp * zp) - (-q.log_std[j] - 0.5 * zq * zq);
      }
      acc += lr;
    }
    double mc = acc / tol::kKlSamples;
    double kl = diff::gaussian_kl(p, q);
    worst = std::max(worst, std::abs(kl - mc) / std::abs(mc));
  }
  return {worst < tol::kKlRelError, fmt("%d pairs, %d samples each, worst relative error %.4f (tol %.2f)",
                                        tol::kKlPairs, tol::kKlSamples, worst, tol::kKlRelError)};
}

Outcome morphism_sanity() {
  auto pair = envs::make_domain_pair("linear_lift");
  auto tr = transfer::translator(*pair.truth);
  double r = transfer::transfer_rollout(pair, tr, tol::kEpisodes, 0).mean();
  double o = transfer::oracle_rollout(pair, tol::kEpisodes, 0).mean();
  transfer::AlignmentCurve c = transfer::alignment_error_curve(pair, tr, tol::kEpisodes, 0);
  double worst = 0.0;
  for (const auto* v : {&c.raw, &c.running_mean, &c.smoothed}) {
    for (double e : *v) worst = std::max(worst, e);
  }
  double rel = std::abs(r - o) / std::abs(o);
  return {rel <= tol::kMorphismReturn && worst < tol::kMorphismAlignment,
          fmt("return %.3f vs oracle %.3f (rel %.2g, tol %.2f); max alignment error %.2g over %zu steps (tol %.0e)", r,
              o, rel, tol::kMorphismReturn, worst, c.raw.size(), tol::kMorphismAlignment)};
}

Outcome identity_recovery() {
  auto pair = envs::make_domain_pair("identity");
  auto [src, tgt] = transfer::collect_pair(pair, tol::kTrajectories, 200, 0);
  transfer::DynamicsModels dyn = transfer::train_dynamics(src, tgt, invdyn::DynTrainConfig{}, false);
  mappings::TrainConfig cfg;
  auto res = transfer::train_method(src, tgt, dyn, cfg);
  double cyc = cycle_error(res.set, held_out_states(*pair.source, Domain::Source));
  Reference ref = references(pair, 0);
  double r = transfer::transfer_rollout(pair, transfer::translator(res.set), tol::kEpisodes, 0).mean();
  double z = transfer::normalized_return(r, ref.oracle, ref.random);
  return {cyc < tol::kIdentityCycle && z >= tol::kIdentityNormalized,
          fmt("held-out |G(F(x)) - x|_1/dim %.4f (tol %.2f); return %.2f, oracle %.2f, random %.2f, normalized %.3f "
              "(tol %.2f)",
              cyc, tol::kIdentityCycle, r, ref.oracle, ref.random, z, tol::kIdentityNormalized)};
}

Outcome lift_transfer(const Campaign& c) {
  auto held = held_out_states(*c.pair.source, Domain::Source);
  std::vector<double> z, err;
  for (const auto& r : c.runs.at("ecc")) {
    z.push_back(r.normalized);
    err.push_back(state_map_error(r.set, *c.pair.truth, held));
  }
  double mz = median(z), me = median(err);
  std::ostringstream per;
  for (std::size_t s = 0; s < z.size(); ++s) per << (s ? " " : "") << fmt("%.2f/%.2f", z[s], err[s]);
  return {mz >= tol::kLiftNormalized && me < tol::kLiftStateError && c.seconds < 60 * tol::kMinute,
          fmt("median normalized return %.3f (tol %.2f); median held-out |F(x) - F*(x)|_1/dim %.3f (tol %.2f); "
              "per seed normalized/error [%s]; campaign %.0f s",
              mz, tol::kLiftNormalized, me, tol::kLiftStateError, per.str().c_str(), c.seconds)};
}

Outcome compounding_error(const Campaign& c) {
  auto stats = [&](const std::string& m) {
    std::vector<double> ratio, last;
    for (const auto& r : c.runs.at(m)) {
      const auto& rm = r.curve->running_mean;
      ratio.push_back(rm[199] / rm[19]);
      last.push_back(rm[199]);
    }
    return std::pair{median(ratio), median(last)};
  };
  auto [re, le] = stats("ecc");
  auto [rd, ld] = stats("dcc");
  return {re <= rd && le <= ld, fmt("median ratio e(200)/e(20): ecc %.3f, dcc %.3f; median final error: ecc %.3f, "
                                    "dcc %.3f",
                                    re, rd, le, ld)};
}

Outcome method_ordering(const Campaign& c) {
  double r = median(c.seed_returns("random")), g = median(c.seed_returns("cyclegan"));
  double d = median(c.seed_returns("dcc")), e = median(c.seed_returns("ecc"));
  return {r <= g && g <= d && d <= e,
          fmt("median returns random %.2f, cyclegan %.2f, dcc %.2f, ecc %.2f (need non-decreasing)", r, g, d, e)};
}

Outcome symmetry_ablation(const Campaign& c) {
  auto a = transfer::ablate_symmetry(c.column("ecc"), c.column("ecc_nosym"));
  double md = a.median_difference();
  return {md > 0.0 && a.std_ecc() <= a.std_nosym(),
          fmt("median(ecc - ecc_nosym) %.2f (need > 0); std ecc %.2f, std ecc_nosym %.2f", md, a.std_ecc(),
              a.std_nosym())};
}

Outcome size_trend(const Campaign& c) {
  const auto& s = *c.sweep;
  std::vector<double> m;
  std::ostringstream per;
  for (int n : tol::kSizes) {
    m.push_back(s.median_return(n));
    per << (per.tellp() ? " " : "") << n << ":" << fmt("%.2f", m.back());
  }
  // sizes are 100, 300, 1000, 3000
  bool rising = m[0] <= m[1] && m[1] <= m[2];
  bool plateau = (m[3] - m[2]) < (m[2] - m[0]);
  return {rising && plateau, fmt("median returns %s; sweep %.0f s", per.str().c_str(), c.sweep_seconds)};
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args) {
  std::vector<const char*> argv{"ecc"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  int code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

Outcome determinism(const fs::path& work) {
  const std::vector<std::string> base{"--pair", "linear_lift", "--n", "50", "--epochs", "3", "--seeds", "0,1",
                                      "--invdyn_epochs", "5", "--methods", "ecc,dcc"};
  std::vector<fs::path> roots{work / "det_a", work / "det_b"};
  int bad_codes = 0;
  for (int pass = 0; pass < 3; ++pass) {
    fs::path root = roots[pass == 1];
    if (pass < 2) fs::remove_all(root);
    auto with = [&](std::vector<std::string> a) {
      a.insert(a.end(), base.begin(), base.end());
      a.push_back("--output");
      a.push_back(root.string());
      return a;
    };
    bad_codes += cli(with({"collect"})) != 0;
    bad_codes += cli(with({"train", "--method", "ecc"})) != 0;
    bad_codes += cli(with({"train", "--method", "dcc"})) != 0;
    bad_codes += cli(with({"eval"})) != 0;
  }
  int files = 0, differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(roots[0])) {
    if (!e.is_regular_file()) continue;
    fs::path rel = fs::relative(e.path(), roots[0]);
    std::string a = read_all(e.path()), b = read_all(roots[1] / rel);
    if (rel.filename() == "config.resolved.txt") {
      a.replace(a.find(roots[0].string()), roots[0].string().size(), "");
      b.replace(b.find(roots[1].string()), roots[1].string().size(), "");
    }
    ++files;
    differing += a != b;
  }
  // persistence round trips
  fs::path models = roots[0] / "models" / "linear_lift";
  fs::path rt = work / "roundtrip";
  fs::create_directories(rt);
  int round_trip_failures = 0;
  auto ds = data::load_dataset(roots[0] / "data" / "linear_lift" / "target.jsonl");
  data::save_dataset(ds, rt / "target.jsonl");
  round_trip_failures += read_all(rt / "target.jsonl") != read_all(roots[0] / "data" / "linear_lift" / "target.jsonl");
  round_trip_failures += !(data::load_dataset(rt / "target.jsonl") == ds);
  auto inv = invdyn::load_invdyn(models / "invdyn_source.bin");
  invdyn::save_model(inv, rt / "inv.bin");
  round_trip_failures += read_all(rt / "inv.bin") != read_all(models / "invdyn_source.bin");
  auto fwd = invdyn::load_fwddyn(models / "fwddyn_target.bin");
  invdyn::save_model(fwd, rt / "fwd.bin");
  round_trip_failures += read_all(rt / "fwd.bin") != read_all(models / "fwddyn_target.bin");
  for (const char* m : {"ecc_seed0.bin", "dcc_seed1.bin"}) {
    auto set = mappings::load_mapping_set(models / m);
    mappings::save_mapping_set(set, rt / m);
    round_trip_failures += read_all(rt / m) != read_all(models / m);
  }
  bool ok = bad_codes == 0 && differing == 0 && files > 0 && round_trip_failures == 0;
  return {ok, fmt("%d output files compared across 3 runs, %d differ, %d nonzero exits; %d round-trip mismatches",
                  files, differing, bad_codes, round_trip_failures)};
}

Outcome schedule_invariants(const Campaign& c) {
  const auto& a = c.audit;
  bool ok = a.violations == 0 && a.boundaries > 0 && a.non_vacuous() && c.dynamics_untouched;
  return {ok, fmt("%d phase boundaries audited over %d ecc/ecc_nosym runs, %d violations; trained parts moved: %s; "
                  "dynamics models byte-identical after all training: %s",
                  a.boundaries, 2 * tol::kSeeds, a.violations, a.non_vacuous() ? "yes" : "no",
                  c.dynamics_untouched ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  std::string out = "acceptance_out";
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--out", out, "directory for campaign reports and scratch files");
  CLI11_PARSE(app, argc, argv);
  std::set<int> want(only.begin(), only.end());
  auto selected = [&](int k) { return want.empty() || want.count(k); };
  fs::path work = out;
  fs::create_directories(work);

  Campaign campaign;

  struct Entry {
    int id;
    const char* name;
    double limit_s;  // runtime bound, 0 if none
    std::function<Outcome()> fn;
  };
  std::vector<Entry> entries{
      {1, "gradient correctness", tol::kMinute, gradient_correctness},
      {2, "gaussian kl oracle", tol::kMinute, gaussian_kl_oracle},
      {3, "morphism sanity", tol::kMinute, morphism_sanity},
      {4, "identity recovery", 15 * tol::kMinute, identity_recovery},
      {5, "linear_lift transfer", 0, [&] { return lift_transfer(campaign); }},
      {6, "compounding error", 0, [&] { return compounding_error(campaign); }},
      {7, "method ordering", 0, [&] { return method_ordering(campaign); }},
      {8, "symmetry ablation", 0, [&] { return symmetry_ablation(campaign); }},
      {9, "dataset size trend", 0, [&] { return size_trend(campaign); }},
      {10, "determinism and persistence", 0, [&] { return determinism(work); }},
      {11, "schedule invariants", 0, [&] { return schedule_invariants(campaign); }},
  };

  int failed = 0;
  std::vector<std::string> lines;
  for (const auto& e : entries) {
    if (!selected(e.id)) continue;
    bool uses_campaign = (e.id >= 5 && e.id <= 8) || e.id == 11;
    if (uses_campaign && campaign.runs.empty()) {
      std::cout << "running linear_lift campaign (5 methods x " << tol::kSeeds << " seeds)\n" << std::flush;
      campaign.run(work);
    }
    if (e.id == 9 && !campaign.sweep) {
      std::cout << "running dataset-size sweep\n" << std::flush;
      campaign.run_sweep(work);
    }
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    double secs = seconds_since(t0);
    if (e.limit_s > 0 && secs >= e.limit_s) {
      o.pass = false;
      o.detail += fmt("; runtime %.1f s over the %.0f s bound", secs, e.limit_s);
    }
    std::string line = fmt("[%s] criterion %2d %-28s %s (%.1f s)", o.pass ? "PASS" : "FAIL", e.id, e.name,
                           o.detail.c_str(), secs);
    std::cout << line << "\n" << std::flush;
    lines.push_back(line);
    failed += !o.pass;
  }
  std::cout << "\nsummary\n";
  for (const auto& l : lines) std::cout << l << "\n";
  std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : "all criteria passed\n");
  return failed ? 1 : 0;
}
