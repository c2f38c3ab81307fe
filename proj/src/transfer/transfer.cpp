#include "ecc/transfer/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "ecc/error.hpp"

namespace ecc::transfer {

Translator translator(const mappings::MappingSet& set) {
  // Copy so the translator stays valid independent of the caller's set.
  auto shared = std::make_shared<mappings::MappingSet>(set);
  return {[shared](const Vector& y) { return shared->unmap_state(y); },
          [shared](const Vector& x, const Vector& a) { return shared->map_action(x, a); }};
}

Translator translator(const envs::GroundTruth& truth) {
  return {[truth](const Vector& y) { return truth.G(y); },
          [truth](const Vector& x, const Vector& a) {
            Vector m = truth.H(x, a);
            return diff::DiagGaussian{m, Vector::Constant(m.size(), diff::kLogStdMin)};
          }};
}

double TransferResult::mean() const {
  if (returns.empty()) return 0.0;
  return std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
}

double TransferResult::stddev() const { return transfer::stddev(returns); }

namespace {

int resolve_horizon(const envs::Env& env, int horizon) {
  if (horizon <= 0) return env.spec().horizon;
  if (horizon > env.spec().horizon) throw UsageError("horizon exceeds the environment horizon");
  return horizon;
}

void check_translator(const envs::DomainPair& pair, const Translator& tr) {
  if (!tr.G || !tr.H) throw UsageError("translator needs both G and H");
  Vector y = Vector::Zero(pair.target->state_dim());
  Vector x = tr.G(y);
  if (x.size() != pair.source->state_dim()) throw UsageError("G output does not match the source state dim");
  auto u = tr.H(x, Vector::Zero(pair.source->action_dim()));
  if (u.mean.size() != pair.target->action_dim()) throw UsageError("H output does not match the target action dim");
}

Vector translate_action(const Translator& tr, const Vector& x, const Vector& a, ActionMode mode, Rng& rng) {
  diff::DiagGaussian u = tr.H(x, a);
  if (mode == ActionMode::Mean) return u.mean;
  std::normal_distribution<double> n01;
  Vector eps(u.mean.size());
  for (auto& e : eps) e = n01(rng);
  return diff::reparam_sample(u, eps);
}

// Runs one transferred episode; `on_step(y, x)` sees each observation and its translation.
template <class OnStep>
double transferred_episode(const envs::DomainPair& pair, const Translator& tr, const Policy& expert, int horizon,
                           std::uint64_t seed, int episode, ActionMode mode, OnStep&& on_step) {
  const envs::Env& target = *pair.target;
  Rng reset_rng = make_rng(seed, "eval_reset", static_cast<std::uint64_t>(episode));
  Rng sample_rng = make_rng(seed, "eval_sample", static_cast<std::uint64_t>(episode));
  envs::EnvState s = target.reset(reset_rng);
  double ret = 0.0;
  for (int t = 0; t < horizon; ++t) {
    Vector x = tr.G(s.x);
    on_step(s.x, x);
    Vector u = translate_action(tr, x, expert(x), mode, sample_rng);
    envs::StepResult r = target.step(s, u);
    ret += r.reward;
    s = std::move(r.next);
  }
  return ret;
}

template <class ActionOf>
TransferResult native_rollout(const envs::DomainPair& pair, int episodes, std::uint64_t seed, int horizon,
                              const std::string& tag, ActionOf&& action_of) {
  if (episodes < 1) throw UsageError("episodes must be >= 1");
  const envs::Env& target = *pair.target;
  horizon = resolve_horizon(target, horizon);
  TransferResult res{pair.name, tag, {}};
  for (int e = 0; e < episodes; ++e) {
    Rng reset_rng = make_rng(seed, "eval_reset", static_cast<std::uint64_t>(e));
    Rng act_rng = make_rng(seed, "eval_sample", static_cast<std::uint64_t>(e));
    envs::EnvState s = target.reset(reset_rng);
    double ret = 0.0;
    for (int t = 0; t < horizon; ++t) {
      envs::StepResult r = target.step(s, action_of(s.x, act_rng));
      ret += r.reward;
      s = std::move(r.next);
    }
    res.returns.push_back(ret);
  }
  return res;
}

}  // namespace

TransferResult transfer_rollout(const envs::DomainPair& pair, const Translator& tr, const Policy& expert, int episodes,
                                std::uint64_t seed, ActionMode mode, int horizon) {
  if (episodes < 1) throw UsageError("episodes must be >= 1");
  check_translator(pair, tr);
  horizon = resolve_horizon(*pair.target, horizon);
  TransferResult res{pair.name, "", {}};
  for (int e = 0; e < episodes; ++e) {
    double ret = transferred_episode(pair, tr, expert, horizon, seed, e, mode, [](const Vector&, const Vector&) {});
    if (!std::isfinite(ret)) throw TrainingError("non-finite transferred return");
    res.returns.push_back(ret);
  }
  return res;
}

TransferResult transfer_rollout(const envs::DomainPair& pair, const Translator& tr, int episodes, std::uint64_t seed,
                                ActionMode mode, int horizon) {
  auto src = pair.source;
  return transfer_rollout(
      pair, tr, [src](const Vector& x) { return src->expert_action(x); }, episodes, seed, mode, horizon);
}

TransferResult oracle_rollout(const envs::DomainPair& pair, int episodes, std::uint64_t seed, int horizon) {
  const envs::Env& target = *pair.target;
  return native_rollout(pair, episodes, seed, horizon, "oracle",
                        [&](const Vector& y, Rng&) { return target.expert_action(y); });
}

TransferResult random_policy_rollout(const envs::DomainPair& pair, int episodes, std::uint64_t seed, int horizon) {
  const envs::Env& target = *pair.target;
  return native_rollout(pair, episodes, seed, horizon, "random_policy",
                        [&](const Vector&, Rng& rng) { return target.uniform_action(rng); });
}

double normalized_return(double r, double oracle, double random) {
  double span = oracle - random;
  if (!(std::abs(span) > 0.0)) throw UsageError("oracle and random returns coincide");
  return (r - random) / span;
}

std::vector<double> centered_moving_average(const std::vector<double>& v, int window) {
  if (window < 1 || window % 2 == 0) throw UsageError("smoothing window must be odd and >= 1");
  const int n = static_cast<int>(v.size());
  const int half = window / 2;
  std::vector<double> out(v.size());
  for (int t = 0; t < n; ++t) {
    int h = std::min({half, t, n - 1 - t});
    double s = 0.0;
    for (int k = t - h; k <= t + h; ++k) s += v[k];
    out[t] = s / (2 * h + 1);
  }
  return out;
}

AlignmentCurve alignment_error_curve(const envs::DomainPair& pair, const Translator& tr, int episodes,
                                     std::uint64_t seed, ActionMode mode, int window, int horizon) {
  if (!pair.has_shared_coords()) {
    throw UnsupportedMetricError("domain pair '" + pair.name + "' has no shared coordinates");
  }
  if (episodes < 1) throw UsageError("episodes must be >= 1");
  check_translator(pair, tr);
  horizon = resolve_horizon(*pair.target, horizon);
  AlignmentCurve c;
  c.window = window;
  c.raw.assign(horizon, 0.0);
  auto src = pair.source;
  Policy expert = [src](const Vector& x) { return src->expert_action(x); };
  for (int e = 0; e < episodes; ++e) {
    int t = 0;
    transferred_episode(pair, tr, expert, horizon, seed, e, mode, [&](const Vector& y, const Vector& x) {
      Eigen::Vector2d ct = *pair.target->shared_coords(y);
      Eigen::Vector2d cs = *pair.source->shared_coords(x);
      c.raw[t++] += (ct - cs).lpNorm<1>();
    });
  }
  for (double& r : c.raw) r /= episodes;
  c.running_mean.resize(c.raw.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < c.raw.size(); ++t) {
    acc += c.raw[t];
    c.running_mean[t] = acc / static_cast<double>(t + 1);
  }
  c.smoothed = centered_moving_average(c.running_mean, window);
  return c;
}

// ------------------------------------------------------------------ suite

double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of an empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string format_cell(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f±%.2f", mean, sd);
  return buf;
}

namespace {

std::vector<double> all_returns(const MethodResult& m) {
  std::vector<double> all;
  for (const auto& s : m.seeds) all.insert(all.end(), s.result.returns.begin(), s.result.returns.end());
  return all;
}

}  // namespace

double MethodResult::mean() const {
  auto all = all_returns(*this);
  return all.empty() ? 0.0 : std::accumulate(all.begin(), all.end(), 0.0) / static_cast<double>(all.size());
}

double MethodResult::stddev() const { return transfer::stddev(all_returns(*this)); }

std::vector<double> MethodResult::seed_means() const {
  std::vector<double> out;
  for (const auto& s : seeds) out.push_back(s.result.mean());
  return out;
}

std::string MethodResult::cell() const {
  if (!complete() || seeds.empty()) return kGapMarker;
  return format_cell(mean(), stddev());
}

bool SuiteRow::complete() const {
  return std::all_of(columns.begin(), columns.end(), [](const auto& kv) { return kv.second.complete(); });
}

SuiteRow evaluate_suite(const envs::DomainPair& pair, const std::vector<std::string>& methods,
                        const std::vector<std::uint64_t>& seeds, int episodes, const SnapshotLoader& load,
                        ActionMode mode) {
  SuiteRow row;
  row.pair = pair.name;
  for (const auto& method : methods) {
    MethodResult mr;
    mr.method = method;
    for (std::uint64_t seed : seeds) {
      if (method == "oracle") {
        mr.seeds.push_back({seed, oracle_rollout(pair, episodes, seed)});
        continue;
      }
      if (method == "random_policy") {
        mr.seeds.push_back({seed, random_policy_rollout(pair, episodes, seed)});
        continue;
      }
      std::optional<mappings::MappingSet> set = load ? load(method, seed) : std::nullopt;
      if (!set) {
        mr.missing.push_back(seed);
        continue;
      }
      TransferResult r = transfer_rollout(pair, translator(*set), episodes, seed, mode);
      r.method = method;
      mr.seeds.push_back({seed, std::move(r)});
    }
    row.columns[method] = std::move(mr);
  }
  return row;
}

// ------------------------------------------------------------------ ablation

std::vector<double> AblationResult::differences() const {
  std::vector<double> d;
  for (std::size_t i = 0; i < ecc.size(); ++i) d.push_back(ecc[i] - ecc_nosym[i]);
  return d;
}

double AblationResult::median_difference() const { return median(differences()); }
double AblationResult::std_ecc() const { return stddev(ecc); }
double AblationResult::std_nosym() const { return stddev(ecc_nosym); }

AblationResult ablate_symmetry(const MethodResult& ecc, const MethodResult& ecc_nosym) {
  if (!ecc.complete() || !ecc_nosym.complete()) throw MissingInputError("ablation needs every ecc and ecc_nosym seed");
  AblationResult r;
  for (const auto& s : ecc.seeds) {
    auto it = std::find_if(ecc_nosym.seeds.begin(), ecc_nosym.seeds.end(),
                           [&](const SeedResult& o) { return o.seed == s.seed; });
    if (it == ecc_nosym.seeds.end()) {
      throw MissingInputError("ecc_nosym has no run for seed " + std::to_string(s.seed));
    }
    r.seeds.push_back(s.seed);
    r.ecc.push_back(s.result.mean());
    r.ecc_nosym.push_back(it->result.mean());
  }
  if (r.seeds.empty()) throw MissingInputError("ablation has no paired seeds");
  return r;
}

// ------------------------------------------------------------------ reports

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  return out;
}

}  // namespace

void write_performance_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "pair";
  for (const auto& c : suite_columns()) out << ',' << c;
  out << '\n';
  for (const auto& row : rows) {
    out << row.pair;
    for (const auto& c : suite_columns()) {
      auto it = row.columns.find(c);
      out << ',' << (it == row.columns.end() ? std::string(kGapMarker) : it->second.cell());
    }
    out << '\n';
  }
}

void write_runs_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "pair,method,seed,mean_return,std_return,episodes\n";
  for (const auto& row : rows) {
    for (const auto& [method, mr] : row.columns) {
      for (const auto& s : mr.seeds) {
        out << row.pair << ',' << method << ',' << s.seed << ',' << s.result.mean() << ',' << s.result.stddev()
            << ',' << s.result.returns.size() << '\n';
      }
      for (auto seed : mr.missing) {
        out << row.pair << ',' << method << ',' << seed << ',' << kGapMarker << ',' << kGapMarker << ",0\n";
      }
    }
  }
}

void write_alignment_csv(const std::vector<CurveEntry>& curves, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "t,method,seed,error\n";
  for (const auto& c : curves) {
    for (std::size_t t = 0; t < c.curve.smoothed.size(); ++t) {
      out << t << ',' << c.method << ',' << c.seed << ',' << c.curve.smoothed[t] << '\n';
    }
  }
}

void write_ablation_csv(const AblationResult& r, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "seed,ecc,ecc_nosym,difference\n";
  auto d = r.differences();
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    out << r.seeds[i] << ',' << r.ecc[i] << ',' << r.ecc_nosym[i] << ',' << d[i] << '\n';
  }
}

}  // namespace ecc::transfer
