#include "ecc/data/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "ecc/error.hpp"

namespace ecc::data {

using nlohmann::json;

std::string to_string(Domain d) { return d == Domain::Source ? "source" : "target"; }

Domain domain_from_string(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw UsageError("unknown domain '" + s + "' (expected source|target)");
}

namespace {

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

bool operator==(const Transition& a, const Transition& b) {
  return same_bits(a.state, b.state) && same_bits(a.action, b.action) && same_bits(a.next_state, b.next_state);
}

std::size_t Dataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

std::uint64_t collection_seed(std::uint64_t seed, Domain domain) {
  return derive_seed(seed, domain == Domain::Source ? "collect_source" : "collect_target");
}

Dataset collect_random(const envs::Env& env, Domain domain, int n_traj, int horizon, std::uint64_t seed,
                       int first) {
  if (n_traj < 1) throw UsageError("collect_random: n_traj must be >= 1");
  if (horizon < 1 || horizon > env.spec().horizon) {
    throw UsageError("collect_random: horizon must be in [1, " + std::to_string(env.spec().horizon) + "]");
  }
  Dataset ds;
  ds.domain = domain;
  ds.state_dim = env.state_dim();
  ds.action_dim = env.action_dim();
  ds.provenance = Provenance{env.spec().name, "random", seed, n_traj, horizon, first};
  ds.trajectories.reserve(n_traj);
  for (int i = 0; i < n_traj; ++i) {
    Rng rng = make_rng(seed, "collect", static_cast<std::uint64_t>(first + i));
    envs::EnvState s = env.reset(rng);
    Trajectory traj;
    traj.reserve(horizon);
    for (int t = 0; t < horizon; ++t) {
      Vector a = env.uniform_action(rng);
      envs::StepResult r = env.step(s, a);
      traj.push_back(Transition{s.x, a, r.next.x});
      s = std::move(r.next);
    }
    ds.trajectories.push_back(std::move(traj));
  }
  return ds;
}

TransitionTable flatten(const Dataset& ds) {
  std::size_t n = ds.transition_count();
  TransitionTable t;
  t.domain = ds.domain;
  t.states.resize(static_cast<Eigen::Index>(n), ds.state_dim);
  t.actions.resize(static_cast<Eigen::Index>(n), ds.action_dim);
  t.next_states.resize(static_cast<Eigen::Index>(n), ds.state_dim);
  Eigen::Index r = 0;
  for (const auto& traj : ds.trajectories) {
    for (const auto& tr : traj) {
      t.states.row(r) = tr.state.transpose();
      t.actions.row(r) = tr.action.transpose();
      t.next_states.row(r) = tr.next_state.transpose();
      ++r;
    }
  }
  return t;
}

std::vector<std::size_t> sample_indices(std::size_t table_size, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw UsageError("sample_batch: batch_size must be >= 1");
  if (table_size == 0) throw UsageError("sample_batch: dataset is empty");
  std::uniform_int_distribution<std::size_t> pick(0, table_size - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch gather(const TransitionTable& table, const std::vector<std::size_t>& indices) {
  Batch b;
  auto n = static_cast<Eigen::Index>(indices.size());
  b.states.resize(n, table.states.cols());
  b.actions.resize(n, table.actions.cols());
  b.next_states.resize(n, table.next_states.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    auto i = static_cast<Eigen::Index>(indices[r]);
    b.states.row(r) = table.states.row(i);
    b.actions.row(r) = table.actions.row(i);
    b.next_states.row(r) = table.next_states.row(i);
  }
  return b;
}

Batch sample_batch(const TransitionTable& table, std::size_t batch_size, Rng& rng) {
  return gather(table, sample_indices(table.size(), batch_size, rng));
}

std::vector<Transition> sample_batch(const Dataset& ds, std::size_t batch_size, Rng& rng) {
  std::vector<const Transition*> all;
  all.reserve(ds.transition_count());
  for (const auto& traj : ds.trajectories) {
    for (const auto& tr : traj) all.push_back(&tr);
  }
  std::vector<Transition> out;
  for (std::size_t i : sample_indices(all.size(), batch_size, rng)) out.push_back(*all[i]);
  return out;
}

std::pair<Dataset, Dataset> split_by_trajectory(const Dataset& ds, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw UsageError("split fraction must be in (0, 1]");
  auto n = ds.trajectories.size();
  auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n)));
  Dataset a = ds, b = ds;
  a.trajectories.assign(ds.trajectories.begin(), ds.trajectories.begin() + static_cast<std::ptrdiff_t>(n_train));
  b.trajectories.assign(ds.trajectories.begin() + static_cast<std::ptrdiff_t>(n_train), ds.trajectories.end());
  a.provenance.trajectory_count = static_cast<int>(a.trajectories.size());
  b.provenance.trajectory_count = static_cast<int>(b.trajectories.size());
  b.provenance.first_trajectory = ds.provenance.first_trajectory + static_cast<int>(n_train);
  return {std::move(a), std::move(b)};
}

namespace {

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_field(const json& rec, const char* key, int expected, std::size_t line) {
  if (!rec.contains(key) || !rec[key].is_array()) throw ParseError(std::string("missing array '") + key + "'", line);
  const json& arr = rec[key];
  if (static_cast<int>(arr.size()) != expected) {
    throw DimensionError(std::string("'") + key + "' has length " + std::to_string(arr.size()) +
                             " but the header declares " + std::to_string(expected),
                         line);
  }
  Vector v(expected);
  for (int i = 0; i < expected; ++i) {
    if (!arr[i].is_number()) throw ParseError(std::string("non-numeric entry in '") + key + "'", line);
    v[i] = arr[i].get<double>();
    if (!std::isfinite(v[i])) throw ParseError(std::string("non-finite entry in '") + key + "'", line);
  }
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  json header = {{"header",
                  {{"domain", to_string(ds.domain)},
                   {"state_dim", ds.state_dim},
                   {"action_dim", ds.action_dim},
                   {"env", ds.provenance.env_name},
                   {"policy", ds.provenance.policy},
                   {"seed", ds.provenance.seed},
                   {"trajectory_count", ds.provenance.trajectory_count},
                   {"horizon", ds.provenance.horizon},
                   {"first_trajectory", ds.provenance.first_trajectory}}}};
  out << header.dump() << '\n';
  const std::string domain = to_string(ds.domain);
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    const auto& traj = ds.trajectories[i];
    for (std::size_t t = 0; t < traj.size(); ++t) {
      json rec = {{"domain", domain},
                  {"traj_id", i},
                  {"t", t},
                  {"state", to_json(traj[t].state)},
                  {"action", to_json(traj[t].action)},
                  {"next_state", to_json(traj[t].next_state)}};
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing dataset " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("dataset not found: " + path.string());
  Dataset ds;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!have_header) {
      if (!rec.contains("header")) throw ParseError("first record must be the header", lineno);
      const json& h = rec["header"];
      try {
        ds.domain = domain_from_string(h.at("domain").get<std::string>());
        ds.state_dim = h.at("state_dim").get<int>();
        ds.action_dim = h.at("action_dim").get<int>();
        ds.provenance.env_name = h.at("env").get<std::string>();
        ds.provenance.policy = h.at("policy").get<std::string>();
        ds.provenance.seed = h.at("seed").get<std::uint64_t>();
        ds.provenance.trajectory_count = h.at("trajectory_count").get<int>();
        ds.provenance.horizon = h.at("horizon").get<int>();
        ds.provenance.first_trajectory = h.value("first_trajectory", 0);
      } catch (const json::exception& e) {
        throw ParseError(std::string("bad header: ") + e.what(), lineno);
      } catch (const UsageError& e) {
        throw ParseError(e.what(), lineno);
      }
      if (ds.state_dim < 1 || ds.action_dim < 1) throw DimensionError("header dimensions must be >= 1", lineno);
      have_header = true;
      continue;
    }
    std::size_t traj_id = 0, t = 0;
    try {
      if (rec.at("domain").get<std::string>() != to_string(ds.domain)) {
        throw ParseError("record domain differs from header domain", lineno);
      }
      traj_id = rec.at("traj_id").get<std::size_t>();
      t = rec.at("t").get<std::size_t>();
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), lineno);
    }
    if (traj_id == ds.trajectories.size()) ds.trajectories.emplace_back();
    if (traj_id + 1 != ds.trajectories.size()) throw ParseError("records are not ordered by traj_id", lineno);
    if (t != ds.trajectories.back().size()) throw ParseError("records are not ordered by t", lineno);
    ds.trajectories.back().push_back(Transition{vector_field(rec, "state", ds.state_dim, lineno),
                                                vector_field(rec, "action", ds.action_dim, lineno),
                                                vector_field(rec, "next_state", ds.state_dim, lineno)});
    if (static_cast<int>(t) >= ds.provenance.horizon) throw ParseError("trajectory longer than horizon", lineno);
  }
  if (!have_header) throw ParseError("empty dataset file " + path.string());
  if (static_cast<int>(ds.trajectories.size()) != ds.provenance.trajectory_count) {
    throw DimensionError("header declares " + std::to_string(ds.provenance.trajectory_count) +
                         " trajectories, file has " + std::to_string(ds.trajectories.size()));
  }
  return ds;
}

}  // namespace ecc::data
