#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ecc/diffcore/tape.hpp"
#include "ecc/envs/env.hpp"
#include "ecc/rng.hpp"

namespace ecc::data {

using diff::Tensor;
using envs::Vector;

enum class Domain { Source, Target };

std::string to_string(Domain d);
Domain domain_from_string(const std::string& s);

struct Transition {
  Vector state;
  Vector action;
  Vector next_state;
};

bool operator==(const Transition& a, const Transition& b);

using Trajectory = std::vector<Transition>;

struct Provenance {
  std::string env_name;
  std::string policy = "random";
  std::uint64_t seed = 0;
  int trajectory_count = 0;
  int horizon = 0;
  int first_trajectory = 0;  // stream index of trajectories[0]

  bool operator==(const Provenance&) const = default;
};

// Trajectories from one domain. Carries no reference to any other domain.
struct Dataset {
  Domain domain = Domain::Source;
  int state_dim = 0;
  int action_dim = 0;
  std::vector<Trajectory> trajectories;
  Provenance provenance;

  std::size_t transition_count() const;
  bool operator==(const Dataset&) const = default;
};

// Collection seed of one domain, so the two domains never share a stream.
std::uint64_t collection_seed(std::uint64_t seed, Domain domain);

// n_traj episodes of `horizon` steps with actions uniform over the action box.
// Trajectory i uses the stream derive_seed(seed, "collect", first + i).
Dataset collect_random(const envs::Env& env, Domain domain, int n_traj, int horizon, std::uint64_t seed,
                       int first = 0);

// Flattened (state, action, next_state) rows for minibatch access.
struct TransitionTable {
  Domain domain = Domain::Source;
  Tensor states;
  Tensor actions;
  Tensor next_states;

  std::size_t size() const { return static_cast<std::size_t>(states.rows()); }
};

TransitionTable flatten(const Dataset& ds);

struct Batch {
  Tensor states;
  Tensor actions;
  Tensor next_states;
};

// Uniform with replacement. batch_size 0 or an empty table throws UsageError.
std::vector<std::size_t> sample_indices(std::size_t table_size, std::size_t batch_size, Rng& rng);
Batch gather(const TransitionTable& table, const std::vector<std::size_t>& indices);
Batch sample_batch(const TransitionTable& table, std::size_t batch_size, Rng& rng);
std::vector<Transition> sample_batch(const Dataset& ds, std::size_t batch_size, Rng& rng);

// First ceil(fraction * n) trajectories in one part, the rest in the other.
std::pair<Dataset, Dataset> split_by_trajectory(const Dataset& ds, double train_fraction);

// JSON lines: a header record, then one record per transition with fields
// domain, traj_id, t, state, action, next_state.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ecc::data
