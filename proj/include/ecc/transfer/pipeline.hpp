#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "ecc/invdyn/models.hpp"
#include "ecc/mappings/mappings.hpp"
#include "ecc/transfer/transfer.hpp"

namespace ecc::transfer {

// The frozen dynamics models a mapping method consumes.
struct DynamicsModels {
  invdyn::InvDynModel source;
  invdyn::InvDynModel target;
  std::optional<invdyn::FwdDynModel> target_forward;  // dcc only
};

bool needs_forward_model(mappings::Method m);
DynamicsModels train_dynamics(const data::Dataset& src, const data::Dataset& tgt, const invdyn::DynTrainConfig& cfg,
                              bool with_forward);
// Dispatches on cfg.method.
mappings::TrainResult train_method(const data::Dataset& src, const data::Dataset& tgt, DynamicsModels& dyn,
                                   const mappings::TrainConfig& cfg);

struct PipelineConfig {
  int horizon = 200;
  int episodes = 10;
  std::uint64_t data_seed = 0;
  invdyn::DynTrainConfig dyn;
  mappings::TrainConfig maps;  // maps.seed is overwritten per run
};

// Source and target trajectories come from independent streams of one seed.
std::pair<data::Dataset, data::Dataset> collect_pair(const envs::DomainPair& pair, int n_traj, int horizon,
                                                     std::uint64_t seed);

struct SweepRow {
  int size = 0;
  std::uint64_t seed = 0;
  double mean_return = 0.0;
  double normalized = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double median_return(int size) const;
};

// Per size: collect (smaller sizes are prefixes of larger ones), train the
// dynamics models once, then train and evaluate one mapping set per seed.
SweepResult dataset_size_sweep(const envs::DomainPair& pair, const std::vector<int>& sizes,
                               const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg);

void write_size_sweep_csv(const SweepResult& r, const std::filesystem::path& path);

}  // namespace ecc::transfer
