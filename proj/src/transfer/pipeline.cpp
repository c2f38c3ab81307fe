#include "ecc/transfer/pipeline.hpp"

#include <fstream>

#include "ecc/error.hpp"

namespace ecc::transfer {

bool needs_forward_model(mappings::Method m) { return m == mappings::Method::Dcc; }

DynamicsModels train_dynamics(const data::Dataset& src, const data::Dataset& tgt, const invdyn::DynTrainConfig& cfg,
                              bool with_forward) {
  DynamicsModels d{invdyn::train_inverse_dynamics(src, cfg).model, invdyn::train_inverse_dynamics(tgt, cfg).model,
                   std::nullopt};
  if (with_forward) d.target_forward = invdyn::train_forward_dynamics(tgt, cfg).model;
  return d;
}

mappings::TrainResult train_method(const data::Dataset& src, const data::Dataset& tgt, DynamicsModels& dyn,
                                   const mappings::TrainConfig& cfg) {
  using mappings::Method;
  switch (cfg.method) {
    case Method::Ecc:
    case Method::EccNoSym:
      return mappings::train_mappings(src, tgt, dyn.source, dyn.target, cfg);
    case Method::Dcc:
      if (!dyn.target_forward) throw UsageError("dcc needs a trained target forward model");
      return mappings::train_dcc_baseline(src, tgt, *dyn.target_forward, cfg);
    case Method::CycleGan:
      return mappings::train_cyclegan_baseline(src, tgt, cfg);
    case Method::Random:
      return {mappings::random_mapping(src, tgt, cfg), {}};
  }
  throw UsageError("unknown method");
}

std::pair<data::Dataset, data::Dataset> collect_pair(const envs::DomainPair& pair, int n_traj, int horizon,
                                                     std::uint64_t seed) {
  using data::Domain;
  return {data::collect_random(*pair.source, Domain::Source, n_traj, horizon, data::collection_seed(seed, Domain::Source)),
          data::collect_random(*pair.target, Domain::Target, n_traj, horizon, data::collection_seed(seed, Domain::Target))};
}

double SweepResult::median_return(int size) const {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.size == size) v.push_back(r.mean_return);
  }
  return median(v);
}

SweepResult dataset_size_sweep(const envs::DomainPair& pair, const std::vector<int>& sizes,
                               const std::vector<std::uint64_t>& seeds, const PipelineConfig& cfg) {
  if (sizes.empty() || seeds.empty()) throw UsageError("sweep needs sizes and seeds");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) throw UsageError("sweep sizes must be strictly ascending");
  }
  SweepResult out;
  for (int n : sizes) {
    auto [src, tgt] = collect_pair(pair, n, cfg.horizon, cfg.data_seed);
    DynamicsModels dyn = train_dynamics(src, tgt, cfg.dyn, needs_forward_model(cfg.maps.method));
    for (std::uint64_t seed : seeds) {
      mappings::TrainConfig mc = cfg.maps;
      mc.seed = seed;
      mappings::TrainResult tr = train_method(src, tgt, dyn, mc);
      double r = transfer_rollout(pair, translator(tr.set), cfg.episodes, seed).mean();
      double o = oracle_rollout(pair, cfg.episodes, seed).mean();
      double z = random_policy_rollout(pair, cfg.episodes, seed).mean();
      out.rows.push_back({n, seed, r, normalized_return(r, o, z)});
    }
  }
  return out;
}

void write_size_sweep_csv(const SweepResult& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "size,seed,mean_return,normalized_return\n";
  for (const auto& row : r.rows) {
    out << row.size << ',' << row.seed << ',' << row.mean_return << ',' << row.normalized << '\n';
  }
}

}  // namespace ecc::transfer
