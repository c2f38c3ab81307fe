#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ecc/diffcore/gaussian.hpp"
#include "ecc/envs/domain_pair.hpp"
#include "ecc/mappings/mappings.hpp"

namespace ecc::transfer {

using envs::Vector;

enum class ActionMode { Mean, Sample };

using Policy = std::function<Vector(const Vector&)>;

// The two maps a transferred policy needs: target state -> source state, and
// (source state, source action) -> distribution over target actions.
struct Translator {
  std::function<Vector(const Vector&)> G;
  std::function<diff::DiagGaussian(const Vector&, const Vector&)> H;
};

Translator translator(const mappings::MappingSet& set);
// H* as a Gaussian with log-std at the lower clamp.
Translator translator(const envs::GroundTruth& truth);

struct TransferResult {
  std::string pair;
  std::string method;
  std::vector<double> returns;  // one per episode, in episode order

  double mean() const;
  double stddev() const;  // population std
};

// Episode e resets from make_rng(seed, "eval_reset", e); sampled actions draw
// from make_rng(seed, "eval_sample", e).
TransferResult transfer_rollout(const envs::DomainPair& pair, const Translator& tr, const Policy& expert, int episodes,
                                std::uint64_t seed, ActionMode mode = ActionMode::Mean, int horizon = 0);
// Uses the source expert.
TransferResult transfer_rollout(const envs::DomainPair& pair, const Translator& tr, int episodes, std::uint64_t seed,
                                ActionMode mode = ActionMode::Mean, int horizon = 0);
// Native target expert, and uniform random target actions, on the same resets.
TransferResult oracle_rollout(const envs::DomainPair& pair, int episodes, std::uint64_t seed, int horizon = 0);
TransferResult random_policy_rollout(const envs::DomainPair& pair, int episodes, std::uint64_t seed, int horizon = 0);

// (R - R_random) / (R_oracle - R_random): 1 at the oracle, 0 at the random policy.
double normalized_return(double r, double oracle, double random);

struct AlignmentCurve {
  int window = 11;
  std::vector<double> raw;           // per-step error averaged over episodes
  std::vector<double> running_mean;  // mean of raw[0..t]
  std::vector<double> smoothed;      // centred moving average of running_mean
};

// Entries t = 0 .. horizon-1 are measured on the observation y_t before the
// t-th action. Throws UnsupportedMetricError without shared coordinates.
AlignmentCurve alignment_error_curve(const envs::DomainPair& pair, const Translator& tr, int episodes,
                                     std::uint64_t seed, ActionMode mode = ActionMode::Mean, int window = 11,
                                     int horizon = 0);

// Centred moving average; the window shrinks symmetrically near the ends.
std::vector<double> centered_moving_average(const std::vector<double>& v, int window);

// ------------------------------------------------------------------ suite

inline const std::vector<std::string>& suite_columns() {
  static const std::vector<std::string> cols{"oracle", "random", "cyclegan", "dcc", "ecc", "ecc_nosym"};
  return cols;
}

inline constexpr const char* kGapMarker = "MISSING";

// Loads the mapping set trained for (method, seed), or nullopt if absent.
using SnapshotLoader =
    std::function<std::optional<mappings::MappingSet>(const std::string& method, std::uint64_t seed)>;

struct SeedResult {
  std::uint64_t seed = 0;
  TransferResult result;
};

struct MethodResult {
  std::string method;
  std::vector<SeedResult> seeds;
  std::vector<std::uint64_t> missing;

  bool complete() const { return missing.empty(); }
  // mean and population std over all episodes of all seeds
  double mean() const;
  double stddev() const;
  std::vector<double> seed_means() const;
  // "1981.36±72.81", or the gap marker when any seed is missing
  std::string cell() const;
};

struct SuiteRow {
  std::string pair;
  std::map<std::string, MethodResult> columns;

  bool complete() const;
};

// Episodes of seed k use evaluation seed k, so every column sees the same
// resets. The oracle and random-policy references need no snapshot.
SuiteRow evaluate_suite(const envs::DomainPair& pair, const std::vector<std::string>& methods,
                        const std::vector<std::uint64_t>& seeds, int episodes, const SnapshotLoader& load,
                        ActionMode mode = ActionMode::Mean);

double median(std::vector<double> v);
double stddev(const std::vector<double>& v);
std::string format_cell(double mean, double sd);

// ------------------------------------------------------------------ ablation

struct AblationResult {
  std::vector<std::uint64_t> seeds;
  std::vector<double> ecc, ecc_nosym;  // per-seed mean returns

  std::vector<double> differences() const;
  double median_difference() const;
  double std_ecc() const;
  double std_nosym() const;
};

// Pairs the two columns seed by seed. Throws MissingInputError if either
// column has gaps.
AblationResult ablate_symmetry(const MethodResult& ecc, const MethodResult& ecc_nosym);

// ------------------------------------------------------------------ reports

// Full decimal precision throughout.
void write_performance_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path);
// Long form: pair, method, seed, mean_return, std_return, episodes (or the gap marker).
void write_runs_csv(const std::vector<SuiteRow>& rows, const std::filesystem::path& path);

struct CurveEntry {
  std::string method;
  std::uint64_t seed = 0;
  AlignmentCurve curve;
};

// Columns t, method, seed, error, with the smoothed running mean as error.
void write_alignment_csv(const std::vector<CurveEntry>& curves, const std::filesystem::path& path);
void write_ablation_csv(const AblationResult& r, const std::filesystem::path& path);

}  // namespace ecc::transfer
