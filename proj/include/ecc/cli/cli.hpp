#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ecc/invdyn/models.hpp"
#include "ecc/mappings/mappings.hpp"
#include "ecc/transfer/transfer.hpp"

namespace ecc::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kMissingInput = 2, kNumerical = 3 };

struct RunConfig {
  std::string pair = "linear_lift";
  std::vector<std::string> methods{"random", "cyclegan", "dcc", "ecc", "ecc_nosym"};
  int n = 1000;  // trajectories per domain
  int horizon = 200;
  std::uint64_t seed = 0;  // data collection and dynamics models
  std::vector<std::uint64_t> seeds{0};  // mapping training and evaluation
  std::vector<int> sizes{100, 300, 1000, 3000};
  int episodes = 10;
  int window = 11;
  transfer::ActionMode action_mode = transfer::ActionMode::Mean;
  std::filesystem::path output = ".";
  invdyn::DynTrainConfig dyn;
  mappings::TrainConfig maps;
  // Setting `method` also narrows `methods` to it unless `methods` was given.
  bool methods_explicit = false;

  // key = value lines in a fixed key order; what gets echoed next to outputs.
  std::string render() const;
  // Checks ranges and the pair's domain spec. Throws UsageError.
  void validate() const;
};

// Every settable key, in render order.
const std::vector<std::string>& config_keys();

// Unknown keys and malformed values throw UsageError.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);
// Flat "key = value" text; '#' starts a comment.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Defaults, then ECC_OUTPUT_ROOT, then the config file, then flags.
RunConfig default_config();

struct Layout {
  std::filesystem::path root;
  std::string pair;

  std::filesystem::path data_dir() const { return root / "data" / pair; }
  std::filesystem::path models_dir() const { return root / "models" / pair; }
  std::filesystem::path reports_dir() const { return root / "reports" / pair; }
  std::filesystem::path dataset(data::Domain d) const;
  std::filesystem::path invdyn(data::Domain d) const;
  std::filesystem::path invdyn_curve(data::Domain d) const;
  std::filesystem::path fwddyn() const;
  std::filesystem::path fwddyn_curve() const;
  std::filesystem::path mapping(const std::string& method, std::uint64_t seed) const;
  std::filesystem::path phase_log(const std::string& method, std::uint64_t seed) const;
};

int cmd_collect(const RunConfig& cfg);
int cmd_train_invdyn(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_report(const RunConfig& cfg);
int cmd_export_truth(const RunConfig& cfg);

// Full entry point: parses argv, dispatches, maps exceptions to exit codes.
int run(int argc, const char* const* argv);

}  // namespace ecc::cli
