#include "ecc/cli/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "ecc/data/dataset.hpp"
#include "ecc/envs/domain_pair.hpp"
#include "ecc/error.hpp"
#include "ecc/transfer/pipeline.hpp"

namespace ecc::cli {

namespace fs = std::filesystem;
using data::Domain;

// ------------------------------------------------------------------ values

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  std::string v = trim(text);
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("bad value for '" + key + "': '" + text + "'");
  }
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw UsageError("'" + key + "' needs at least one value");
  return out;
}

std::vector<std::string> parse_words(const std::string& key, const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw UsageError("empty entry in '" + key + "'");
    out.push_back(item);
  }
  if (out.empty()) throw UsageError("'" + key + "' needs at least one value");
  return out;
}

std::string show(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <class T>
std::string show_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_same_v<T, std::string>) {
      s += v[i];
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Key number_key(std::string name, T RunConfig::*field) {
  return {name, [name, field](RunConfig& c, const std::string& v) { c.*field = parse_number<T>(name, v); },
          [field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return show(c.*field);
            else return std::to_string(c.*field);
          }};
}

template <class T, class Sub>
Key nested_key(std::string name, Sub RunConfig::*sub, T Sub::*field) {
  return {name, [name, sub, field](RunConfig& c, const std::string& v) { (c.*sub).*field = parse_number<T>(name, v); },
          [sub, field](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return show((c.*sub).*field);
            else return std::to_string((c.*sub).*field);
          }};
}

const std::vector<Key>& keys() {
  using mappings::TrainConfig;
  using invdyn::DynTrainConfig;
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    v.push_back({"pair", [](RunConfig& c, const std::string& s) { c.pair = trim(s); },
                 [](const RunConfig& c) { return c.pair; }});
    v.push_back({"method",
                 [](RunConfig& c, const std::string& s) {
                   c.maps.method = mappings::method_from_string(trim(s));
                   if (!c.methods_explicit) c.methods = {trim(s)};
                 },
                 [](const RunConfig& c) { return mappings::to_string(c.maps.method); }});
    v.push_back({"methods", [](RunConfig& c, const std::string& s) {
                   c.methods = parse_words("methods", s);
                   c.methods_explicit = true;
                 },
                 [](const RunConfig& c) { return show_list(c.methods); }});
    v.push_back(number_key("n", &RunConfig::n));
    v.push_back(number_key("horizon", &RunConfig::horizon));
    v.push_back(number_key("seed", &RunConfig::seed));
    v.push_back({"seeds",
                 [](RunConfig& c, const std::string& s) { c.seeds = parse_list<std::uint64_t>("seeds", s); },
                 [](const RunConfig& c) { return show_list(c.seeds); }});
    v.push_back({"sizes", [](RunConfig& c, const std::string& s) { c.sizes = parse_list<int>("sizes", s); },
                 [](const RunConfig& c) { return show_list(c.sizes); }});
    v.push_back(number_key("episodes", &RunConfig::episodes));
    v.push_back(number_key("window", &RunConfig::window));
    v.push_back({"action_mode",
                 [](RunConfig& c, const std::string& s) {
                   std::string m = trim(s);
                   if (m == "mean") c.action_mode = transfer::ActionMode::Mean;
                   else if (m == "sample") c.action_mode = transfer::ActionMode::Sample;
                   else throw UsageError("action_mode must be mean or sample, got '" + m + "'");
                 },
                 [](const RunConfig& c) { return c.action_mode == transfer::ActionMode::Mean ? "mean" : "sample"; }});
    v.push_back({"output", [](RunConfig& c, const std::string& s) { c.output = trim(s); },
                 [](const RunConfig& c) { return c.output.string(); }});
    v.push_back({"lambda1",
                 [](RunConfig& c, const std::string& s) { c.maps.weights.lambda1 = parse_number<double>("lambda1", s); },
                 [](const RunConfig& c) { return show(c.maps.weights.lambda1); }});
    v.push_back({"lambda2",
                 [](RunConfig& c, const std::string& s) { c.maps.weights.lambda2 = parse_number<double>("lambda2", s); },
                 [](const RunConfig& c) { return show(c.maps.weights.lambda2); }});
    v.push_back(nested_key("epochs", &RunConfig::maps, &TrainConfig::epochs));
    v.push_back(nested_key("phase1_epochs", &RunConfig::maps, &TrainConfig::phase1_epochs));
    v.push_back(nested_key("phase2_epochs", &RunConfig::maps, &TrainConfig::phase2_epochs));
    v.push_back(nested_key("steps_per_epoch", &RunConfig::maps, &TrainConfig::steps_per_epoch));
    v.push_back(nested_key("batch_size", &RunConfig::maps, &TrainConfig::batch_size));
    v.push_back(nested_key("lr_gen", &RunConfig::maps, &TrainConfig::lr_gen));
    v.push_back(nested_key("lr_disc", &RunConfig::maps, &TrainConfig::lr_disc));
    v.push_back(nested_key("hidden", &RunConfig::maps, &TrainConfig::hidden));
    v.push_back(nested_key("dcc_dynamics_weight", &RunConfig::maps, &TrainConfig::dcc_dynamics_weight));
    v.push_back(nested_key("invdyn_epochs", &RunConfig::dyn, &DynTrainConfig::epochs));
    v.push_back(nested_key("invdyn_steps_per_epoch", &RunConfig::dyn, &DynTrainConfig::steps_per_epoch));
    v.push_back(nested_key("invdyn_batch_size", &RunConfig::dyn, &DynTrainConfig::batch_size));
    v.push_back(nested_key("invdyn_lr", &RunConfig::dyn, &DynTrainConfig::lr));
    v.push_back(nested_key("invdyn_heldout_fraction", &RunConfig::dyn, &DynTrainConfig::heldout_fraction));
    v.push_back(nested_key("invdyn_hidden", &RunConfig::dyn, &DynTrainConfig::hidden));
    return v;
  }();
  return k;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : keys()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

std::string RunConfig::render() const {
  std::string s;
  for (const auto& k : keys()) s += k.name + " = " + k.get(*this) + "\n";
  return s;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

RunConfig default_config() {
  RunConfig c;
  if (const char* root = std::getenv("ECC_OUTPUT_ROOT"); root && *root) c.output = root;
  return c;
}

void RunConfig::validate() const {
  envs::DomainPair p = envs::make_domain_pair(pair);
  for (const auto& m : methods) mappings::method_from_string(m);
  if (n < 1) throw UsageError("n must be >= 1");
  int h = std::min(p.source->spec().horizon, p.target->spec().horizon);
  if (horizon < 1 || horizon > h) throw UsageError("horizon must be in [1, " + std::to_string(h) + "]");
  if (seeds.empty()) throw UsageError("seeds must not be empty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 1) throw UsageError("sizes must be >= 1");
    if (i && sizes[i] <= sizes[i - 1]) throw UsageError("sizes must be strictly ascending");
  }
  if (episodes < 1) throw UsageError("episodes must be >= 1");
  if (window < 1 || window % 2 == 0) throw UsageError("window must be odd and >= 1");
  if (dyn.epochs < 1 || dyn.steps_per_epoch < 1 || dyn.batch_size < 1 || dyn.hidden < 1 || !(dyn.lr > 0.0)) {
    throw UsageError("invdyn_* settings must be positive");
  }
  if (!(dyn.heldout_fraction > 0.0 && dyn.heldout_fraction < 1.0)) {
    throw UsageError("invdyn_heldout_fraction must be in (0, 1)");
  }
  try {
    maps.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

// ------------------------------------------------------------------ layout

fs::path Layout::dataset(Domain d) const { return data_dir() / (data::to_string(d) + ".jsonl"); }
fs::path Layout::invdyn(Domain d) const { return models_dir() / ("invdyn_" + data::to_string(d) + ".bin"); }
fs::path Layout::invdyn_curve(Domain d) const {
  return models_dir() / ("invdyn_" + data::to_string(d) + "_curve.csv");
}
fs::path Layout::fwddyn() const { return models_dir() / "fwddyn_target.bin"; }
fs::path Layout::fwddyn_curve() const { return models_dir() / "fwddyn_target_curve.csv"; }
fs::path Layout::mapping(const std::string& method, std::uint64_t seed) const {
  return models_dir() / (method + "_seed" + std::to_string(seed) + ".bin");
}
fs::path Layout::phase_log(const std::string& method, std::uint64_t seed) const {
  return models_dir() / (method + "_seed" + std::to_string(seed) + "_log.csv");
}

// ------------------------------------------------------------------ commands

namespace {

Layout layout(const RunConfig& cfg) { return {cfg.output, cfg.pair}; }

void echo_config(const fs::path& dir, const RunConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.resolved.txt", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (dir / "config.resolved.txt").string());
  out << cfg.render();
}

data::Dataset load_collected(const Layout& l, Domain d) {
  fs::path p = l.dataset(d);
  if (!fs::exists(p)) {
    throw MissingInputError("dataset " + p.string() + " not found; run `ecc collect --pair " + l.pair + "` first");
  }
  return data::load_dataset(p);
}

invdyn::DynTrainConfig dyn_config(const RunConfig& cfg) {
  invdyn::DynTrainConfig d = cfg.dyn;
  d.seed = cfg.seed;
  return d;
}

transfer::DynamicsModels train_and_save_dynamics(const RunConfig& cfg, const data::Dataset& src,
                                                 const data::Dataset& tgt, bool with_forward) {
  Layout l = layout(cfg);
  invdyn::DynTrainConfig dc = dyn_config(cfg);
  auto s = invdyn::train_inverse_dynamics(src, dc);
  auto t = invdyn::train_inverse_dynamics(tgt, dc);
  invdyn::save_model(s.model, l.invdyn(Domain::Source));
  invdyn::save_model(t.model, l.invdyn(Domain::Target));
  invdyn::write_curve_csv(s.curve, l.invdyn_curve(Domain::Source));
  invdyn::write_curve_csv(t.curve, l.invdyn_curve(Domain::Target));
  std::cout << "invdyn held-out L1: source " << s.heldout_l1 << ", target " << t.heldout_l1 << "\n";
  transfer::DynamicsModels d{std::move(s.model), std::move(t.model), std::nullopt};
  if (with_forward) {
    auto f = invdyn::train_forward_dynamics(tgt, dc);
    invdyn::save_model(f.model, l.fwddyn());
    invdyn::write_curve_csv(f.curve, l.fwddyn_curve());
    std::cout << "target forward model held-out L1: " << f.heldout_l1 << "\n";
    d.target_forward = std::move(f.model);
  }
  echo_config(l.models_dir(), cfg);
  return d;
}

std::optional<mappings::MappingSet> try_load(const Layout& l, const std::string& method, std::uint64_t seed) {
  fs::path p = l.mapping(method, seed);
  if (!fs::exists(p)) return std::nullopt;
  return mappings::load_mapping_set(p);
}

}  // namespace

int cmd_collect(const RunConfig& cfg) {
  envs::DomainPair pair = envs::make_domain_pair(cfg.pair);
  Layout l = layout(cfg);
  auto [src, tgt] = transfer::collect_pair(pair, cfg.n, cfg.horizon, cfg.seed);
  data::save_dataset(src, l.dataset(Domain::Source));
  data::save_dataset(tgt, l.dataset(Domain::Target));
  echo_config(l.data_dir(), cfg);
  std::cout << "wrote " << l.dataset(Domain::Source).string() << " (" << src.transition_count() << " transitions)\n"
            << "wrote " << l.dataset(Domain::Target).string() << " (" << tgt.transition_count() << " transitions)\n";
  return kOk;
}

int cmd_train_invdyn(const RunConfig& cfg) {
  Layout l = layout(cfg);
  data::Dataset src = load_collected(l, Domain::Source);
  data::Dataset tgt = load_collected(l, Domain::Target);
  train_and_save_dynamics(cfg, src, tgt, transfer::needs_forward_model(cfg.maps.method));
  return kOk;
}

int cmd_train(const RunConfig& cfg) {
  Layout l = layout(cfg);
  data::Dataset src = load_collected(l, Domain::Source);
  data::Dataset tgt = load_collected(l, Domain::Target);
  transfer::DynamicsModels dyn = train_and_save_dynamics(cfg, src, tgt, transfer::needs_forward_model(cfg.maps.method));
  const std::string method = mappings::to_string(cfg.maps.method);
  for (std::uint64_t seed : cfg.seeds) {
    mappings::TrainConfig mc = cfg.maps;
    mc.seed = seed;
    try {
      mappings::TrainResult r = transfer::train_method(src, tgt, dyn, mc);
      mappings::save_mapping_set(r.set, l.mapping(method, seed));
      r.log.write_csv(l.phase_log(method, seed));
    } catch (const mappings::DivergenceError& e) {
      e.log().write_csv(l.phase_log(method, seed));
      throw;
    }
    std::cout << "wrote " << l.mapping(method, seed).string() << "\n";
  }
  return kOk;
}

int cmd_eval(const RunConfig& cfg) {
  envs::DomainPair pair = envs::make_domain_pair(cfg.pair);
  Layout l = layout(cfg);
  std::vector<std::string> cols{"oracle", "random_policy"};
  cols.insert(cols.end(), cfg.methods.begin(), cfg.methods.end());
  auto loader = [&](const std::string& m, std::uint64_t s) { return try_load(l, m, s); };
  transfer::SuiteRow row = transfer::evaluate_suite(pair, cols, cfg.seeds, cfg.episodes, loader, cfg.action_mode);
  transfer::write_performance_csv({row}, l.reports_dir() / "performance.csv");
  transfer::write_runs_csv({row}, l.reports_dir() / "runs.csv");
  if (pair.has_shared_coords()) {
    std::vector<transfer::CurveEntry> curves;
    for (const auto& m : cfg.methods) {
      for (std::uint64_t s : cfg.seeds) {
        auto set = try_load(l, m, s);
        if (!set) continue;
        curves.push_back({m, s,
                          transfer::alignment_error_curve(pair, transfer::translator(*set), cfg.episodes, s,
                                                          cfg.action_mode, cfg.window, cfg.horizon)});
      }
    }
    transfer::write_alignment_csv(curves, l.reports_dir() / "alignment_curve.csv");
  }
  echo_config(l.reports_dir(), cfg);
  const double o = row.columns.at("oracle").mean();
  const double z = row.columns.at("random_policy").mean();
  for (const auto& c : cols) {
    const auto& mr = row.columns.at(c);
    std::cout << c << ": " << mr.cell();
    if (mr.complete()) std::cout << "  normalized " << transfer::normalized_return(mr.mean(), o, z);
    for (auto s : mr.missing) std::cout << "  [missing seed " << s << ": " << l.mapping(c, s).string() << "]";
    std::cout << "\n";
  }
  return row.complete() ? kOk : kMissingInput;
}

int cmd_sweep(const RunConfig& cfg) {
  envs::DomainPair pair = envs::make_domain_pair(cfg.pair);
  Layout l = layout(cfg);
  transfer::PipelineConfig pc;
  pc.horizon = cfg.horizon;
  pc.episodes = cfg.episodes;
  pc.data_seed = cfg.seed;
  pc.dyn = dyn_config(cfg);
  pc.maps = cfg.maps;
  transfer::SweepResult r = transfer::dataset_size_sweep(pair, cfg.sizes, cfg.seeds, pc);
  transfer::write_size_sweep_csv(r, l.reports_dir() / "size_sweep.csv");
  echo_config(l.reports_dir(), cfg);
  for (int n : cfg.sizes) std::cout << "size " << n << ": median return " << r.median_return(n) << "\n";
  return kOk;
}

int cmd_ablate(const RunConfig& cfg) {
  envs::DomainPair pair = envs::make_domain_pair(cfg.pair);
  Layout l = layout(cfg);
  auto loader = [&](const std::string& m, std::uint64_t s) { return try_load(l, m, s); };
  transfer::SuiteRow row =
      transfer::evaluate_suite(pair, {"ecc", "ecc_nosym"}, cfg.seeds, cfg.episodes, loader, cfg.action_mode);
  const auto& a = row.columns.at("ecc");
  const auto& b = row.columns.at("ecc_nosym");
  fs::path out = l.reports_dir() / "ablation.csv";
  echo_config(l.reports_dir(), cfg);
  if (!a.complete() || !b.complete()) {
    fs::create_directories(out.parent_path());
    std::ofstream f(out, std::ios::trunc);
    f << "seed,ecc,ecc_nosym,difference\n";
    for (auto s : cfg.seeds) f << s << ',' << transfer::kGapMarker << ',' << transfer::kGapMarker << ','
                               << transfer::kGapMarker << '\n';
    std::cerr << "ablation needs ecc and ecc_nosym snapshots for every seed; run `ecc train --method ecc` and "
                 "`ecc train --method ecc_nosym` first\n";
    return kMissingInput;
  }
  transfer::AblationResult r = transfer::ablate_symmetry(a, b);
  transfer::write_ablation_csv(r, out);
  std::cout << "median(ecc - ecc_nosym) = " << r.median_difference() << ", std ecc = " << r.std_ecc()
            << ", std ecc_nosym = " << r.std_nosym() << "\n";
  return kOk;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingInputError("cannot read " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

int cmd_report(const RunConfig& cfg) {
  fs::path root = cfg.output / "reports";
  std::ostringstream table;
  table.precision(17);
  table << "pair";
  for (const auto& c : transfer::suite_columns()) table << ',' << c;
  table << ",ablation_median_difference,size_sweep_median_returns\n";
  int found = 0;
  for (const auto& name : envs::domain_pair_names()) {
    fs::path perf = root / name / "performance.csv";
    if (!fs::exists(perf)) continue;
    auto rows = read_csv(perf);
    if (rows.size() < 2) throw ParseError("malformed " + perf.string());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) table << (j ? "," : "") << rows[i][j];
      std::string abl = transfer::kGapMarker;
      fs::path ap = root / name / "ablation.csv";
      if (fs::exists(ap)) {
        std::vector<double> d;
        auto ar = read_csv(ap);
        for (std::size_t k = 1; k < ar.size(); ++k) {
          if (ar[k].size() == 4 && ar[k][3] != transfer::kGapMarker) d.push_back(std::stod(ar[k][3]));
        }
        if (!d.empty() && d.size() + 1 == ar.size()) abl = show(transfer::median(d));
      }
      std::string sweep = transfer::kGapMarker;
      fs::path sp = root / name / "size_sweep.csv";
      if (fs::exists(sp)) {
        std::map<int, std::vector<double>> by_size;
        auto sr = read_csv(sp);
        for (std::size_t k = 1; k < sr.size(); ++k) by_size[std::stoi(sr[k][0])].push_back(std::stod(sr[k][2]));
        sweep.clear();
        for (const auto& [n, v] : by_size) {
          sweep += (sweep.empty() ? "" : " ") + std::to_string(n) + ":" + show(transfer::median(v));
        }
      }
      table << ',' << abl << ',' << sweep << '\n';
    }
    ++found;
  }
  if (!found) throw MissingInputError("no reports/<pair>/performance.csv under " + root.string() + "; run `ecc eval` first");
  fs::create_directories(root);
  std::ofstream out(root / "summary.csv", std::ios::trunc);
  out << table.str();
  std::cout << table.str();
  return kOk;
}

int cmd_export_truth(const RunConfig& cfg) {
  envs::DomainPair pair = envs::make_domain_pair(cfg.pair);
  if (!pair.truth) throw UsageError("pair '" + cfg.pair + "' has no ground-truth maps");
  fs::path dir = cfg.output / "truth" / cfg.pair;
  fs::create_directories(dir);
  auto dump = [&](const std::string& name, const envs::Matrix& m) {
    std::ofstream out(dir / (name + ".txt"), std::ios::trunc);
    out << "# " << m.rows() << " x " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << show(m(r, c));
      out << "\n";
    }
  };
  dump("M", pair.truth->state_lift);
  dump("M_pinv", pair.truth->state_lift_pinv);
  dump("N", pair.truth->action_lift);
  dump("N_pinv", pair.truth->action_lift_pinv);
  std::cout << "wrote " << dir.string() << "/{M,M_pinv,N,N_pinv}.txt\n";
  return kOk;
}

// ------------------------------------------------------------------ entry point

int run(int argc, const char* const* argv) {
  CLI::App app{"Cross-domain policy transfer by effect cycle-consistency"};
  app.require_subcommand(1);
  struct Cmd {
    std::string name, help;
    int (*fn)(const RunConfig&);
  };
  const std::vector<Cmd> cmds{
      {"collect", "collect random-policy datasets for both domains", cmd_collect},
      {"train-invdyn", "train the inverse-dynamics models (and the target forward model for dcc)", cmd_train_invdyn},
      {"train", "train dynamics models, then one mapping set per seed", cmd_train},
      {"eval", "evaluate trained mapping sets against oracle and random", cmd_eval},
      {"sweep", "dataset-size sweep through the full pipeline", cmd_sweep},
      {"ablate", "paired ecc vs ecc_nosym comparison", cmd_ablate},
      {"report", "merge per-pair reports into reports/summary.csv", cmd_report},
      {"export-truth", "write the ground-truth matrices of a pair as text", cmd_export_truth},
  };
  std::string config_path;
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<CLI::App*, const Cmd*>> subs;
  std::vector<std::pair<CLI::Option*, std::string>> flag_opts;
  for (const auto& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key = value config file");
    for (const auto& k : config_keys()) flag_opts.emplace_back(sub->add_option("--" + k, flag_values[k]), k);
    if (c.name == "train") sub->alias("train-maps");
    subs.emplace_back(sub, &c);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  try {
    RunConfig cfg = default_config();
    if (!config_path.empty()) apply_config_file(cfg, config_path);
    for (const auto& [opt, key] : flag_opts) {
      if (opt->count()) set_key(cfg, key, flag_values[key]);
    }
    cfg.validate();
    for (auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->fn(cfg);
    }
    return kUsage;
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const TrainingError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const UnsupportedMetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace ecc::cli
