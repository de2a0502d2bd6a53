#include "simcf/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace simcf {

namespace fs = std::filesystem;

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::SnrDb: return "snr_db";
    case SweepAxis::MetaAtoms: return "meta_atoms";
    case SweepAxis::Layers: return "layers";
    case SweepAxis::RfChains: return "rf_chains";
    case SweepAxis::NumUes: return "num_ues";
    case SweepAxis::Fronthaul: return "fronthaul";
  }
  return "snr_db";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "snr_db") return SweepAxis::SnrDb;
  if (name == "meta_atoms") return SweepAxis::MetaAtoms;
  if (name == "layers") return SweepAxis::Layers;
  if (name == "rf_chains") return SweepAxis::RfChains;
  if (name == "num_ues") return SweepAxis::NumUes;
  if (name == "fronthaul") return SweepAxis::Fronthaul;
  throw ConfigError("unknown sweep axis: " + name);
}

void ExperimentPlan::validate() const {
  base.validate();
  if (values.empty()) throw ConfigError("sweep value list must not be empty");
  if (schemes.empty()) throw ConfigError("scheme list must not be empty");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  for (const auto& s : schemes) s.validate();
  for (double v : values) {
    if (axis != SweepAxis::SnrDb && v < 1.0) throw ConfigError("sweep values must be positive counts");
    if (axis == SweepAxis::MetaAtoms || axis == SweepAxis::Layers || axis == SweepAxis::RfChains ||
        axis == SweepAxis::NumUes) {
      if (v != std::floor(v)) throw ConfigError("sweep values on this axis must be integers");
    }
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("malformed numeric value for key '" + key + "': " + value);
  }
}

int parse_int(const std::string& value, const std::string& key) {
  const double v = parse_number(value, key);
  if (v != std::floor(v)) throw ConfigError("key '" + key + "' expects an integer, got " + value);
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("malformed integer value for key '" + key + "': " + value);
  }
}

}  // namespace

ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin) {
  ExperimentPlan plan;
  plan.schemes.clear();
  plan.values.clear();

  std::stringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  bool have_values = false, have_schemes = false;

  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "system" && section != "geometry" && section != "sweep" && section != "solver" &&
          section != "ao")
        throw ConfigError(origin + ": unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any section");

    const std::string qualified = section + "." + key;
    auto& cfg = plan.base;
    auto& ao = plan.ao;
    auto& solver = plan.ao.solver;

    if (qualified == "system.aps") cfg.num_aps = parse_int(value, key);
    else if (qualified == "system.ues") cfg.num_ues = parse_int(value, key);
    else if (qualified == "system.rf_chains") cfg.rf_chains = parse_int(value, key);
    else if (qualified == "system.meta_atoms") cfg.atoms_per_layer = parse_int(value, key);
    else if (qualified == "system.layers") cfg.layers = parse_int(value, key);
    else if (qualified == "system.fronthaul_bpshz") cfg.fronthaul_capacity = parse_number(value, key);
    else if (qualified == "system.snr_db") plan.snr_db = parse_number(value, key);
    else if (qualified == "system.noise_power") {
      cfg.uplink_noise = parse_number(value, key);
      cfg.downlink_noise = cfg.uplink_noise;
    } else if (qualified == "system.rate_weights") {
      const auto items = split_list(value);
      RealVec w(static_cast<Eigen::Index>(items.size()));
      for (std::size_t j = 0; j < items.size(); ++j) w(j) = parse_number(items[j], key);
      cfg.uplink_weights = w;
      cfg.downlink_weights = w;
    }
    else if (qualified == "geometry.carrier_ghz") cfg.carrier_frequency = parse_number(value, key) * 1e9;
    else if (qualified == "geometry.coverage_radius_m") cfg.coverage_radius = parse_number(value, key);
    else if (qualified == "geometry.pathloss_ref_m") cfg.pathloss_ref_distance = parse_number(value, key);
    else if (qualified == "geometry.pathloss_ref_gain") cfg.pathloss_ref_gain = parse_number(value, key);
    else if (qualified == "geometry.pathloss_exponent") cfg.pathloss_exponent = parse_number(value, key);
    else if (qualified == "sweep.axis") plan.axis = sweep_axis_from_string(value);
    else if (qualified == "sweep.values") {
      for (const auto& item : split_list(value)) plan.values.push_back(parse_number(item, key));
      have_values = true;
    } else if (qualified == "sweep.schemes") {
      for (const auto& item : split_list(value)) plan.schemes.push_back(SchemeSpec::parse(item));
      have_schemes = true;
    } else if (qualified == "sweep.direction") {
      if (value == "uplink") plan.direction = DirectionMode::Uplink;
      else if (value == "downlink") plan.direction = DirectionMode::Downlink;
      else if (value == "both") plan.direction = DirectionMode::Both;
      else throw ConfigError("direction must be uplink, downlink, or both");
    }
    else if (qualified == "sweep.trials") plan.trials = parse_int(value, key);
    else if (qualified == "sweep.seed") plan.seed = parse_u64(value, key);
    else if (qualified == "sweep.workers") plan.workers = parse_int(value, key);
    else if (qualified == "sweep.timing") {
      if (value == "wall") plan.timing = TimingMode::Wall;
      else if (value == "none") plan.timing = TimingMode::None;
      else throw ConfigError("timing must be wall or none");
    }
    else if (qualified == "solver.barrier_init") solver.barrier_init = parse_number(value, key);
    else if (qualified == "solver.barrier_growth") solver.barrier_growth = parse_number(value, key);
    else if (qualified == "solver.gradient_tol") solver.gradient_tol = parse_number(value, key);
    else if (qualified == "solver.gap_tol") solver.gap_tol = parse_number(value, key);
    else if (qualified == "solver.max_inner") solver.max_inner = parse_int(value, key);
    else if (qualified == "solver.max_outer") solver.max_outer = parse_int(value, key);
    else if (qualified == "solver.backtrack_shrink") solver.backtrack_shrink = parse_number(value, key);
    else if (qualified == "solver.sufficient_decrease") solver.sufficient_decrease = parse_number(value, key);
    else if (qualified == "ao.max_outer") ao.max_outer = parse_int(value, key);
    else if (qualified == "ao.max_digital") ao.max_digital = parse_int(value, key);
    else if (qualified == "ao.max_wave") ao.max_wave = parse_int(value, key);
    else if (qualified == "ao.objective_tol") ao.objective_tol = parse_number(value, key);
    else if (qualified == "ao.penalty_init") ao.penalty_init = parse_number(value, key);
    else if (qualified == "ao.penalty_growth") ao.penalty_growth = parse_number(value, key);
    else if (qualified == "ao.step_init") ao.step_init = parse_number(value, key);
    else if (qualified == "ao.step_decay") ao.step_decay = parse_number(value, key);
    else if (qualified == "ao.capacity_headroom") ao.capacity_headroom = parse_number(value, key);
    else if (qualified == "ao.monotone_phase_steps") ao.monotone_phase_steps = parse_int(value, key) != 0;
    else throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown key '" + qualified + "'");
  }

  if (!have_values) throw ConfigError(origin + ": missing sweep.values");
  if (!have_schemes) throw ConfigError(origin + ": missing sweep.schemes");

  // SNR fixes the budgets against unit-normalized noise
  const double power = plan.base.uplink_noise * std::pow(10.0, plan.snr_db / 10.0);
  plan.base.uplink_power = power;
  plan.base.ap_power = power;
  plan.base.seed = plan.seed;
  plan.ao.seed = plan.seed;
  plan.validate();
  return plan;
}

ExperimentPlan parse_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open plan file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plan_text(buf.str(), path);
}

std::string serialize_plan(const ExperimentPlan& plan) {
  std::ostringstream out;
  out << "[system]\n";
  out << "aps = " << plan.base.num_aps << "\n";
  out << "ues = " << plan.base.num_ues << "\n";
  out << "rf_chains = " << plan.base.rf_chains << "\n";
  out << "meta_atoms = " << plan.base.atoms_per_layer << "\n";
  out << "layers = " << plan.base.layers << "\n";
  out << "fronthaul_bpshz = " << format_double(plan.base.fronthaul_capacity) << "\n";
  out << "snr_db = " << format_double(plan.snr_db) << "\n";
  out << "noise_power = " << format_double(plan.base.uplink_noise) << "\n";
  if (plan.base.uplink_weights.size() != 0) {
    out << "rate_weights = ";
    for (Eigen::Index i = 0; i < plan.base.uplink_weights.size(); ++i) {
      if (i) out << ", ";
      out << format_double(plan.base.uplink_weights(i));
    }
    out << "\n";
  }
  out << "\n[geometry]\n";
  out << "carrier_ghz = " << format_double(plan.base.carrier_frequency / 1e9) << "\n";
  out << "coverage_radius_m = " << format_double(plan.base.coverage_radius) << "\n";
  out << "pathloss_ref_m = " << format_double(plan.base.pathloss_ref_distance) << "\n";
  out << "pathloss_ref_gain = " << format_double(plan.base.pathloss_ref_gain) << "\n";
  out << "pathloss_exponent = " << format_double(plan.base.pathloss_exponent) << "\n";
  out << "\n[sweep]\n";
  out << "axis = " << to_string(plan.axis) << "\n";
  out << "values = ";
  for (std::size_t i = 0; i < plan.values.size(); ++i) {
    if (i) out << ", ";
    out << format_double(plan.values[i]);
  }
  out << "\n";
  out << "schemes = ";
  for (std::size_t i = 0; i < plan.schemes.size(); ++i) {
    if (i) out << ", ";
    out << plan.schemes[i].name();
  }
  out << "\n";
  switch (plan.direction) {
    case DirectionMode::Uplink: out << "direction = uplink\n"; break;
    case DirectionMode::Downlink: out << "direction = downlink\n"; break;
    case DirectionMode::Both: out << "direction = both\n"; break;
  }
  out << "trials = " << plan.trials << "\n";
  out << "seed = " << plan.seed << "\n";
  out << "workers = " << plan.workers << "\n";
  out << "timing = " << (plan.timing == TimingMode::Wall ? "wall" : "none") << "\n";
  out << "\n[solver]\n";
  const auto& s = plan.ao.solver;
  out << "barrier_init = " << format_double(s.barrier_init) << "\n";
  out << "barrier_growth = " << format_double(s.barrier_growth) << "\n";
  out << "gradient_tol = " << format_double(s.gradient_tol) << "\n";
  out << "gap_tol = " << format_double(s.gap_tol) << "\n";
  out << "max_inner = " << s.max_inner << "\n";
  out << "max_outer = " << s.max_outer << "\n";
  out << "backtrack_shrink = " << format_double(s.backtrack_shrink) << "\n";
  out << "sufficient_decrease = " << format_double(s.sufficient_decrease) << "\n";
  out << "\n[ao]\n";
  out << "max_outer = " << plan.ao.max_outer << "\n";
  out << "max_digital = " << plan.ao.max_digital << "\n";
  out << "max_wave = " << plan.ao.max_wave << "\n";
  out << "objective_tol = " << format_double(plan.ao.objective_tol) << "\n";
  out << "penalty_init = " << format_double(plan.ao.penalty_init) << "\n";
  out << "penalty_growth = " << format_double(plan.ao.penalty_growth) << "\n";
  out << "step_init = " << format_double(plan.ao.step_init) << "\n";
  out << "step_decay = " << format_double(plan.ao.step_decay) << "\n";
  out << "capacity_headroom = " << format_double(plan.ao.capacity_headroom) << "\n";
  out << "monotone_phase_steps = " << (plan.ao.monotone_phase_steps ? 1 : 0) << "\n";
  return out.str();
}

SystemConfig configured_for(const ExperimentPlan& plan, double value) {
  SystemConfig cfg = plan.base;
  double snr_db = plan.snr_db;
  switch (plan.axis) {
    case SweepAxis::SnrDb: snr_db = value; break;
    case SweepAxis::MetaAtoms: cfg.atoms_per_layer = static_cast<int>(value); break;
    case SweepAxis::Layers: cfg.layers = static_cast<int>(value); break;
    case SweepAxis::RfChains: cfg.rf_chains = static_cast<int>(value); break;
    case SweepAxis::NumUes: cfg.num_ues = static_cast<int>(value); break;
    case SweepAxis::Fronthaul: cfg.fronthaul_capacity = value; break;
  }
  const double power = cfg.uplink_noise * std::pow(10.0, snr_db / 10.0);
  cfg.uplink_power = power;
  cfg.ap_power = power;
  if (plan.axis == SweepAxis::NumUes) {
    cfg.uplink_weights = RealVec();
    cfg.downlink_weights = RealVec();
  }
  return cfg;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string results_header() {
  return "sweep_axis,sweep_value,scheme,direction,trial,seed,sum_rate_bpshz,runtime_ms,outer_iters,"
         "min_fronthaul_slack,min_power_slack,scenario_hash";
}

std::string format_row(const ResultRow& row) {
  std::ostringstream out;
  out << row.sweep_axis << ',' << format_double(row.sweep_value) << ',' << row.scheme << ','
      << row.direction << ',' << row.trial << ',' << row.seed << ',';
  if (row.error.empty()) {
    out << format_double(row.sum_rate) << ',' << format_double(row.runtime_ms) << ',' << row.outer_iters
        << ',' << format_double(row.min_fronthaul_slack) << ',' << format_double(row.min_power_slack)
        << ',' << row.scenario_hash;
  } else {
    out << "error:" << row.error << ",0,0,0,0," << row.scenario_hash;
  }
  return out.str();
}

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write trace file: " + path);
  out << "iter,sum_rate_bpshz,min_fronthaul_slack,min_power_slack,elapsed_ms\n";
  for (const auto& row : trace.rows)
    out << row.iteration << ',' << format_double(row.sum_rate) << ','
        << format_double(row.min_fronthaul_slack) << ',' << format_double(row.min_power_slack) << ','
        << format_double(row.elapsed_ms) << "\n";
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string scenario_hash(const ChannelRealization& channels) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& per_ue : {std::cref(channels.uplink), std::cref(channels.downlink)})
    for (const auto& per_ap : per_ue.get())
      for (const auto& vec : per_ap)
        h = fnv1a(vec.data(), sizeof(cplx) * vec.size(), h);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Cell {
  std::size_t value_index;
  int trial;
  std::size_t scheme_index;
  Direction direction;
};

}  // namespace

ResultTable run_plan(const ExperimentPlan& plan) {
  plan.validate();

  std::vector<Direction> directions;
  if (plan.direction == DirectionMode::Uplink || plan.direction == DirectionMode::Both)
    directions.push_back(Direction::Uplink);
  if (plan.direction == DirectionMode::Downlink || plan.direction == DirectionMode::Both)
    directions.push_back(Direction::Downlink);

  std::vector<Cell> cells;
  for (std::size_t vi = 0; vi < plan.values.size(); ++vi)
    for (int trial = 0; trial < plan.trials; ++trial)
      for (std::size_t si = 0; si < plan.schemes.size(); ++si)
        for (Direction dir : directions) cells.push_back({vi, trial, si, dir});

  ResultTable table;
  table.rows.resize(cells.size());

  const bool incremental = !plan.output_dir.empty();
  std::ofstream csv;
  if (incremental) {
    fs::create_directories(plan.output_dir);
    csv.open(fs::path(plan.output_dir) / "results.csv", std::ios::trunc);
    if (!csv) throw ConfigError("cannot write results.csv in " + plan.output_dir);
    csv << results_header() << "\n";
  }

  std::mutex flush_mutex;
  std::size_t flushed = 0;
  std::vector<char> done(cells.size(), 0);
  const auto flush_ready = [&]() {
    while (flushed < cells.size() && done[flushed]) {
      if (incremental) csv << format_row(table.rows[flushed]) << "\n" << std::flush;
      ++flushed;
    }
  };

  const auto run_cell = [&](std::size_t index) {
    const Cell& cell = cells[index];
    const SchemeSpec& scheme = plan.schemes[cell.scheme_index];
    ResultRow row;
    row.sweep_axis = to_string(plan.axis);
    row.sweep_value = plan.values[cell.value_index];
    row.scheme = scheme.name();
    row.direction = to_string(cell.direction);
    row.trial = cell.trial;
    row.seed = plan.seed;

    try {
      const SystemConfig cfg = configured_for(plan, plan.values[cell.value_index]);
      const SimGeometry geometry =
          SimGeometry::regular(cfg.wavelength(), cfg.layers, cfg.atoms_per_layer, cfg.rf_chains);
      const SimStack stack =
          build_stack(geometry, derive_seed(plan.seed, {0x57ACULL, cell.value_index}));

      Rng channel_rng(derive_seed(plan.seed, {0xC0DEULL, cell.value_index, static_cast<std::uint64_t>(cell.trial)}));
      const Scenario scenario = sample_scenario(cfg, channel_rng);
      const RealMat covariance = spatial_covariance(geometry);
      const ChannelRealization channels = sample_channels(cfg, scenario, covariance, channel_rng);
      row.scenario_hash = scenario_hash(channels);

      if (plan.write_channel_dumps && !plan.output_dir.empty() && cell.scheme_index == 0 &&
          cell.direction == directions.front()) {
        const fs::path dir = fs::path(plan.output_dir) / "channels";
        fs::create_directories(dir);
        write_channels_csv(channels,
                           (dir / (std::string(to_string(plan.axis)) + "_" +
                                   format_double(plan.values[cell.value_index]) + "_trial" +
                                   std::to_string(cell.trial) + ".csv"))
                               .string());
      }

      AoSettings ao = plan.ao;
      ao.seed = derive_seed(plan.seed, {0x1217ULL, cell.value_index, static_cast<std::uint64_t>(cell.trial)});

      const auto begin = std::chrono::steady_clock::now();
      const SchemeResult result = run_scheme(cfg, channels, stack, scheme, cell.direction, ao);
      const double wall =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - begin).count();

      row.sum_rate = result.sum_rate;
      row.runtime_ms = plan.timing == TimingMode::Wall ? wall : 0.0;
      row.outer_iters = result.trace.outer_iterations();
      row.min_fronthaul_slack = result.min_fronthaul_slack;
      row.min_power_slack = result.min_power_slack;

      if (plan.write_traces && !plan.output_dir.empty()) {
        const fs::path dir = fs::path(plan.output_dir) / "traces" /
                             (std::string(to_string(plan.axis)) + "_" +
                              format_double(plan.values[cell.value_index]) + "_" +
                              to_string(cell.direction));
        fs::create_directories(dir);
        write_trace_csv(result.trace,
                        (dir / ("trace_" + scheme.name() + "_" + std::to_string(cell.trial) + ".csv")).string());
      }
    } catch (const std::exception& err) {
      row.error = err.what();
      std::replace(row.error.begin(), row.error.end(), ',', ';');
      std::replace(row.error.begin(), row.error.end(), '\n', ' ');
    }

    std::lock_guard<std::mutex> lock(flush_mutex);
    table.rows[index] = std::move(row);
    done[index] = 1;
    flush_ready();
  };

  if (plan.workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int count = std::min<int>(plan.workers, static_cast<int>(cells.size()));
    pool.reserve(count);
    for (int w = 0; w < count; ++w)
      pool.emplace_back([&]() {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          run_cell(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  return table;
}

void emit_results(const ResultTable& table, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "results.csv", std::ios::trunc);
  if (!csv) throw ConfigError("cannot write results.csv in " + dir);
  csv << results_header() << "\n";
  for (const auto& row : table.rows) csv << format_row(row) << "\n";
}

}  // namespace simcf
