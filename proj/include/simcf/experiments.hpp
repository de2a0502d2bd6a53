#pragma once

#include "simcf/baselines.hpp"

#include <iosfwd>
#include <string>

namespace simcf {

enum class SweepAxis { SnrDb, MetaAtoms, Layers, RfChains, NumUes, Fronthaul };
enum class DirectionMode { Uplink, Downlink, Both };
enum class TimingMode { Wall, None };

const char* to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

struct ExperimentPlan {
  SystemConfig base;
  double snr_db = 15.0;
  SweepAxis axis = SweepAxis::SnrDb;
  std::vector<double> values;
  std::vector<SchemeSpec> schemes;
  DirectionMode direction = DirectionMode::Both;
  int trials = 20;
  std::uint64_t seed = 1;
  int workers = 1;
  bool write_traces = false;
  bool write_channel_dumps = false;
  TimingMode timing = TimingMode::Wall;
  std::string output_dir = "results";
  AoSettings ao;

  void validate() const;
};

ExperimentPlan parse_plan(const std::string& path);
ExperimentPlan parse_plan_text(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_plan(const ExperimentPlan& plan);

struct ResultRow {
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::string scheme;
  std::string direction;
  int trial = 0;
  std::uint64_t seed = 0;
  double sum_rate = 0.0;
  double runtime_ms = 0.0;
  int outer_iters = 0;
  double min_fronthaul_slack = 0.0;
  double min_power_slack = 0.0;
  std::string scenario_hash;
  std::string error;  // empty on success
};

struct ResultTable {
  std::vector<ResultRow> rows;
};

// Applies one sweep value to a copy of the base configuration.
SystemConfig configured_for(const ExperimentPlan& plan, double value);

// Runs every (sweep value x scheme x trial x direction) cell. Channels are
// shared across schemes at the same (value, trial) for paired comparisons.
// Rows are appended to <output_dir>/results.csv incrementally when
// output_dir is non-empty; traces are written when write_traces is set.
ResultTable run_plan(const ExperimentPlan& plan);

// Writes results.csv (and leaves trace files in place). Idempotent.
void emit_results(const ResultTable& table, const std::string& dir);

std::string format_double(double v);
std::string results_header();
std::string format_row(const ResultRow& row);

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path);

}  // namespace simcf
