#pragma once

#include "simcf/convex_solver.hpp"

namespace simcf {

struct AoSettings {
  int max_outer = 20;
  int max_digital = 30;
  int max_wave = 50;             // penalty rounds (uplink) / ascent steps (downlink)
  double objective_tol = 1e-4;   // relative change stopping rule
  double penalty_init = 1e-3;    // xi_0
  double penalty_growth = 2.0;   // rho > 1
  double step_init = 1.5;        // mu_0
  double step_decay = 0.8;       // beta in (0,1)
  bool monotone_phase_steps = true;  // reject-and-halve on top of the plain ascent rule
  // fraction of fronthaul capacity withheld from the digital stage early on,
  // decayed geometrically per outer iteration, so the wave stage keeps room
  // to grow the received signal before the quantizer re-tightens
  double capacity_headroom = 0.5;
  std::uint64_t seed = 1;
  SolverSettings solver;
};

struct TraceRow {
  int iteration = 0;
  double sum_rate = 0.0;
  double min_fronthaul_slack = 0.0;
  double min_power_slack = 0.0;
  double elapsed_ms = 0.0;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;
  int outer_iterations() const { return static_cast<int>(rows.size()); }
  double final_sum_rate() const { return rows.empty() ? 0.0 : rows.back().sum_rate; }
};

struct RunOptions {
  bool optimize_phases = true;  // false freezes theta (random-phase / fully-digital runs)
  PackOptions pack;
};

UplinkState init_uplink(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, Rng& rng, const PackOptions& options = {});
DownlinkState init_downlink(const SystemConfig& config, const ChannelRealization& channels,
                            const SimStack& stack, Rng& rng, const PackOptions& options = {});

// capacity_scale < 1 tightens the fronthaul cap used by this pass only.
UplinkState uplink_digital_pass(const SystemConfig& config, const ChannelRealization& channels,
                                const SimStack& stack, UplinkState state, const AoSettings& settings,
                                const PackOptions& options = {}, double capacity_scale = 1.0);

// Per-round diagnostics of the penalty loop.
struct WavePassReport {
  std::vector<double> penalty_residuals;  // sum of |Phi - Psi|_F^2 after each round
  int rounds = 0;
};

UplinkState uplink_wave_pass(const SystemConfig& config, const ChannelRealization& channels,
                             const SimStack& stack, UplinkState state, const AoSettings& settings,
                             const PackOptions& options = {}, WavePassReport* report = nullptr);
DownlinkState downlink_digital_pass(const SystemConfig& config, const ChannelRealization& channels,
                                    const SimStack& stack, DownlinkState state, const AoSettings& settings,
                                    const PackOptions& options = {}, double capacity_scale = 1.0);
DownlinkState downlink_wave_pass(const SystemConfig& config, const ChannelRealization& channels,
                                 const SimStack& stack, DownlinkState state, const AoSettings& settings,
                                 const PackOptions& options = {});

std::pair<UplinkState, ConvergenceTrace> run_uplink_ao(const SystemConfig& config,
                                                       const ChannelRealization& channels,
                                                       const SimStack& stack, const AoSettings& settings,
                                                       const RunOptions& options = {});
std::pair<DownlinkState, ConvergenceTrace> run_downlink_ao(const SystemConfig& config,
                                                           const ChannelRealization& channels,
                                                           const SimStack& stack, const AoSettings& settings,
                                                           const RunOptions& options = {});

// Wraps angles into [0, 2pi).
double wrap_angle(double theta);

}  // namespace simcf
