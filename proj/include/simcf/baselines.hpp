#pragma once

#include "simcf/optimizers.hpp"

#include <optional>
#include <string>

namespace simcf {

enum class SchemeTag { Hybrid, FullyDigital, RandomPhase, WaveOnly };

struct SchemeSpec {
  SchemeTag tag = SchemeTag::Hybrid;
  bool equal_rate = false;  // applies to hybrid and fully_digital

  static SchemeSpec parse(const std::string& name);
  std::string name() const;
  void validate() const;
};

struct SchemeResult {
  double sum_rate = 0.0;
  double min_fronthaul_slack = 0.0;
  double min_power_slack = 0.0;
  ConvergenceTrace trace;
  std::optional<UplinkState> uplink;
  std::optional<DownlinkState> downlink;
};

SchemeResult run_fully_digital(const SystemConfig& config, const ChannelRealization& channels,
                               const AoSettings& settings, Direction direction, bool equal_rate = false);
SchemeResult run_random_phase(const SystemConfig& config, const ChannelRealization& channels,
                              const SimStack& stack, const AoSettings& settings, Direction direction,
                              bool equal_rate = false);
SchemeResult run_wave_only(const SystemConfig& config, const ChannelRealization& channels,
                           const SimStack& stack, const AoSettings& settings, Direction direction);
SchemeResult run_hybrid(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const AoSettings& settings, Direction direction,
                        bool equal_rate = false);

SchemeResult run_scheme(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const SchemeSpec& scheme, Direction direction,
                        const AoSettings& settings);

// Fully-digital view of a configuration: every meta-atom gets a dedicated
// chain and the wave stage becomes an identity pass-through.
SystemConfig fully_digital_config(const SystemConfig& config);

}  // namespace simcf
