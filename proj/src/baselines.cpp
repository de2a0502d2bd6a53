#include "simcf/baselines.hpp"

namespace simcf {

SchemeSpec SchemeSpec::parse(const std::string& name) {
  SchemeSpec spec;
  std::string base = name;
  const std::string suffix = "_equal_rate";
  if (base.size() > suffix.size() && base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
    spec.equal_rate = true;
    base = base.substr(0, base.size() - suffix.size());
  }
  if (base == "hybrid")
    spec.tag = SchemeTag::Hybrid;
  else if (base == "fully_digital")
    spec.tag = SchemeTag::FullyDigital;
  else if (base == "random_phase")
    spec.tag = SchemeTag::RandomPhase;
  else if (base == "wave_only")
    spec.tag = SchemeTag::WaveOnly;
  else
    throw ConfigError("unknown scheme: " + name);
  spec.validate();
  return spec;
}

std::string SchemeSpec::name() const {
  std::string base;
  switch (tag) {
    case SchemeTag::Hybrid: base = "hybrid"; break;
    case SchemeTag::FullyDigital: base = "fully_digital"; break;
    case SchemeTag::RandomPhase: base = "random_phase"; break;
    case SchemeTag::WaveOnly: base = "wave_only"; break;
  }
  return equal_rate ? base + "_equal_rate" : base;
}

void SchemeSpec::validate() const {
  if (equal_rate && (tag == SchemeTag::RandomPhase || tag == SchemeTag::WaveOnly))
    throw ConfigError("equal-rate compression applies to hybrid and fully_digital schemes");
}

SystemConfig fully_digital_config(const SystemConfig& config) {
  SystemConfig fd = config;
  fd.rf_chains = config.atoms_per_layer;
  fd.layers = 1;
  return fd;
}

namespace {

SchemeResult finish_uplink(const SystemConfig& config, const ChannelRealization& channels,
                           const SimStack& stack, std::pair<UplinkState, ConvergenceTrace> run) {
  SchemeResult out;
  const Mat eff = effective_channels(config, channels, stack, run.first.phases, Direction::Uplink);
  out.sum_rate = weighted_sum_rate(config, eff, run.first);
  out.min_fronthaul_slack = min_fronthaul_slack(config, eff, run.first);
  out.min_power_slack = min_power_slack(config, run.first);
  out.trace = std::move(run.second);
  out.uplink = std::move(run.first);
  return out;
}

SchemeResult finish_downlink(const SystemConfig& config, const ChannelRealization& channels,
                             const SimStack& stack, std::pair<DownlinkState, ConvergenceTrace> run) {
  SchemeResult out;
  const Mat eff = effective_channels(config, channels, stack, run.first.phases, Direction::Downlink);
  out.sum_rate = weighted_sum_rate(config, eff, run.first);
  out.min_fronthaul_slack = min_fronthaul_slack(config, run.first);
  out.min_power_slack = min_power_slack(config, run.first);
  out.trace = std::move(run.second);
  out.downlink = std::move(run.first);
  return out;
}

SchemeResult dispatch(const SystemConfig& config, const ChannelRealization& channels,
                      const SimStack& stack, const AoSettings& settings, Direction direction,
                      const RunOptions& options) {
  if (direction == Direction::Uplink)
    return finish_uplink(config, channels, stack, run_uplink_ao(config, channels, stack, settings, options));
  return finish_downlink(config, channels, stack, run_downlink_ao(config, channels, stack, settings, options));
}

}  // namespace

SchemeResult run_hybrid(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const AoSettings& settings, Direction direction,
                        bool equal_rate) {
  RunOptions options;
  options.pack.equal_rate = equal_rate;
  return dispatch(config, channels, stack, settings, direction, options);
}

SchemeResult run_fully_digital(const SystemConfig& config, const ChannelRealization& channels,
                               const AoSettings& settings, Direction direction, bool equal_rate) {
  const SystemConfig fd = fully_digital_config(config);
  const SimStack stack = identity_stack(config.atoms_per_layer);
  RunOptions options;
  options.optimize_phases = false;
  options.pack.equal_rate = equal_rate;
  return dispatch(fd, channels, stack, settings, direction, options);
}

SchemeResult run_random_phase(const SystemConfig& config, const ChannelRealization& channels,
                              const SimStack& stack, const AoSettings& settings, Direction direction,
                              bool equal_rate) {
  RunOptions options;
  options.optimize_phases = false;
  options.pack.equal_rate = equal_rate;
  return dispatch(config, channels, stack, settings, direction, options);
}

SchemeResult run_wave_only(const SystemConfig& config, const ChannelRealization& channels,
                           const SimStack& stack, const AoSettings& settings, Direction direction) {
  RunOptions options;
  options.pack.wave_only = true;
  return dispatch(config, channels, stack, settings, direction, options);
}

SchemeResult run_scheme(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const SchemeSpec& scheme, Direction direction,
                        const AoSettings& settings) {
  scheme.validate();
  switch (scheme.tag) {
    case SchemeTag::Hybrid:
      return run_hybrid(config, channels, stack, settings, direction, scheme.equal_rate);
    case SchemeTag::FullyDigital:
      return run_fully_digital(config, channels, settings, direction, scheme.equal_rate);
    case SchemeTag::RandomPhase:
      return run_random_phase(config, channels, stack, settings, direction, scheme.equal_rate);
    case SchemeTag::WaveOnly:
      return run_wave_only(config, channels, stack, settings, direction);
  }
  throw ConfigError("unreachable scheme tag");
}

}  // namespace simcf
