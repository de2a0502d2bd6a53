#pragma once

#include "simcf/channel.hpp"

namespace simcf {

struct UplinkState {
  RealVec powers;               // p_k in [0, P_U]
  std::vector<Mat> quant_cov;   // Omega_i, Hermitian PD N x N per AP
  Mat combiners;                // u_k columns, (N K_A) x K_U
  PhaseProfiles phases;         // theta^ul per AP per layer
};

struct DownlinkState {
  Mat beamformers;              // v_k columns, (N K_A) x K_U
  std::vector<Mat> quant_cov;   // Omega_i per AP
  PhaseProfiles phases;         // theta^dl per AP per layer
};

// log2 det of a Hermitian positive-definite matrix via its eigenvalues;
// throws NumericError on a non-positive spectrum.
double log2_det_hermitian(const Mat& a);

// Interference-plus-noise power seen by UE k's combiner.
double uplink_interference(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ue);

double uplink_user_rate(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ue);
double uplink_fronthaul_load(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ap);

double downlink_interference(const SystemConfig& config, const Mat& eff, const DownlinkState& state, int ue);
double downlink_user_rate(const SystemConfig& config, const Mat& eff, const DownlinkState& state, int ue);
double downlink_fronthaul_load(const SystemConfig& config, const DownlinkState& state, int ap);
double downlink_power_usage(const SystemConfig& config, const DownlinkState& state, int ap);

double weighted_sum_rate(const SystemConfig& config, const Mat& eff, const UplinkState& state);
double weighted_sum_rate(const SystemConfig& config, const Mat& eff, const DownlinkState& state);

// Convenience overloads that compose the effective channels internally.
double uplink_user_rate(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const UplinkState& state, int ue);
double uplink_fronthaul_load(const SystemConfig& config, const ChannelRealization& channels,
                             const SimStack& stack, const UplinkState& state, int ap);
double downlink_user_rate(const SystemConfig& config, const ChannelRealization& channels,
                          const SimStack& stack, const DownlinkState& state, int ue);
double weighted_sum_rate(const SystemConfig& config, const ChannelRealization& channels,
                         const SimStack& stack, const UplinkState& state);
double weighted_sum_rate(const SystemConfig& config, const ChannelRealization& channels,
                         const SimStack& stack, const DownlinkState& state);

// Smallest fronthaul slack C_F - g_i over APs.
double min_fronthaul_slack(const SystemConfig& config, const Mat& eff, const UplinkState& state);
double min_fronthaul_slack(const SystemConfig& config, const DownlinkState& state);
// Smallest per-AP power slack P_A - usage (downlink) or box slack on p (uplink).
double min_power_slack(const SystemConfig& config, const UplinkState& state);
double min_power_slack(const SystemConfig& config, const DownlinkState& state);

}  // namespace simcf
