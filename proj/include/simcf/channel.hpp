#pragma once

#include "simcf/sim_physics.hpp"
#include "simcf/types.hpp"

#include <iosfwd>
#include <string>

namespace simcf {

struct SystemConfig {
  int num_aps = 3;            // K_A
  int num_ues = 6;            // K_U
  int rf_chains = 2;          // N
  int atoms_per_layer = 16;   // M
  int layers = 2;             // L
  double fronthaul_capacity = 5.0;  // C_F, bps/Hz
  double uplink_power = 31.6227766016838;    // P_U, linear (15 dB over unit noise)
  double ap_power = 31.6227766016838;        // P_A, linear
  double uplink_noise = 1.0;    // sigma^2_ul
  double downlink_noise = 1.0;  // sigma^2_dl
  RealVec uplink_weights;       // alpha_k, defaults to ones
  RealVec downlink_weights;
  double pathloss_ref_distance = 30.0;  // d_0, meters
  double pathloss_ref_gain = 10.0;      // beta_0, linear
  double pathloss_exponent = 3.0;
  double coverage_radius = 100.0;       // hexagon circumradius, meters
  double carrier_frequency = 28e9;      // Hz
  std::uint64_t seed = 1;

  double wavelength() const { return kSpeedOfLight / carrier_frequency; }
  RealVec weights(Direction d) const;
  void validate() const;
};

struct Scenario {
  std::vector<Eigen::Vector2d> ap_positions;
  std::vector<Eigen::Vector2d> ue_positions;
  RealMat pathloss;  // K_U x K_A, beta_{k,i}
};

struct ChannelRealization {
  // indexed [ue][ap], each an M-vector
  std::vector<std::vector<Vec>> uplink;
  std::vector<std::vector<Vec>> downlink;
};

// UEs uniform over the hexagon, APs equi-spaced along its boundary,
// pathloss beta_0 (d/d_0)^(-exponent).
Scenario sample_scenario(const SystemConfig& config, Rng& rng);

// Isotropic-scattering covariance over one layer's atom grid:
// R(n,n') = sinc(2 d / lambda), unit diagonal.
RealMat spatial_covariance(const SimGeometry& geometry);

// Symmetric square root after flooring eigenvalues.
RealMat covariance_sqrt(const RealMat& covariance, double eigenvalue_floor = 1e-10);

// Correlated Rayleigh draws h = sqrt(beta) R^{1/2} g; uplink and downlink
// realizations are independent.
ChannelRealization sample_channels(const SystemConfig& config, const Scenario& scenario,
                                   const RealMat& covariance, Rng& rng);

// Stacked effective channels, one column per UE of length N*K_A.
// Uplink: block i is T G_i h_{k,i}. Downlink: block i is (G_i T^T)^H h_{k,i}.
Mat effective_channels(const SystemConfig& config, const ChannelRealization& channels,
                       const SimStack& stack, const PhaseProfiles& phases, Direction direction);

// Same, but with precomputed per-AP cascade matrices.
Mat effective_channels(const SystemConfig& config, const ChannelRealization& channels,
                       const SimStack& stack, const std::vector<Mat>& cascades, Direction direction);

// Per-AP cascade matrices G_i for the given per-AP phase profiles.
std::vector<Mat> ap_cascades(const SimStack& stack, const PhaseProfiles& phases, Direction direction);
std::vector<Mat> ap_cascades(const SimStack& stack, const std::vector<std::vector<Vec>>& diagonals,
                             Direction direction);

bool inside_hexagon(const Eigen::Vector2d& p, double circumradius);

// Flat CSV dump of a realization (one row per (direction, ue, ap), complex
// entries as re/im column pairs) for cross-implementation comparisons.
void write_channels_csv(const ChannelRealization& channels, std::ostream& out);
void write_channels_csv(const ChannelRealization& channels, const std::string& path);

}  // namespace simcf
