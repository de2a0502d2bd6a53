#pragma once

#include "simcf/metrics.hpp"

namespace simcf {

// Fractional-programming auxiliaries: per-UE SINR estimate (tau) and scaled
// matched weight (omega), per-AP received-covariance estimate (Xi), and the
// unit-modulus targets (Psi) used by the uplink penalty loop.
struct AuxiliaryState {
  RealVec sinr;                                 // tau_k >= 0
  Vec weight;                                   // omega_k
  std::vector<Mat> load_cov;                    // Xi_i, Hermitian PD
  std::vector<std::vector<Vec>> phase_target;   // Psi per AP per layer, unit-modulus diagonals
};

// --- uplink ---

AuxiliaryState uplink_rate_aux(const SystemConfig& config, const Mat& eff, const UplinkState& state);

// Quadratic lower bound on UE k's rate, valid for any admissible auxiliaries
// and tight at the ones from uplink_rate_aux.
double uplink_rate_surrogate(const SystemConfig& config, const Mat& eff, const UplinkState& state,
                             const AuxiliaryState& aux, int ue);

// Tight received-signal covariance estimate for AP i.
Mat uplink_load_cov(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ap);

// Fenchel upper bound on AP i's fronthaul load; tight at uplink_load_cov.
double uplink_load_surrogate(const SystemConfig& config, const Mat& eff, const UplinkState& state,
                             const Mat& load_cov, int ap);

Mat mmse_combiners(const SystemConfig& config, const Mat& eff, const UplinkState& state);

// --- downlink ---

AuxiliaryState downlink_rate_aux(const SystemConfig& config, const Mat& eff, const DownlinkState& state);

double downlink_rate_surrogate(const SystemConfig& config, const Mat& eff, const DownlinkState& state,
                               const AuxiliaryState& aux, int ue);

Mat downlink_load_cov(const SystemConfig& config, const DownlinkState& state, int ap);

double downlink_load_surrogate(const SystemConfig& config, const DownlinkState& state,
                               const Mat& load_cov, int ap);

// --- layer-wise quadratic forms (uplink wave subproblem) ---

// Coefficients of the surrogates as functions of the stacked layer diagonal
// phi (all APs, length M*K_A for the objective; per-AP length M for the
// loads): f_k(phi) = constant + 2 Re(lin^H phi) - phi^H quad phi with quad
// PSD, and g_i(phi_i) = constant + phi_i^H quad phi_i.
struct LayerForms {
  struct Objective {
    double constant = 0.0;
    Vec lin;
    Mat quad;
  };
  struct Fronthaul {
    double constant = 0.0;
    Mat quad;
  };
  std::vector<Objective> per_ue;
  std::vector<Fronthaul> per_ap;
  // per-(UE,AP) maps phi_i -> effective-channel block: T A diag(B h)
  std::vector<std::vector<Mat>> channel_maps;

  double objective_value(const RealVec& weights, const Vec& phi) const;
  double fronthaul_value(int ap, const Vec& phi_ap) const;
};

// Relaxed per-AP layer diagonals of one layer across APs (complex entries).
std::vector<Vec> layer_diagonal(const std::vector<std::vector<Vec>>& diagonals, int layer);

LayerForms layer_surrogates(const SystemConfig& config, const ChannelRealization& channels,
                            const SimStack& stack, const UplinkState& state,
                            const std::vector<std::vector<Vec>>& diagonals, const AuxiliaryState& aux,
                            int layer);

// --- analytic downlink phase gradient ---

// d(weighted sum rate)/d(theta_{i,l,m}), same shape as the phase profiles.
PhaseProfiles downlink_phase_gradient(const SystemConfig& config, const ChannelRealization& channels,
                                      const SimStack& stack, const DownlinkState& state);

}  // namespace simcf
