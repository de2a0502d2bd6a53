#pragma once

#include "simcf/fp_transforms.hpp"

#include <functional>
#include <string>

namespace simcf {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverSettings {
  double barrier_init = 1.0;          // t0
  double barrier_growth = 10.0;       // kappa
  double gradient_tol = 1e-6;         // eps_g, inner stationarity
  double gap_tol = 1e-6;              // eps_gap, outer m/t target
  int max_inner = 250;
  int max_outer = 12;
  double backtrack_shrink = 0.5;      // rho
  double sufficient_decrease = 1e-4;  // c
  std::string trace_path;             // per-solve CSV when non-empty
};

// Concave maximization over a real vector that packs complex variables as
// interleaved (re, im) pairs and Hermitian blocks as diagonal + lower
// triangle. Inequality constraints are smooth convex functions kept strictly
// feasible by a log barrier; box/disk bounds and PSD floors are enforced by
// projection after every step.
struct ConcaveProgram {
  int dim = 0;
  std::function<double(const RealVec&)> objective;
  std::function<RealVec(const RealVec&)> objective_gradient;

  struct Constraint {
    std::function<double(const RealVec&)> value;  // feasible iff value <= 0
    std::function<RealVec(const RealVec&)> gradient;
    std::string label;
  };
  std::vector<Constraint> constraints;

  RealVec lower;  // box bounds, +-inf where absent
  RealVec upper;

  struct DiskBound {
    int re_index = 0;
    int im_index = 0;
    double radius = 1.0;
  };
  std::vector<DiskBound> disks;

  struct PsdBlock {
    int offset = 0;  // start of the packed Hermitian parameters
    int side = 0;    // matrix dimension
    double floor = 0.0;
  };
  std::vector<PsdBlock> psd_blocks;

  RealVec start;
};

struct SolveResult {
  RealVec x;
  double objective = 0.0;
  RealVec slacks;              // -constraint values at the solution
  bool reached_tolerance = true;
  int iterations = 0;
};

SolveResult solve(const ConcaveProgram& program, const SolverSettings& settings);

// --- packed-variable helpers ---

// Hermitian block layout: n real diagonal entries, then (re, im) pairs of the
// strict lower triangle scanned column by column.
int hermitian_param_count(int side);
Mat unpack_hermitian(const RealVec& x, int offset, int side);
void pack_hermitian(const Mat& h, RealVec& x, int offset);
// Accumulates d f / d params for f with matrix gradient D (Hermitian),
// where df = Re tr(D^H dOmega).
void accumulate_hermitian_gradient(const Mat& d, RealVec& grad, int offset);

Vec unpack_complex(const RealVec& x, int offset, int count);
void pack_complex(const Vec& v, RealVec& x, int offset);
// Accumulates df = 2 Re(g^H dv) onto interleaved (re, im) parameters.
void accumulate_complex_gradient(const Vec& g, RealVec& grad, int offset);

// --- subproblem packings ---

struct PackOptions {
  bool wave_only = false;   // nonnegative real digital stage
  bool equal_rate = false;  // diagonal quantization with per-element rate floors
};

// Equal-rate scaling constant 1/(2^(C_F/N) - 1).
double equal_rate_scale(const SystemConfig& config);

struct UplinkDigitalPack {
  ConcaveProgram program;
  int power_offset = 0;
  int comp_offset = 0;
  bool equal_rate = false;
  int chains = 0, aps = 0, ues = 0;
  void apply(const RealVec& x, UplinkState& state) const;
};

UplinkDigitalPack pack_uplink_digital(const SystemConfig& config, const Mat& eff,
                                      const UplinkState& state, const AuxiliaryState& aux,
                                      const PackOptions& options);

// Wave-only combiner step: nonnegative real combiners for fixed (p, Omega).
struct UplinkCombinerPack {
  ConcaveProgram program;
  int chains = 0, aps = 0, ues = 0;
  void apply(const RealVec& x, UplinkState& state) const;
};

UplinkCombinerPack pack_uplink_combiner(const SystemConfig& config, const Mat& eff,
                                        const UplinkState& state, const AuxiliaryState& aux);

struct DownlinkDigitalPack {
  ConcaveProgram program;
  int beam_offset = 0;
  int comp_offset = 0;
  bool equal_rate = false;
  int chains = 0, aps = 0, ues = 0;
  void apply(const RealVec& x, DownlinkState& state) const;
};

DownlinkDigitalPack pack_downlink_digital(const SystemConfig& config, const Mat& eff,
                                          const DownlinkState& state, const AuxiliaryState& aux,
                                          const PackOptions& options);

struct WaveLayerPack {
  ConcaveProgram program;
  int layer = 1;
  int atoms = 0, aps = 0;
  void apply(const RealVec& x, std::vector<std::vector<Vec>>& diagonals) const;
};

// Layer subproblem over the relaxed diagonals of one layer across APs; the
// penalty couples the diagonals to the unit-modulus targets in aux.
WaveLayerPack pack_wave_layer(const SystemConfig& config, const LayerForms& forms,
                              const UplinkState& state, const std::vector<std::vector<Vec>>& diagonals,
                              const AuxiliaryState& aux, int layer, double penalty,
                              const PackOptions& options);

// Inflates each violating AP's quantization covariance by the smallest
// uniform factor >= 1 restoring the exact fronthaul load below capacity
// (absolute margin), bisected to 1e-9 relative width. Equal-rate states get
// their diagonal entries raised to the rate floors instead.
void restore_uplink_feasibility(const SystemConfig& config, const Mat& eff, UplinkState& state,
                                const PackOptions& options, double margin = 1e-6);

// Per-element quantization floors of the equal-rate scheme.
RealVec equal_rate_noise_floor(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ap);
RealVec equal_rate_noise_floor(const SystemConfig& config, const DownlinkState& state, int ap);

// Exact maximizer of -tr(coeff * Omega) over Hermitian PD Omega subject to
// tr(xi_inv Omega)/ln2 - log2 det(Omega) <= budget (and optionally
// tr(Omega) <= power_budget): KKT stationarity gives
// Omega(mu) = (xi_inv + (ln2/mu) (coeff + nu I))^-1 with the multipliers
// found by bisection. Returns the incumbent when no feasible improvement
// exists.
Mat optimal_quant_cov(const Mat& xi_inv, const Mat& coeff, double budget, const Mat& incumbent,
                      double power_budget = -1.0);

}  // namespace simcf
