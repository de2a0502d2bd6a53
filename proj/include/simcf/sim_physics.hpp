#pragma once

#include "simcf/types.hpp"

namespace simcf {

// Fixed geometry of one stacked-metasurface unit plus the RF-chain array
// behind it. Meta-atom layers are uniform planar grids stacked coaxially;
// layer 1 faces the antennas, layer L faces the air interface.
struct SimGeometry {
  double wavelength = 0.0;
  double atom_area = 0.0;      // defaults to (wavelength/2)^2
  int layers = 1;              // L
  int atoms_per_layer = 1;     // M = grid_rows * grid_cols
  int grid_rows = 1;
  int grid_cols = 1;
  double thickness = 0.0;      // defaults to 5 * wavelength
  double layer_spacing = 0.0;  // thickness / layers
  int rf_chains = 1;           // N

  std::vector<Vec3> antenna_positions;             // N points
  std::vector<std::vector<Vec3>> atom_positions;   // layers x M points

  // Builds the canonical geometry: square-ish atom grid at half-wavelength
  // pitch, antennas on a centered planar grid at half-wavelength pitch,
  // offset one layer spacing behind layer 1.
  static SimGeometry regular(double wavelength, int layers, int atoms_per_layer, int rf_chains);

  void validate() const;
};

// Fixed propagation matrices of one stack. All APs share the same structure;
// per-AP phase profiles live in the optimizer states.
struct SimStack {
  SimGeometry geometry;
  Mat antenna_coupling;        // N x M, uplink sense; transpose couples downlink
  std::vector<Mat> interlayer; // W_l for l = 2..L (size L-1), maps layer l-1 -> l
  std::vector<Eigen::VectorXd> initial_uplink_phases;   // L x M angles
  std::vector<Eigen::VectorXd> initial_downlink_phases; // L x M angles
};

// Free-space response between two meta-atoms (or atom and antenna) one layer
// spacing apart laterally offset by their grid positions.
cplx diffraction_coefficient(const SimGeometry& geometry, const Vec3& src, const Vec3& dst);

SimStack build_stack(const SimGeometry& geometry, std::uint64_t seed);

// Degenerate single-layer stack with an identity antenna coupling and zero
// phases; the wave stage becomes a pass-through for M-chain processing.
SimStack identity_stack(int atoms);

// e^{j*theta} diagonal entries for every layer of one stack.
std::vector<Vec> unit_diagonals(const std::vector<Eigen::VectorXd>& phases);

// Ordered cascade product for one surface. Uplink composes
// Phi_1 W_2 Phi_2 ... W_L Phi_L; downlink composes the reverse order.
// Diagonals need not be unit modulus (the wave subproblem relaxes them).
Mat wave_transfer(const SimStack& stack, const std::vector<Vec>& layer_diagonals, Direction direction);
Mat wave_transfer(const SimStack& stack, const std::vector<Eigen::VectorXd>& phases, Direction direction);

// Split of the cascade around one layer. `antenna_side` collects the factors
// between the layer and the antenna coupling, `air_side` the factors between
// the layer and the air interface; each is the identity at its boundary
// layer. Uplink: G = antenna_side * Phi_l * air_side. Downlink:
// G = air_side * Phi_l * antenna_side.
struct LayerPartials {
  Mat antenna_side;
  Mat air_side;
};

LayerPartials partial_products(const SimStack& stack, const std::vector<Vec>& layer_diagonals,
                               int layer, Direction direction);

}  // namespace simcf
