#include "simcf/sim_physics.hpp"

#include <cmath>

namespace simcf {

namespace {

// Near-square factorization r x c with r*c = m and r <= c.
std::pair<int, int> grid_shape(int m) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(m)));
  while (r > 1 && m % r != 0) --r;
  return {r, m / r};
}

std::vector<Vec3> planar_grid(int rows, int cols, double pitch, double z) {
  std::vector<Vec3> points;
  points.reserve(static_cast<std::size_t>(rows) * cols);
  const double x0 = -0.5 * (cols - 1) * pitch;
  const double y0 = -0.5 * (rows - 1) * pitch;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      points.emplace_back(x0 + c * pitch, y0 + r * pitch, z);
  return points;
}

}  // namespace

SimGeometry SimGeometry::regular(double wavelength, int layers, int atoms_per_layer, int rf_chains) {
  SimGeometry g;
  g.wavelength = wavelength;
  g.atom_area = 0.25 * wavelength * wavelength;
  g.layers = layers;
  g.atoms_per_layer = atoms_per_layer;
  auto [rows, cols] = grid_shape(atoms_per_layer);
  g.grid_rows = rows;
  g.grid_cols = cols;
  g.thickness = 5.0 * wavelength;
  g.layer_spacing = g.thickness / layers;
  g.rf_chains = rf_chains;

  const double pitch = 0.5 * wavelength;
  g.atom_positions.resize(layers);
  for (int l = 0; l < layers; ++l)
    g.atom_positions[l] = planar_grid(rows, cols, pitch, (l + 1) * g.layer_spacing);

  auto [arow, acol] = grid_shape(rf_chains);
  g.antenna_positions = planar_grid(arow, acol, pitch, 0.0);

  g.validate();
  return g;
}

void SimGeometry::validate() const {
  if (wavelength <= 0.0) throw GeometryError("wavelength must be positive");
  if (atom_area <= 0.0) throw GeometryError("atom area must be positive");
  if (layers < 1) throw GeometryError("at least one metasurface layer required");
  if (atoms_per_layer < 1) throw GeometryError("at least one meta-atom required");
  if (grid_rows * grid_cols != atoms_per_layer) throw GeometryError("grid shape does not match atom count");
  if (layer_spacing <= 0.0) throw GeometryError("layer spacing must be positive");
  if (rf_chains < 1) throw GeometryError("at least one RF chain required");
  if (static_cast<int>(antenna_positions.size()) != rf_chains)
    throw GeometryError("antenna position count does not match RF chains");
  if (static_cast<int>(atom_positions.size()) != layers)
    throw GeometryError("atom position layer count mismatch");
  for (const auto& layer : atom_positions)
    if (static_cast<int>(layer.size()) != atoms_per_layer)
      throw GeometryError("atom position count mismatch");
}

cplx diffraction_coefficient(const SimGeometry& geometry, const Vec3& src, const Vec3& dst) {
  const double d = (dst - src).norm();
  if (d <= 0.0) throw GeometryError("transmission distance must be positive");
  const double lambda = geometry.wavelength;
  const double amp = geometry.atom_area * geometry.layer_spacing / (d * d);
  const cplx lobe(1.0 / (kTwoPi * d), -1.0 / lambda);
  return amp * lobe * std::polar(1.0, kTwoPi * d / lambda);
}

SimStack build_stack(const SimGeometry& geometry, std::uint64_t seed) {
  geometry.validate();
  SimStack stack;
  stack.geometry = geometry;

  const int m = geometry.atoms_per_layer;
  const int n = geometry.rf_chains;

  stack.antenna_coupling.resize(n, m);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < m; ++b)
      stack.antenna_coupling(a, b) =
          diffraction_coefficient(geometry, geometry.atom_positions[0][b], geometry.antenna_positions[a]);

  stack.interlayer.reserve(std::max(0, geometry.layers - 1));
  for (int l = 1; l < geometry.layers; ++l) {
    Mat w(m, m);
    for (int row = 0; row < m; ++row)
      for (int col = 0; col < m; ++col)
        w(row, col) = diffraction_coefficient(geometry, geometry.atom_positions[l - 1][col],
                                              geometry.atom_positions[l][row]);
    stack.interlayer.push_back(std::move(w));
  }

  Rng rng(derive_seed(seed, {0x51A9ULL}));
  stack.initial_uplink_phases.resize(geometry.layers);
  stack.initial_downlink_phases.resize(geometry.layers);
  for (int l = 0; l < geometry.layers; ++l)
    stack.initial_uplink_phases[l] = rng.uniform_vector(m, 0.0, kTwoPi);
  for (int l = 0; l < geometry.layers; ++l)
    stack.initial_downlink_phases[l] = rng.uniform_vector(m, 0.0, kTwoPi);
  return stack;
}

SimStack identity_stack(int atoms) {
  SimStack stack;
  SimGeometry g;
  g.wavelength = 1.0;
  g.atom_area = 0.25;
  g.layers = 1;
  g.atoms_per_layer = atoms;
  auto [rows, cols] = grid_shape(atoms);
  g.grid_rows = rows;
  g.grid_cols = cols;
  g.thickness = 1.0;
  g.layer_spacing = 1.0;
  g.rf_chains = atoms;
  g.atom_positions = {planar_grid(rows, cols, 0.5, 1.0)};
  g.antenna_positions = planar_grid(rows, cols, 0.5, 0.0);
  stack.geometry = g;
  stack.antenna_coupling = Mat::Identity(atoms, atoms);
  stack.initial_uplink_phases = {Eigen::VectorXd::Zero(atoms)};
  stack.initial_downlink_phases = {Eigen::VectorXd::Zero(atoms)};
  return stack;
}

std::vector<Vec> unit_diagonals(const std::vector<Eigen::VectorXd>& phases) {
  std::vector<Vec> diags(phases.size());
  for (std::size_t l = 0; l < phases.size(); ++l) {
    diags[l].resize(phases[l].size());
    for (Eigen::Index i = 0; i < phases[l].size(); ++i)
      diags[l](i) = std::polar(1.0, phases[l](i));
  }
  return diags;
}

namespace {

void check_layers(const SimStack& stack, const std::vector<Vec>& diags) {
  if (static_cast<int>(diags.size()) != stack.geometry.layers)
    throw DimensionError("layer count mismatch between stack and phase profile");
  for (const auto& d : diags)
    if (d.size() != stack.geometry.atoms_per_layer)
      throw DimensionError("atom count mismatch in phase profile");
}

}  // namespace

Mat wave_transfer(const SimStack& stack, const std::vector<Vec>& layer_diagonals, Direction direction) {
  check_layers(stack, layer_diagonals);
  const int levels = stack.geometry.layers;
  Mat g;
  if (direction == Direction::Uplink) {
    // Phi_1 W_2 Phi_2 ... W_L Phi_L, accumulated right to left
    g = Mat(layer_diagonals[levels - 1].asDiagonal());
    for (int l = levels - 1; l >= 1; --l) {
      g = stack.interlayer[l - 1] * g;
      g = Mat(layer_diagonals[l - 1].asDiagonal()) * g;
    }
  } else {
    // Phi_L W_L ... W_2 Phi_1, accumulated right to left
    g = Mat(layer_diagonals[0].asDiagonal());
    for (int l = 1; l < levels; ++l) {
      g = stack.interlayer[l - 1] * g;
      g = Mat(layer_diagonals[l].asDiagonal()) * g;
    }
  }
  return g;
}

Mat wave_transfer(const SimStack& stack, const std::vector<Eigen::VectorXd>& phases, Direction direction) {
  return wave_transfer(stack, unit_diagonals(phases), direction);
}

LayerPartials partial_products(const SimStack& stack, const std::vector<Vec>& layer_diagonals,
                               int layer, Direction direction) {
  check_layers(stack, layer_diagonals);
  const int levels = stack.geometry.layers;
  if (layer < 1 || layer > levels) throw DimensionError("layer index out of range");
  const int m = stack.geometry.atoms_per_layer;

  LayerPartials parts;
  parts.antenna_side = Mat::Identity(m, m);
  parts.air_side = Mat::Identity(m, m);

  if (direction == Direction::Uplink) {
    // antenna side: Phi_1 W_2 ... Phi_{l-1} W_l ; air side: W_{l+1} Phi_{l+1} ... W_L Phi_L
    for (int l = layer; l >= 2; --l) {
      parts.antenna_side = stack.interlayer[l - 2] * parts.antenna_side;
      parts.antenna_side = Mat(layer_diagonals[l - 2].asDiagonal()) * parts.antenna_side;
    }
    for (int l = levels; l >= layer + 1; --l) {
      parts.air_side = Mat(layer_diagonals[l - 1].asDiagonal()) * parts.air_side;
      parts.air_side = stack.interlayer[l - 2] * parts.air_side;
    }
  } else {
    // antenna side: W_l Phi_{l-1} ... W_2 Phi_1 ; air side: Phi_L W_L ... Phi_{l+1} W_{l+1}
    for (int l = 1; l <= layer - 1; ++l) {
      parts.antenna_side = Mat(layer_diagonals[l - 1].asDiagonal()) * parts.antenna_side;
      parts.antenna_side = stack.interlayer[l - 1] * parts.antenna_side;
    }
    for (int l = layer + 1; l <= levels; ++l) {
      parts.air_side = stack.interlayer[l - 2] * parts.air_side;
      parts.air_side = Mat(layer_diagonals[l - 1].asDiagonal()) * parts.air_side;
    }
  }
  return parts;
}

}  // namespace simcf
