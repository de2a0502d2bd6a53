#include "simcf/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace simcf {

RealVec SystemConfig::weights(Direction d) const {
  const RealVec& w = d == Direction::Uplink ? uplink_weights : downlink_weights;
  if (w.size() == 0) return RealVec::Ones(num_ues);
  return w;
}

void SystemConfig::validate() const {
  if (num_aps < 1 || num_ues < 1 || rf_chains < 1 || atoms_per_layer < 1 || layers < 1)
    throw ConfigError("all dimensions must be at least 1");
  if (fronthaul_capacity <= 0.0) throw ConfigError("fronthaul capacity must be positive");
  if (uplink_power <= 0.0 || ap_power <= 0.0) throw ConfigError("power budgets must be positive");
  if (uplink_noise <= 0.0 || downlink_noise <= 0.0) throw ConfigError("noise powers must be positive");
  if (pathloss_ref_distance <= 0.0 || pathloss_ref_gain <= 0.0)
    throw ConfigError("pathloss reference must be positive");
  if (coverage_radius <= 0.0) throw ConfigError("coverage radius must be positive");
  if (carrier_frequency <= 0.0) throw ConfigError("carrier frequency must be positive");
  for (const RealVec* w : {&uplink_weights, &downlink_weights}) {
    if (w->size() != 0 && w->size() != num_ues) throw ConfigError("weight count must match UE count");
    for (Eigen::Index k = 0; k < w->size(); ++k)
      if ((*w)(k) < 0.0) throw ConfigError("rate weights must be nonnegative");
  }
}

bool inside_hexagon(const Eigen::Vector2d& p, double circumradius) {
  // flat-top hexagon with vertices at angle k*60 degrees
  const double r_in = circumradius * std::sqrt(3.0) / 2.0;
  const double x = std::abs(p.x());
  const double y = std::abs(p.y());
  if (y > r_in) return false;
  // edge between vertex (R,0) and (R/2, r_in): x*r_in + y*R/2 <= R*r_in
  return x * r_in + y * 0.5 * circumradius <= circumradius * r_in + 1e-12;
}

namespace {

// Point at arclength fraction t in [0,1) along the hexagon boundary.
Eigen::Vector2d hexagon_boundary_point(double t, double circumradius) {
  const double s = t * 6.0;
  const int edge = static_cast<int>(std::floor(s)) % 6;
  const double frac = s - std::floor(s);
  const double a0 = edge * kTwoPi / 6.0;
  const double a1 = (edge + 1) * kTwoPi / 6.0;
  const Eigen::Vector2d v0(circumradius * std::cos(a0), circumradius * std::sin(a0));
  const Eigen::Vector2d v1(circumradius * std::cos(a1), circumradius * std::sin(a1));
  return v0 + frac * (v1 - v0);
}

}  // namespace

Scenario sample_scenario(const SystemConfig& config, Rng& rng) {
  config.validate();
  Scenario sc;
  const double radius = config.coverage_radius;

  sc.ap_positions.resize(config.num_aps);
  for (int i = 0; i < config.num_aps; ++i)
    sc.ap_positions[i] = hexagon_boundary_point(static_cast<double>(i) / config.num_aps, radius);

  sc.ue_positions.resize(config.num_ues);
  for (int k = 0; k < config.num_ues; ++k) {
    Eigen::Vector2d p;
    do {
      p.x() = rng.uniform(-radius, radius);
      p.y() = rng.uniform(-radius, radius);
    } while (!inside_hexagon(p, radius));
    sc.ue_positions[k] = p;
  }

  sc.pathloss.resize(config.num_ues, config.num_aps);
  for (int k = 0; k < config.num_ues; ++k)
    for (int i = 0; i < config.num_aps; ++i) {
      // 1 m floor keeps the pathloss finite for UEs sampled onto an AP
      const double d = std::max((sc.ue_positions[k] - sc.ap_positions[i]).norm(), 1.0);
      sc.pathloss(k, i) =
          config.pathloss_ref_gain * std::pow(d / config.pathloss_ref_distance, -config.pathloss_exponent);
    }
  return sc;
}

RealMat spatial_covariance(const SimGeometry& geometry) {
  const auto& atoms = geometry.atom_positions.at(0);
  const int m = geometry.atoms_per_layer;
  RealMat r(m, m);
  for (int a = 0; a < m; ++a) {
    r(a, a) = 1.0;
    for (int b = a + 1; b < m; ++b) {
      const double d = (atoms[a] - atoms[b]).norm();
      const double x = 2.0 * d / geometry.wavelength;
      const double v = std::sin(M_PI * x) / (M_PI * x);
      r(a, b) = v;
      r(b, a) = v;
    }
  }
  return r;
}

RealMat covariance_sqrt(const RealMat& covariance, double eigenvalue_floor) {
  Eigen::SelfAdjointEigenSolver<RealMat> es(covariance);
  if (es.info() != Eigen::Success) throw NumericError("covariance eigendecomposition failed");
  RealVec vals = es.eigenvalues().cwiseMax(eigenvalue_floor);
  return es.eigenvectors() * vals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

ChannelRealization sample_channels(const SystemConfig& config, const Scenario& scenario,
                                   const RealMat& covariance, Rng& rng) {
  const int m = config.atoms_per_layer;
  if (covariance.rows() != m || covariance.cols() != m)
    throw DimensionError("covariance size does not match atom count");
  const RealMat root = covariance_sqrt(covariance);

  ChannelRealization ch;
  ch.uplink.assign(config.num_ues, std::vector<Vec>(config.num_aps));
  ch.downlink.assign(config.num_ues, std::vector<Vec>(config.num_aps));
  for (int k = 0; k < config.num_ues; ++k)
    for (int i = 0; i < config.num_aps; ++i) {
      const double scale = std::sqrt(scenario.pathloss(k, i));
      ch.uplink[k][i] = scale * (root * rng.cnormal_vector(m));
      ch.downlink[k][i] = scale * (root * rng.cnormal_vector(m));
    }
  return ch;
}

std::vector<Mat> ap_cascades(const SimStack& stack, const PhaseProfiles& phases, Direction direction) {
  std::vector<Mat> g(phases.size());
  for (std::size_t i = 0; i < phases.size(); ++i) g[i] = wave_transfer(stack, phases[i], direction);
  return g;
}

std::vector<Mat> ap_cascades(const SimStack& stack, const std::vector<std::vector<Vec>>& diagonals,
                             Direction direction) {
  std::vector<Mat> g(diagonals.size());
  for (std::size_t i = 0; i < diagonals.size(); ++i) g[i] = wave_transfer(stack, diagonals[i], direction);
  return g;
}

Mat effective_channels(const SystemConfig& config, const ChannelRealization& channels,
                       const SimStack& stack, const std::vector<Mat>& cascades, Direction direction) {
  const int n = stack.geometry.rf_chains;
  if (static_cast<int>(cascades.size()) != config.num_aps)
    throw DimensionError("cascade count does not match AP count");
  Mat eff(n * config.num_aps, config.num_ues);
  const Mat coupling_t = stack.antenna_coupling.transpose();  // M x N, downlink sense
  for (int k = 0; k < config.num_ues; ++k)
    for (int i = 0; i < config.num_aps; ++i) {
      if (direction == Direction::Uplink) {
        const Vec& h = channels.uplink.at(k).at(i);
        if (h.size() != stack.geometry.atoms_per_layer) throw DimensionError("channel length mismatch");
        eff.col(k).segment(i * n, n) = stack.antenna_coupling * (cascades[i] * h);
      } else {
        const Vec& h = channels.downlink.at(k).at(i);
        if (h.size() != stack.geometry.atoms_per_layer) throw DimensionError("channel length mismatch");
        eff.col(k).segment(i * n, n) = (cascades[i] * coupling_t).adjoint() * h;
      }
    }
  return eff;
}

Mat effective_channels(const SystemConfig& config, const ChannelRealization& channels,
                       const SimStack& stack, const PhaseProfiles& phases, Direction direction) {
  return effective_channels(config, channels, stack, ap_cascades(stack, phases, direction), direction);
}

void write_channels_csv(const ChannelRealization& channels, std::ostream& out) {
  out << "direction,ue,ap";
  const Eigen::Index atoms = channels.uplink.empty() || channels.uplink[0].empty()
                                 ? 0
                                 : channels.uplink[0][0].size();
  for (Eigen::Index m = 0; m < atoms; ++m) out << ",re_" << m << ",im_" << m;
  out << "\n";
  char buf[32];
  const auto emit = [&](const char* tag, const std::vector<std::vector<Vec>>& side) {
    for (std::size_t k = 0; k < side.size(); ++k)
      for (std::size_t i = 0; i < side[k].size(); ++i) {
        out << tag << ',' << k << ',' << i;
        for (Eigen::Index m = 0; m < side[k][i].size(); ++m) {
          std::snprintf(buf, sizeof(buf), "%.17g", side[k][i](m).real());
          out << ',' << buf;
          std::snprintf(buf, sizeof(buf), "%.17g", side[k][i](m).imag());
          out << ',' << buf;
        }
        out << "\n";
      }
  };
  emit("uplink", channels.uplink);
  emit("downlink", channels.downlink);
}

void write_channels_csv(const ChannelRealization& channels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write channel dump: " + path);
  write_channels_csv(channels, out);
}

}  // namespace simcf
