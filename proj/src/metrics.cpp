#include "simcf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace simcf {

namespace {

constexpr double kLog2E = 1.4426950408889634074;  // 1/ln 2

void check_uplink(const SystemConfig& config, const Mat& eff, const UplinkState& state) {
  const Eigen::Index total = eff.rows();
  if (eff.cols() != config.num_ues) throw DimensionError("effective channel UE count mismatch");
  if (state.powers.size() != config.num_ues) throw DimensionError("power vector size mismatch");
  if (state.combiners.rows() != total || state.combiners.cols() != config.num_ues)
    throw DimensionError("combiner matrix shape mismatch");
  if (static_cast<int>(state.quant_cov.size()) != config.num_aps)
    throw DimensionError("quantization covariance count mismatch");
}

}  // namespace

double log2_det_hermitian(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(a);
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double v = es.eigenvalues()(i);
    if (v <= 0.0) throw NumericError("matrix is not positive definite");
    acc += std::log2(v);
  }
  return acc;
}

double uplink_interference(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ue) {
  const int n = static_cast<int>(eff.rows()) / config.num_aps;
  const Vec& u = state.combiners.col(ue);
  double acc = config.uplink_noise * u.squaredNorm();
  for (int k = 0; k < config.num_ues; ++k) {
    if (k == ue) continue;
    acc += state.powers(k) * std::norm(u.dot(eff.col(k)));
  }
  for (int i = 0; i < config.num_aps; ++i) {
    const Vec ui = u.segment(i * n, n);
    acc += (ui.adjoint() * state.quant_cov[i] * ui).value().real();
  }
  return acc;
}

double uplink_user_rate(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ue) {
  check_uplink(config, eff, state);
  const Vec& u = state.combiners.col(ue);
  if (u.squaredNorm() == 0.0) return 0.0;
  const double signal = state.powers(ue) * std::norm(u.dot(eff.col(ue)));
  const double inp = uplink_interference(config, eff, state, ue);
  if (inp <= 0.0) throw NumericError("nonpositive interference-plus-noise power");
  return std::log2(1.0 + signal / inp);
}

double uplink_fronthaul_load(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ap) {
  check_uplink(config, eff, state);
  const int n = static_cast<int>(eff.rows()) / config.num_aps;
  Mat received = config.uplink_noise * Mat::Identity(n, n) + state.quant_cov[ap];
  for (int k = 0; k < config.num_ues; ++k) {
    const Vec h = eff.col(k).segment(ap * n, n);
    received.noalias() += state.powers(k) * (h * h.adjoint());
  }
  return log2_det_hermitian(received) - log2_det_hermitian(state.quant_cov[ap]);
}

double downlink_interference(const SystemConfig& config, const Mat& eff, const DownlinkState& state, int ue) {
  const int n = static_cast<int>(eff.rows()) / config.num_aps;
  double acc = config.downlink_noise;
  for (int k = 0; k < config.num_ues; ++k) {
    if (k == ue) continue;
    acc += std::norm(eff.col(ue).dot(state.beamformers.col(k)));
  }
  for (int i = 0; i < config.num_aps; ++i) {
    const Vec hi = eff.col(ue).segment(i * n, n);
    acc += (hi.adjoint() * state.quant_cov[i] * hi).value().real();
  }
  return acc;
}

double downlink_user_rate(const SystemConfig& config, const Mat& eff, const DownlinkState& state, int ue) {
  const double signal = std::norm(eff.col(ue).dot(state.beamformers.col(ue)));
  const double inp = downlink_interference(config, eff, state, ue);
  if (inp <= 0.0) throw NumericError("nonpositive interference-plus-noise power");
  return std::log2(1.0 + signal / inp);
}

double downlink_fronthaul_load(const SystemConfig& config, const DownlinkState& state, int ap) {
  const int n = static_cast<int>(state.beamformers.rows()) / config.num_aps;
  Mat sum = state.quant_cov[ap];
  for (int k = 0; k < config.num_ues; ++k) {
    const Vec v = state.beamformers.col(k).segment(ap * n, n);
    sum.noalias() += v * v.adjoint();
  }
  return log2_det_hermitian(sum) - log2_det_hermitian(state.quant_cov[ap]);
}

double downlink_power_usage(const SystemConfig& config, const DownlinkState& state, int ap) {
  const int n = static_cast<int>(state.beamformers.rows()) / config.num_aps;
  double acc = state.quant_cov[ap].trace().real();
  for (int k = 0; k < config.num_ues; ++k)
    acc += state.beamformers.col(k).segment(ap * n, n).squaredNorm();
  return acc;
}

double weighted_sum_rate(const SystemConfig& config, const Mat& eff, const UplinkState& state) {
  const RealVec w = config.weights(Direction::Uplink);
  double acc = 0.0;
  for (int k = 0; k < config.num_ues; ++k)
    if (w(k) != 0.0) acc += w(k) * uplink_user_rate(config, eff, state, k);
  return acc;
}

double weighted_sum_rate(const SystemConfig& config, const Mat& eff, const DownlinkState& state) {
  const RealVec w = config.weights(Direction::Downlink);
  double acc = 0.0;
  for (int k = 0; k < config.num_ues; ++k)
    if (w(k) != 0.0) acc += w(k) * downlink_user_rate(config, eff, state, k);
  return acc;
}

double uplink_user_rate(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const UplinkState& state, int ue) {
  return uplink_user_rate(config, effective_channels(config, channels, stack, state.phases, Direction::Uplink),
                          state, ue);
}

double uplink_fronthaul_load(const SystemConfig& config, const ChannelRealization& channels,
                             const SimStack& stack, const UplinkState& state, int ap) {
  return uplink_fronthaul_load(
      config, effective_channels(config, channels, stack, state.phases, Direction::Uplink), state, ap);
}

double downlink_user_rate(const SystemConfig& config, const ChannelRealization& channels,
                          const SimStack& stack, const DownlinkState& state, int ue) {
  return downlink_user_rate(
      config, effective_channels(config, channels, stack, state.phases, Direction::Downlink), state, ue);
}

double weighted_sum_rate(const SystemConfig& config, const ChannelRealization& channels,
                         const SimStack& stack, const UplinkState& state) {
  return weighted_sum_rate(config, effective_channels(config, channels, stack, state.phases, Direction::Uplink),
                           state);
}

double weighted_sum_rate(const SystemConfig& config, const ChannelRealization& channels,
                         const SimStack& stack, const DownlinkState& state) {
  return weighted_sum_rate(
      config, effective_channels(config, channels, stack, state.phases, Direction::Downlink), state);
}

double min_fronthaul_slack(const SystemConfig& config, const Mat& eff, const UplinkState& state) {
  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.num_aps; ++i)
    slack = std::min(slack, config.fronthaul_capacity - uplink_fronthaul_load(config, eff, state, i));
  return slack;
}

double min_fronthaul_slack(const SystemConfig& config, const DownlinkState& state) {
  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.num_aps; ++i)
    slack = std::min(slack, config.fronthaul_capacity - downlink_fronthaul_load(config, state, i));
  return slack;
}

double min_power_slack(const SystemConfig& config, const UplinkState& state) {
  double slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.num_ues; ++k)
    slack = std::min({slack, state.powers(k), config.uplink_power - state.powers(k)});
  return slack;
}

double min_power_slack(const SystemConfig& config, const DownlinkState& state) {
  double slack = std::numeric_limits<double>::infinity();
  for (int i = 0; i < config.num_aps; ++i)
    slack = std::min(slack, config.ap_power - downlink_power_usage(config, state, i));
  return slack;
}

}  // namespace simcf
