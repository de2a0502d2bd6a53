#include "simcf/fp_transforms.hpp"

#include <cmath>

namespace simcf {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Shared scalar bound: log2(1 + |b|^2/a) >= log2(1+tau) - tau/ln2
//                      + (1+tau)/ln2 (2 Re{b* w} - |w|^2 (|b|^2 + a)).
double scalar_rate_surrogate(cplx b, double a, double tau, cplx w) {
  const double quad = 2.0 * std::real(std::conj(b) * w) - std::norm(w) * (std::norm(b) + a);
  return std::log2(1.0 + tau) - tau / kLn2 + (1.0 + tau) / kLn2 * quad;
}

}  // namespace

AuxiliaryState uplink_rate_aux(const SystemConfig& config, const Mat& eff, const UplinkState& state) {
  AuxiliaryState aux;
  aux.sinr.resize(config.num_ues);
  aux.weight.resize(config.num_ues);
  for (int k = 0; k < config.num_ues; ++k) {
    if (state.combiners.col(k).squaredNorm() == 0.0) {
      // a silenced UE (p = 0 pins the MMSE combiner to zero) contributes nothing
      aux.sinr(k) = 0.0;
      aux.weight(k) = 0.0;
      continue;
    }
    const cplx b = std::sqrt(state.powers(k)) * state.combiners.col(k).dot(eff.col(k));
    const double a = uplink_interference(config, eff, state, k);
    if (a <= 0.0 || !std::isfinite(a)) {
      aux.sinr(k) = 0.0;
      aux.weight(k) = 0.0;
      continue;
    }
    aux.sinr(k) = std::norm(b) / a;
    aux.weight(k) = b / (std::norm(b) + a);
    if (!std::isfinite(aux.sinr(k)) || !std::isfinite(std::abs(aux.weight(k)))) {
      aux.sinr(k) = 0.0;
      aux.weight(k) = 0.0;
    }
  }
  aux.load_cov.resize(config.num_aps);
  for (int i = 0; i < config.num_aps; ++i) aux.load_cov[i] = uplink_load_cov(config, eff, state, i);
  return aux;
}

double uplink_rate_surrogate(const SystemConfig& config, const Mat& eff, const UplinkState& state,
                             const AuxiliaryState& aux, int ue) {
  const cplx b = std::sqrt(state.powers(ue)) * state.combiners.col(ue).dot(eff.col(ue));
  const double a = uplink_interference(config, eff, state, ue);
  return scalar_rate_surrogate(b, a, aux.sinr(ue), aux.weight(ue));
}

Mat uplink_load_cov(const SystemConfig& config, const Mat& eff, const UplinkState& state, int ap) {
  const int n = static_cast<int>(eff.rows()) / config.num_aps;
  Mat cov = config.uplink_noise * Mat::Identity(n, n) + state.quant_cov[ap];
  for (int k = 0; k < config.num_ues; ++k) {
    const Vec h = eff.col(k).segment(ap * n, n);
    cov.noalias() += state.powers(k) * (h * h.adjoint());
  }
  return cov;
}

double uplink_load_surrogate(const SystemConfig& config, const Mat& eff, const UplinkState& state,
                             const Mat& load_cov, int ap) {
  const int n = static_cast<int>(eff.rows()) / config.num_aps;
  const Mat received = uplink_load_cov(config, eff, state, ap);
  const Mat solved = load_cov.ldlt().solve(received);
  return log2_det_hermitian(load_cov) + solved.trace().real() / kLn2 - n / kLn2 -
         log2_det_hermitian(state.quant_cov[ap]);
}

Mat mmse_combiners(const SystemConfig& config, const Mat& eff, const UplinkState& state) {
  const Eigen::Index total = eff.rows();
  const int n = static_cast<int>(total) / config.num_aps;
  Mat cov = config.uplink_noise * Mat::Identity(total, total);
  for (int i = 0; i < config.num_aps; ++i)
    cov.block(i * n, i * n, n, n) += state.quant_cov[i];
  for (int k = 0; k < config.num_ues; ++k)
    cov.noalias() += state.powers(k) * (eff.col(k) * eff.col(k).adjoint());
  Mat combiners = cov.ldlt().solve(eff);
  for (int k = 0; k < config.num_ues; ++k) combiners.col(k) *= state.powers(k);
  return combiners;
}

AuxiliaryState downlink_rate_aux(const SystemConfig& config, const Mat& eff, const DownlinkState& state) {
  AuxiliaryState aux;
  aux.sinr.resize(config.num_ues);
  aux.weight.resize(config.num_ues);
  for (int k = 0; k < config.num_ues; ++k) {
    const cplx b = eff.col(k).dot(state.beamformers.col(k));
    const double a = downlink_interference(config, eff, state, k);
    aux.sinr(k) = std::norm(b) / a;
    aux.weight(k) = b / (std::norm(b) + a);
  }
  aux.load_cov.resize(config.num_aps);
  for (int i = 0; i < config.num_aps; ++i) aux.load_cov[i] = downlink_load_cov(config, state, i);
  return aux;
}

double downlink_rate_surrogate(const SystemConfig& config, const Mat& eff, const DownlinkState& state,
                               const AuxiliaryState& aux, int ue) {
  const cplx b = eff.col(ue).dot(state.beamformers.col(ue));
  const double a = downlink_interference(config, eff, state, ue);
  return scalar_rate_surrogate(b, a, aux.sinr(ue), aux.weight(ue));
}

Mat downlink_load_cov(const SystemConfig& config, const DownlinkState& state, int ap) {
  const int n = static_cast<int>(state.beamformers.rows()) / config.num_aps;
  Mat cov = state.quant_cov[ap];
  for (int k = 0; k < config.num_ues; ++k) {
    const Vec v = state.beamformers.col(k).segment(ap * n, n);
    cov.noalias() += v * v.adjoint();
  }
  return cov;
}

double downlink_load_surrogate(const SystemConfig& config, const DownlinkState& state,
                               const Mat& load_cov, int ap) {
  const int n = static_cast<int>(state.beamformers.rows()) / config.num_aps;
  const Mat received = downlink_load_cov(config, state, ap);
  const Mat solved = load_cov.ldlt().solve(received);
  return log2_det_hermitian(load_cov) + solved.trace().real() / kLn2 - n / kLn2 -
         log2_det_hermitian(state.quant_cov[ap]);
}

std::vector<Vec> layer_diagonal(const std::vector<std::vector<Vec>>& diagonals, int layer) {
  std::vector<Vec> out(diagonals.size());
  for (std::size_t i = 0; i < diagonals.size(); ++i) out[i] = diagonals[i].at(layer - 1);
  return out;
}

double LayerForms::objective_value(const RealVec& weights, const Vec& phi) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < per_ue.size(); ++k) {
    const auto& f = per_ue[k];
    const double val =
        f.constant + 2.0 * std::real(f.lin.dot(phi)) - std::real(phi.dot(f.quad * phi));
    acc += weights(static_cast<Eigen::Index>(k)) * val;
  }
  return acc;
}

double LayerForms::fronthaul_value(int ap, const Vec& phi_ap) const {
  const auto& g = per_ap.at(ap);
  return g.constant + std::real(phi_ap.dot(g.quad * phi_ap));
}

LayerForms layer_surrogates(const SystemConfig& config, const ChannelRealization& channels,
                            const SimStack& stack, const UplinkState& state,
                            const std::vector<std::vector<Vec>>& diagonals, const AuxiliaryState& aux,
                            int layer) {
  const int n = config.rf_chains;
  const int m = config.atoms_per_layer;
  const int aps = config.num_aps;
  const int ues = config.num_ues;

  LayerForms forms;
  forms.channel_maps.assign(ues, std::vector<Mat>(aps));

  for (int i = 0; i < aps; ++i) {
    const LayerPartials parts = partial_products(stack, diagonals[i], layer, Direction::Uplink);
    const Mat ta = stack.antenna_coupling * parts.antenna_side;  // N x M
    for (int k = 0; k < ues; ++k) {
      const Vec bh = parts.air_side * channels.uplink[k][i];
      forms.channel_maps[k][i] = ta * bh.asDiagonal();  // N x M, maps phi_i to the AP block
    }
  }

  forms.per_ue.resize(ues);
  for (int k = 0; k < ues; ++k) {
    auto& f = forms.per_ue[k];
    const double tau = aux.sinr(k);
    const cplx w = aux.weight(k);
    const double scale = (1.0 + tau) / kLn2;

    // s_{k',.} with entry blocks M_{k',i}^H u_{k,i}; u_k^H htilde_{k'}(phi) = s^H phi
    Mat stacked(m * aps, ues);
    for (int kp = 0; kp < ues; ++kp)
      for (int i = 0; i < aps; ++i)
        stacked.col(kp).segment(i * m, m) =
            forms.channel_maps[kp][i].adjoint() * state.combiners.col(k).segment(i * n, n);

    f.lin = scale * std::sqrt(state.powers(k)) * w * stacked.col(k);
    f.quad = Mat::Zero(m * aps, m * aps);
    for (int kp = 0; kp < ues; ++kp)
      f.quad.noalias() += state.powers(kp) * (stacked.col(kp) * stacked.col(kp).adjoint());
    f.quad *= scale * std::norm(w);

    double fixed = config.uplink_noise * state.combiners.col(k).squaredNorm();
    for (int i = 0; i < aps; ++i) {
      const Vec ui = state.combiners.col(k).segment(i * n, n);
      fixed += (ui.adjoint() * state.quant_cov[i] * ui).value().real();
    }
    f.constant = std::log2(1.0 + tau) - tau / kLn2 - scale * std::norm(w) * fixed;
  }

  forms.per_ap.resize(aps);
  for (int i = 0; i < aps; ++i) {
    auto& g = forms.per_ap[i];
    const Mat& xi = aux.load_cov[i];
    Eigen::LDLT<Mat> xi_fac(xi);
    g.quad = Mat::Zero(m, m);
    for (int k = 0; k < ues; ++k) {
      const Mat solved = xi_fac.solve(forms.channel_maps[k][i]);
      g.quad.noalias() += state.powers(k) * (forms.channel_maps[k][i].adjoint() * solved);
    }
    g.quad /= kLn2;
    const Mat fixed = xi_fac.solve(config.uplink_noise * Mat::Identity(n, n) + state.quant_cov[i]);
    g.constant = log2_det_hermitian(xi) + fixed.trace().real() / kLn2 - n / kLn2 -
                 log2_det_hermitian(state.quant_cov[i]);
  }
  return forms;
}

PhaseProfiles downlink_phase_gradient(const SystemConfig& config, const ChannelRealization& channels,
                                      const SimStack& stack, const DownlinkState& state) {
  const int n = config.rf_chains;
  const int m = config.atoms_per_layer;
  const int aps = config.num_aps;
  const int ues = config.num_ues;
  const int layers = config.layers;
  const RealVec alpha = config.weights(Direction::Downlink);

  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Downlink);

  Mat cross(ues, ues);  // cross(k, k') = htilde_k^H v_k'
  for (int k = 0; k < ues; ++k)
    for (int kp = 0; kp < ues; ++kp) cross(k, kp) = eff.col(k).dot(state.beamformers.col(kp));

  RealVec inp(ues), gamma(ues), delta(ues);
  for (int k = 0; k < ues; ++k) {
    inp(k) = downlink_interference(config, eff, state, k);
    gamma(k) = std::norm(cross(k, k)) / inp(k);
    delta(k) = 1.0 / (std::norm(cross(k, k)) + inp(k));
  }

  const Mat coupling_dl = stack.antenna_coupling.transpose();  // M x N

  PhaseProfiles grad(aps);
  for (int i = 0; i < aps; ++i) {
    grad[i].assign(layers, Eigen::VectorXd::Zero(m));
    const auto diags = unit_diagonals(state.phases[i]);
    const Mat v_block = state.beamformers.middleRows(i * n, n);  // N x K_U
    const Mat eff_block = eff.middleRows(i * n, n);              // N x K_U
    Mat h_block(m, ues);
    for (int k = 0; k < ues; ++k) h_block.col(k) = channels.downlink[k][i];

    for (int l = 1; l <= layers; ++l) {
      const LayerPartials parts = partial_products(stack, diags, l, Direction::Downlink);
      // column m of wmat is (T^dl)^H conj(row m of antenna_side)
      const Mat wmat = (parts.antenna_side * coupling_dl).adjoint();  // N x M
      const Mat vw = v_block.adjoint() * wmat;                        // K_U x M
      const Mat bh = parts.air_side.adjoint() * h_block;              // M x K_U, entry (m,k) = b_m^H h_{k,i}
      const Mat zw = (state.quant_cov[i] * eff_block).adjoint() * wmat;  // K_U x M
      const Mat sum_vw = cross * vw;                                  // K_U x M

      Eigen::VectorXd& out = grad[i][l - 1];
      for (int mm = 0; mm < m; ++mm) {
        const cplx rot = std::polar(1.0, -state.phases[i][l - 1](mm));
        double acc = 0.0;
        for (int k = 0; k < ues; ++k) {
          const cplx common = rot * bh(mm, k);
          const double eta_own = std::imag(common * vw(k, mm) * cross(k, k));
          const double eta_rest = std::imag(common * (sum_vw(k, mm) - vw(k, mm) * cross(k, k)));
          const double zeta = std::imag(common * zw(k, mm));
          acc += alpha(k) * delta(k) * (eta_own - gamma(k) * (eta_rest + zeta));
        }
        out(mm) = 2.0 / kLn2 * acc;
      }
    }
  }
  return grad;
}

}  // namespace simcf
