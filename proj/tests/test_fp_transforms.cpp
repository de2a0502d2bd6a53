#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_helpers.hpp"

using namespace simcf;
using namespace simcf::testing;

namespace {

double sum_rate_for_phases(const SystemConfig& cfg, const ChannelRealization& ch, const SimStack& stack,
                           DownlinkState state, const PhaseProfiles& phases) {
  state.phases = phases;
  return weighted_sum_rate(cfg, ch, stack, state);
}

}  // namespace

TEST_CASE("uplink auxiliaries vanish with the transmit power") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(3);
  UplinkState s = random_uplink_state(cfg, rng);
  s.powers(1) = 0.0;
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  const AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
  CHECK(aux.sinr(1) == 0.0);
  CHECK(std::abs(aux.weight(1)) == 0.0);
}

TEST_CASE("scalar uplink auxiliaries match the hand formulas") {
  SystemConfig cfg = small_config(1, 1, 1, 2, 1);
  Rng rng(5);
  UplinkState s = random_uplink_state(cfg, rng);
  const Mat eff = Mat::Constant(1, 1, cplx(1.2, -0.4));
  const AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);

  const cplx b = std::sqrt(s.powers(0)) * std::conj(s.combiners(0, 0)) * eff(0, 0);
  const double a =
      std::norm(s.combiners(0, 0)) * (cfg.uplink_noise + s.quant_cov[0](0, 0).real());
  CHECK(aux.sinr(0) == doctest::Approx(std::norm(b) / a).epsilon(1e-12));
  CHECK(std::abs(aux.weight(0) - b / (std::norm(b) + a)) < 1e-14);
}

TEST_CASE("uplink surrogate is tight at the optimal auxiliaries") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const UplinkState s = random_uplink_state(cfg, rng);
    const ChannelRealization ch = channels_for(cfg, stack, rng);
    const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
    const AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
    for (int k = 0; k < cfg.num_ues; ++k) {
      const double rate = uplink_user_rate(cfg, eff, s, k);
      CHECK(std::abs(uplink_rate_surrogate(cfg, eff, s, aux, k) - rate) < 1e-9);
    }
  }
}

TEST_CASE("uplink surrogate lower-bounds the rate for any auxiliaries") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const UplinkState s = random_uplink_state(cfg, rng);
    const ChannelRealization ch = channels_for(cfg, stack, rng);
    const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
    AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
    // random admissible perturbations
    for (int k = 0; k < cfg.num_ues; ++k) {
      aux.sinr(k) = std::max(0.0, aux.sinr(k) + rng.uniform(-0.5, 0.5) * aux.sinr(k));
      aux.weight(k) += 0.3 * rng.cnormal();
    }
    for (int k = 0; k < cfg.num_ues; ++k) {
      const double rate = uplink_user_rate(cfg, eff, s, k);
      CHECK(uplink_rate_surrogate(cfg, eff, s, aux, k) <= rate + 1e-9);
    }
  }
}

TEST_CASE("perturbing the SINR estimate strictly loosens the bound") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(11);
  const UplinkState s = random_uplink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
  for (int k = 0; k < cfg.num_ues; ++k) aux.sinr(k) += 0.1;
  for (int k = 0; k < cfg.num_ues; ++k)
    CHECK(uplink_rate_surrogate(cfg, eff, s, aux, k) < uplink_user_rate(cfg, eff, s, k));
}

TEST_CASE("zero auxiliaries zero the surrogate") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(13);
  const UplinkState s = random_uplink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
  aux.sinr.setZero();
  aux.weight.setZero();
  for (int k = 0; k < cfg.num_ues; ++k)
    CHECK(uplink_rate_surrogate(cfg, eff, s, aux, k) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("idle covariance estimate doubles the noise floor") {
  SystemConfig cfg = small_config(1, 2, 2, 4, 1);
  const SimStack stack = stack_for(cfg);
  Rng rng(15);
  UplinkState s = random_uplink_state(cfg, rng);
  s.powers.setZero();
  s.quant_cov[0] = cfg.uplink_noise * Mat::Identity(2, 2);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  const Mat xi = uplink_load_cov(cfg, eff, s, 0);
  CHECK((xi - 2.0 * cfg.uplink_noise * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("load estimates are Hermitian positive definite") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(17);
  const UplinkState s = random_uplink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  for (int i = 0; i < cfg.num_aps; ++i) {
    const Mat xi = uplink_load_cov(cfg, eff, s, i);
    CHECK((xi - xi.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat> es(xi);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Fenchel load surrogate is tight at the optimum and an upper bound elsewhere") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const UplinkState s = random_uplink_state(cfg, rng);
    const ChannelRealization ch = channels_for(cfg, stack, rng);
    const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
    for (int i = 0; i < cfg.num_aps; ++i) {
      const double exact = uplink_fronthaul_load(cfg, eff, s, i);
      const Mat xi = uplink_load_cov(cfg, eff, s, i);
      CHECK(std::abs(uplink_load_surrogate(cfg, eff, s, xi, i) - exact) < 1e-9);

      const Mat perturbed = xi + random_pd(2, rng, 0.1);
      CHECK(uplink_load_surrogate(cfg, eff, s, perturbed, i) >= exact - 1e-9);
      CHECK(uplink_load_surrogate(cfg, eff, s, 2.0 * xi, i) > exact);
    }
  }
}

TEST_CASE("idle scalar-diagonal Fenchel surrogate matches a scalar oracle") {
  SystemConfig cfg = small_config(1, 1, 3, 4, 1);
  const SimStack stack = stack_for(cfg);
  Rng rng(21);
  UplinkState s = random_uplink_state(cfg, rng);
  s.powers.setZero();
  s.quant_cov[0] = cfg.uplink_noise * Mat::Identity(3, 3);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  const Mat xi = 2.0 * cfg.uplink_noise * Mat::Identity(3, 3);
  // per-dimension scalar evaluation of the linear-plus-log bound
  const double sigma2 = cfg.uplink_noise;
  const double per_dim = std::log2(2.0 * sigma2) + (2.0 * sigma2) / (2.0 * sigma2 * std::log(2.0)) -
                         1.0 / std::log(2.0) - std::log2(sigma2);
  CHECK(uplink_load_surrogate(cfg, eff, s, xi, 0) == doctest::Approx(3.0 * per_dim).epsilon(1e-9));
  CHECK(3.0 * per_dim == doctest::Approx(3.0).epsilon(1e-12));  // equals the exact load here
}

TEST_CASE("layer quadratic forms reproduce the full surrogates at the current diagonals") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 3);
  const SimStack stack = stack_for(cfg);
  Rng rng(23);
  const UplinkState s = random_uplink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  const AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
  const RealVec alpha = cfg.weights(Direction::Uplink);

  std::vector<std::vector<Vec>> diagonals(cfg.num_aps);
  for (int i = 0; i < cfg.num_aps; ++i) diagonals[i] = unit_diagonals(s.phases[i]);

  for (int layer = 1; layer <= cfg.layers; ++layer) {
    const LayerForms forms = layer_surrogates(cfg, ch, stack, s, diagonals, aux, layer);

    Vec phi(cfg.atoms_per_layer * cfg.num_aps);
    for (int i = 0; i < cfg.num_aps; ++i)
      phi.segment(i * cfg.atoms_per_layer, cfg.atoms_per_layer) = diagonals[i][layer - 1];

    double expected = 0.0;
    for (int k = 0; k < cfg.num_ues; ++k)
      expected += alpha(k) * uplink_rate_surrogate(cfg, eff, s, aux, k);
    CHECK(forms.objective_value(alpha, phi) == doctest::Approx(expected).epsilon(1e-9));

    for (int i = 0; i < cfg.num_aps; ++i) {
      const double expect_load = uplink_load_surrogate(cfg, eff, s, aux.load_cov[i], i);
      const Vec phi_i = diagonals[i][layer - 1];
      CHECK(forms.fronthaul_value(i, phi_i) == doctest::Approx(expect_load).epsilon(1e-9));
    }
  }
}

TEST_CASE("layer forms lose their channel dependence when the channels vanish") {
  SystemConfig cfg = small_config(1, 1, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(25);
  UplinkState s = random_uplink_state(cfg, rng);
  ChannelRealization ch;
  ch.uplink = {{Vec::Zero(4)}};
  ch.downlink = {{Vec::Zero(4)}};
  const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
  const AuxiliaryState aux = uplink_rate_aux(cfg, eff, s);
  const LayerForms forms = layer_surrogates(cfg, ch, stack, s, {unit_diagonals(s.phases[0])}, aux, 1);
  CHECK(forms.per_ue[0].lin.norm() == 0.0);
  CHECK(forms.per_ue[0].quad.norm() == 0.0);
}

TEST_CASE("MMSE combiner beats random combiners and matches the scalar formula") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(27);
  const int total = cfg.rf_chains * cfg.num_aps;
  for (int trial = 0; trial < 5; ++trial) {
    UplinkState s = random_uplink_state(cfg, rng);
    const ChannelRealization ch = channels_for(cfg, stack, rng);
    const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Uplink);
    s.combiners = mmse_combiners(cfg, eff, s);
    RealVec mmse_rates(cfg.num_ues);
    for (int k = 0; k < cfg.num_ues; ++k) mmse_rates(k) = uplink_user_rate(cfg, eff, s, k);
    for (int probe = 0; probe < 1000; ++probe) {
      UplinkState t = s;
      const int k = probe % cfg.num_ues;
      Vec u = rng.cnormal_vector(total);
      t.combiners.col(k) = u / u.norm();
      CHECK(uplink_user_rate(cfg, eff, t, k) <= mmse_rates(k) + 1e-9);
    }
  }

  // scalar form: u = p h / (p|h|^2 + sigma^2 + omega)
  SystemConfig sc = small_config(1, 1, 1, 2, 1);
  Rng rng2(29);
  UplinkState s1 = random_uplink_state(sc, rng2);
  const Mat eff1 = Mat::Constant(1, 1, cplx(0.9, 0.2));
  const Mat u = mmse_combiners(sc, eff1, s1);
  const cplx expect = s1.powers(0) * eff1(0, 0) /
                      (s1.powers(0) * std::norm(eff1(0, 0)) + sc.uplink_noise + s1.quant_cov[0](0, 0).real());
  CHECK(std::abs(u(0, 0) - expect) < 1e-12);

  // zero power pins the combiner to zero
  s1.powers(0) = 0.0;
  CHECK(mmse_combiners(sc, eff1, s1).norm() == 0.0);
}

TEST_CASE("downlink auxiliaries and surrogate mirror the uplink behaviour") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const DownlinkState s = random_downlink_state(cfg, rng);
    const ChannelRealization ch = channels_for(cfg, stack, rng);
    const Mat eff = effective_channels(cfg, ch, stack, s.phases, Direction::Downlink);
    const AuxiliaryState aux = downlink_rate_aux(cfg, eff, s);
    for (int k = 0; k < cfg.num_ues; ++k) {
      const double rate = downlink_user_rate(cfg, eff, s, k);
      CHECK(std::abs(downlink_rate_surrogate(cfg, eff, s, aux, k) - rate) < 1e-9);
    }

    AuxiliaryState loose = aux;
    for (int k = 0; k < cfg.num_ues; ++k) loose.sinr(k) += 0.1;
    for (int k = 0; k < cfg.num_ues; ++k)
      CHECK(downlink_rate_surrogate(cfg, eff, s, loose, k) <
            downlink_user_rate(cfg, eff, s, k) + 1e-12);
  }

  DownlinkState zero = random_downlink_state(cfg, rng);
  zero.beamformers.setZero();
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const Mat eff = effective_channels(cfg, ch, stack, zero.phases, Direction::Downlink);
  const AuxiliaryState aux = downlink_rate_aux(cfg, eff, zero);
  for (int k = 0; k < cfg.num_ues; ++k) {
    CHECK(aux.sinr(k) == 0.0);
    CHECK(std::abs(aux.weight(k)) == 0.0);
  }
}

TEST_CASE("downlink Fenchel surrogate is tight, bounding, and positive definite") {
  SystemConfig cfg = small_config(2, 3, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    const DownlinkState s = random_downlink_state(cfg, rng);
    for (int i = 0; i < cfg.num_aps; ++i) {
      const double exact = downlink_fronthaul_load(cfg, s, i);
      const Mat xi = downlink_load_cov(cfg, s, i);
      Eigen::SelfAdjointEigenSolver<Mat> es(xi);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
      CHECK(std::abs(downlink_load_surrogate(cfg, s, xi, i) - exact) < 1e-9);
      const Mat perturbed = xi + random_pd(2, rng, 0.05);
      CHECK(downlink_load_surrogate(cfg, s, perturbed, i) >= exact - 1e-9);
    }
  }
}

TEST_CASE("zero beamformers zero the downlink phase gradient") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(35);
  DownlinkState s = random_downlink_state(cfg, rng);
  s.beamformers.setZero();
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const PhaseProfiles grad = downlink_phase_gradient(cfg, ch, stack, s);
  for (int i = 0; i < cfg.num_aps; ++i)
    for (int l = 0; l < cfg.layers; ++l) CHECK(grad[i][l].norm() == 0.0);
}

TEST_CASE("downlink phase gradient matches central finite differences") {
  SystemConfig cfg = small_config(2, 2, 2, 4, 2);
  const SimStack stack = stack_for(cfg);
  Rng rng(37);
  const DownlinkState s = random_downlink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const PhaseProfiles grad = downlink_phase_gradient(cfg, ch, stack, s);

  const double step = 1e-6;
  double max_rel = 0.0;
  for (int probe = 0; probe < 50; ++probe) {
    const int i = static_cast<int>(rng.next() % cfg.num_aps);
    const int l = static_cast<int>(rng.next() % cfg.layers);
    const int m = static_cast<int>(rng.next() % cfg.atoms_per_layer);

    PhaseProfiles up = s.phases, down = s.phases;
    up[i][l](m) += step;
    down[i][l](m) -= step;
    const double fd = (sum_rate_for_phases(cfg, ch, stack, s, up) -
                       sum_rate_for_phases(cfg, ch, stack, s, down)) /
                      (2.0 * step);
    const double rel = std::abs(fd - grad[i][l](m)) / std::max(1e-12, std::abs(fd));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-5);
}

TEST_CASE("single-atom scalar instance has a vanishing phase derivative") {
  // with one atom per layer the unit-modulus factor cancels out of the rate,
  // so the symbolic derivative is identically zero
  SystemConfig cfg = small_config(1, 1, 1, 1, 1);
  const SimStack stack = stack_for(cfg);
  Rng rng(39);
  const DownlinkState s = random_downlink_state(cfg, rng);
  const ChannelRealization ch = channels_for(cfg, stack, rng);
  const PhaseProfiles grad = downlink_phase_gradient(cfg, ch, stack, s);
  CHECK(std::abs(grad[0][0](0)) < 1e-12);

  // and the rate really is flat in the phase
  PhaseProfiles bumped = s.phases;
  bumped[0][0](0) += 0.5;
  CHECK(sum_rate_for_phases(cfg, ch, stack, s, bumped) ==
        doctest::Approx(sum_rate_for_phases(cfg, ch, stack, s, s.phases)).epsilon(1e-12));
}
