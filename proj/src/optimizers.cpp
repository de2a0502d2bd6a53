#include "simcf/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <type_traits>
#include <utility>

namespace simcf {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point from) {
  return std::chrono::duration<double, std::milli>(Clock::now() - from).count();
}

PhaseProfiles random_phases(const SystemConfig& config, Rng& rng) {
  PhaseProfiles phases(config.num_aps);
  for (int i = 0; i < config.num_aps; ++i) {
    phases[i].resize(config.layers);
    for (int l = 0; l < config.layers; ++l)
      phases[i][l] = rng.uniform_vector(config.atoms_per_layer, 0.0, kTwoPi);
  }
  return phases;
}

// Bisects c so that the uplink load of Omega = c I sits at the target.
double bisect_isotropic_quant(const SystemConfig& config, const Mat& eff, UplinkState& state,
                              int ap, double target) {
  const auto load_at = [&](double c) {
    state.quant_cov[ap] = c * Mat::Identity(config.rf_chains, config.rf_chains);
    return uplink_fronthaul_load(config, eff, state, ap);
  };
  double lo = 1e-12;
  if (load_at(lo) <= target) return lo;  // huge capacity: lower bound already fits
  double hi = 1.0;
  while (load_at(hi) > target) {
    hi *= 4.0;
    if (hi > 1e30) throw NumericError("quantization bisection failed to bracket");
  }
  for (int it = 0; it < 200 && (hi - lo) / hi > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (load_at(mid) > target ? lo : hi) = mid;
  }
  load_at(hi);
  return hi;
}

// The exact subproblem polishes carry large packs to optimality; the barrier
// exploration budget shrinks accordingly once packs get big.
SolverSettings budget_for(const SolverSettings& base, int dim) {
  SolverSettings out = base;
  if (dim > 400) out.max_inner = std::max(50, base.max_inner / 5);
  return out;
}

}  // namespace

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  return t;
}

UplinkState init_uplink(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, Rng& rng, const PackOptions& options) {
  UplinkState state;
  state.phases = random_phases(config, rng);
  state.powers = RealVec::Constant(config.num_ues, 0.5 * config.uplink_power);
  state.quant_cov.assign(config.num_aps,
                         Mat::Identity(config.rf_chains, config.rf_chains));
  state.combiners = Mat::Zero(config.rf_chains * config.num_aps, config.num_ues);

  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Uplink);
  if (options.equal_rate) {
    for (int i = 0; i < config.num_aps; ++i) {
      const RealVec floor = equal_rate_noise_floor(config, eff, state, i);
      Vec diag(config.rf_chains);
      for (int j = 0; j < config.rf_chains; ++j) diag(j) = floor(j) * (1.0 + 1e-6);
      state.quant_cov[i] = diag.asDiagonal();
    }
  } else {
    for (int i = 0; i < config.num_aps; ++i)
      bisect_isotropic_quant(config, eff, state, i, 0.9 * config.fronthaul_capacity);
  }

  if (options.wave_only) {
    // nonnegative real power-control combiners seeded from channel magnitudes
    for (int k = 0; k < config.num_ues; ++k)
      state.combiners.col(k) = eff.col(k).cwiseAbs().cast<cplx>();
  } else {
    state.combiners = mmse_combiners(config, eff, state);
  }
  return state;
}

DownlinkState init_downlink(const SystemConfig& config, const ChannelRealization& channels,
                            const SimStack& stack, Rng& rng, const PackOptions& options) {
  DownlinkState state;
  state.phases = random_phases(config, rng);
  const int total = config.rf_chains * config.num_aps;

  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Downlink);

  // matched-filter directions, per-AP signal power split equally over UEs
  state.beamformers = Mat::Zero(total, config.num_ues);
  double signal_budget = 0.45 * config.ap_power;
  if (options.equal_rate) {
    const double c_scale = equal_rate_scale(config);
    signal_budget = std::min(signal_budget, 0.9 * config.ap_power / (1.0 + c_scale));
  }
  for (int i = 0; i < config.num_aps; ++i) {
    for (int k = 0; k < config.num_ues; ++k) {
      Vec dir = eff.col(k).segment(i * config.rf_chains, config.rf_chains);
      if (options.wave_only) dir = dir.cwiseAbs().cast<cplx>();
      const double norm = dir.norm();
      if (norm > 0.0)
        dir *= std::sqrt(signal_budget / config.num_ues) / norm;
      state.beamformers.col(k).segment(i * config.rf_chains, config.rf_chains) = dir;
    }
  }

  state.quant_cov.assign(config.num_aps, (0.05 * config.ap_power / config.rf_chains) *
                                             Mat::Identity(config.rf_chains, config.rf_chains));
  if (options.equal_rate) {
    for (int i = 0; i < config.num_aps; ++i) {
      const RealVec floor = equal_rate_noise_floor(config, state, i);
      Vec diag(config.rf_chains);
      for (int j = 0; j < config.rf_chains; ++j) diag(j) = floor(j) * (1.0 + 1e-6) + 1e-12;
      state.quant_cov[i] = diag.asDiagonal();
    }
    return state;
  }

  // shrink the beamformers until every fronthaul load fits with margin
  const double target = 0.9 * config.fronthaul_capacity;
  const auto max_load = [&]() {
    double worst = 0.0;
    for (int i = 0; i < config.num_aps; ++i)
      worst = std::max(worst, downlink_fronthaul_load(config, state, i));
    return worst;
  };
  if (max_load() > target) {
    double lo = 0.0, hi = 1.0;
    const Mat full = state.beamformers;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      state.beamformers = mid * full;
      (max_load() > target ? hi : lo) = mid;
    }
    state.beamformers = lo * full;
  }
  return state;
}

UplinkState uplink_digital_pass(const SystemConfig& config, const ChannelRealization& channels,
                                const SimStack& stack, UplinkState state, const AoSettings& settings,
                                const PackOptions& options, double capacity_scale) {
  SystemConfig tight = config;
  tight.fronthaul_capacity = config.fronthaul_capacity * capacity_scale;
  const int n = config.rf_chains;
  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Uplink);
  restore_uplink_feasibility(tight, eff, state, options);
  const RealVec alpha = config.weights(Direction::Uplink);

  double previous = weighted_sum_rate(config, eff, state);
  for (int it = 0; it < settings.max_digital; ++it) {
    AuxiliaryState aux = uplink_rate_aux(config, eff, state);

    const auto surrogate_sum = [&](const UplinkState& s) {
      double acc = 0.0;
      for (int k = 0; k < config.num_ues; ++k)
        acc += alpha(k) * uplink_rate_surrogate(config, eff, s, aux, k);
      return acc;
    };

    const UplinkDigitalPack pack = pack_uplink_digital(tight, eff, state, aux, options);
    const SolveResult res = solve(pack.program, budget_for(settings.solver, pack.program.dim));
    UplinkState candidate = state;
    pack.apply(res.x, candidate);

    if (!options.equal_rate) {
      // closed-form quantizer update at the solved powers: the stationarity
      // point of the Omega subproblem beats the barrier iterate
      for (int i = 0; i < config.num_aps; ++i) {
        const Mat xi_inv = aux.load_cov[i].inverse();
        Mat coeff = Mat::Zero(n, n);
        double signal = 0.0;
        for (int k = 0; k < config.num_ues; ++k) {
          const Vec ui = state.combiners.col(k).segment(i * n, n);
          coeff.noalias() += alpha(k) * (1.0 + aux.sinr(k)) / kLn2 * std::norm(aux.weight(k)) *
                             (ui * ui.adjoint());
          const Vec h = eff.col(k).segment(i * n, n);
          signal += candidate.powers(k) * std::real((h.adjoint() * xi_inv * h).value()) / kLn2;
        }
        const double base = log2_det_hermitian(aux.load_cov[i]) - n / kLn2 +
                            config.uplink_noise * xi_inv.trace().real() / kLn2;
        const double budget = tight.fronthaul_capacity - base - signal;
        candidate.quant_cov[i] = optimal_quant_cov(xi_inv, coeff, budget, candidate.quant_cov[i]);
      }
    }
    if (surrogate_sum(candidate) >= surrogate_sum(state)) state = std::move(candidate);

    if (options.wave_only) {
      aux = uplink_rate_aux(config, eff, state);
      const UplinkCombinerPack upack = pack_uplink_combiner(config, eff, state, aux);
      const SolveResult ures = solve(upack.program, settings.solver);
      UplinkState ucand = state;
      upack.apply(ures.x, ucand);
      if (surrogate_sum(ucand) >= surrogate_sum(state)) state = std::move(ucand);
    } else {
      state.combiners = mmse_combiners(config, eff, state);
    }

    const double current = weighted_sum_rate(config, eff, state);
    if (std::abs(current - previous) <= settings.objective_tol * std::max(1.0, std::abs(previous)))
      break;
    previous = current;
  }
  return state;
}

UplinkState uplink_wave_pass(const SystemConfig& config, const ChannelRealization& channels,
                             const SimStack& stack, UplinkState state, const AoSettings& settings,
                             const PackOptions& options, WavePassReport* report) {
  if (config.layers < 1) return state;
  const RealVec alpha = config.weights(Direction::Uplink);

  // relaxed complex diagonals, seeded at the current unit-modulus profiles
  std::vector<std::vector<Vec>> diagonals(config.num_aps);
  for (int i = 0; i < config.num_aps; ++i) diagonals[i] = unit_diagonals(state.phases[i]);

  double penalty = settings.penalty_init;
  const double residual_tol = 1e-8 * config.num_aps * config.layers * config.atoms_per_layer;

  for (int round = 0; round < settings.max_wave; ++round) {
    for (int layer = 1; layer <= config.layers; ++layer) {
      const Mat eff = effective_channels(config, channels, stack, ap_cascades(stack, diagonals, Direction::Uplink),
                                         Direction::Uplink);
      AuxiliaryState aux = uplink_rate_aux(config, eff, state);
      aux.phase_target.resize(config.num_aps);
      for (int i = 0; i < config.num_aps; ++i) {
        aux.phase_target[i].resize(config.layers);
        for (int l = 0; l < config.layers; ++l) {
          Vec target(config.atoms_per_layer);
          for (int m = 0; m < config.atoms_per_layer; ++m)
            target(m) = std::polar(1.0, std::arg(diagonals[i][l](m)));
          aux.phase_target[i][l] = std::move(target);
        }
      }

      const LayerForms forms = layer_surrogates(config, channels, stack, state, diagonals, aux, layer);
      const WaveLayerPack pack = pack_wave_layer(config, forms, state, diagonals, aux, layer, penalty, options);
      const SolveResult res = solve(pack.program, budget_for(settings.solver, pack.program.dim));

      // accept only if the penalized layer objective did not regress
      const double before = pack.program.objective(pack.program.start);
      if (res.objective >= before) pack.apply(res.x, diagonals);
    }

    double residual = 0.0;
    for (int i = 0; i < config.num_aps; ++i)
      for (int l = 0; l < config.layers; ++l)
        for (int m = 0; m < config.atoms_per_layer; ++m)
          residual += std::norm(diagonals[i][l](m) - std::polar(1.0, std::arg(diagonals[i][l](m))));
    if (report) {
      report->penalty_residuals.push_back(residual);
      report->rounds = round + 1;
    }
    if (residual <= residual_tol) break;
    penalty *= settings.penalty_growth;
  }

  // project onto unit modulus
  for (int i = 0; i < config.num_aps; ++i)
    for (int l = 0; l < config.layers; ++l)
      for (int m = 0; m < config.atoms_per_layer; ++m)
        state.phases[i][l](m) = wrap_angle(std::arg(diagonals[i][l](m)));

  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Uplink);
  restore_uplink_feasibility(config, eff, state, options);
  return state;
}

namespace {

// Closed-form beamformer update for fixed auxiliaries and quantizers:
// v_k = (H + blkdiag(lambda_i Xi_i^-1/ln2 + mu_i I))^-1 a_k with the per-AP
// multipliers bisected to the fronthaul and power boundaries.
bool polish_downlink_beams(const SystemConfig& config, const Mat& eff, const AuxiliaryState& aux,
                           const RealVec& alpha, double fronthaul_cap, DownlinkState& state) {
  const int n = config.rf_chains;
  const int aps = config.num_aps;
  const int ues = config.num_ues;
  const int total = n * aps;

  Mat quad = Mat::Zero(total, total);
  Mat targets(total, ues);
  for (int k = 0; k < ues; ++k) {
    const double scale = alpha(k) * (1.0 + aux.sinr(k)) / kLn2;
    quad.noalias() += scale * std::norm(aux.weight(k)) * (eff.col(k) * eff.col(k).adjoint());
    targets.col(k) = scale * aux.weight(k) * eff.col(k);
  }
  std::vector<Mat> xi_inv(aps);
  RealVec fh_base(aps), power_base(aps);
  for (int i = 0; i < aps; ++i) {
    xi_inv[i] = aux.load_cov[i].inverse();
    fh_base(i) = log2_det_hermitian(aux.load_cov[i]) - n / kLn2 +
                 (xi_inv[i] * state.quant_cov[i]).trace().real() / kLn2 -
                 log2_det_hermitian(state.quant_cov[i]);
    power_base(i) = state.quant_cov[i].trace().real();
  }

  RealVec fh_dual = RealVec::Zero(aps), pw_dual = RealVec::Zero(aps);
  const double ridge = 1e-9 * (1.0 + quad.trace().real() / total);

  const auto beams_for = [&](const RealVec& fh, const RealVec& pw) {
    Mat sys = quad + ridge * Mat::Identity(total, total);
    for (int i = 0; i < aps; ++i)
      sys.block(i * n, i * n, n, n) +=
          fh(i) / kLn2 * xi_inv[i] + pw(i) * Mat::Identity(n, n);
    return Mat(sys.ldlt().solve(targets));
  };
  const auto violation = [&](const Mat& beams, int i, bool power) {
    double acc = 0.0;
    for (int k = 0; k < ues; ++k) {
      const Vec vi = beams.col(k).segment(i * n, n);
      acc += power ? vi.squaredNorm() : std::real((vi.adjoint() * xi_inv[i] * vi).value()) / kLn2;
    }
    return power ? power_base(i) + acc - config.ap_power
                 : fh_base(i) + acc - fronthaul_cap;
  };

  Mat beams = beams_for(fh_dual, pw_dual);
  for (int sweep = 0; sweep < 4; ++sweep) {
    bool all_ok = true;
    for (int i = 0; i < aps; ++i) {
      for (int power = 0; power < 2; ++power) {
        RealVec& dual = power ? pw_dual : fh_dual;
        if (violation(beams, i, power) <= 0.0) continue;
        all_ok = false;
        double lo = 0.0, hi = std::max(1.0, 2.0 * dual(i));
        auto probe = [&](double value) {
          RealVec fh = fh_dual, pw = pw_dual;
          (power ? pw(i) : fh(i)) = value;
          return violation(beams_for(fh, pw), i, power);
        };
        while (probe(hi) > 0.0) {
          hi *= 4.0;
          if (hi > 1e14) return false;
        }
        for (int it = 0; it < 44 && hi - lo > 1e-6 * hi; ++it) {
          const double mid = 0.5 * (lo + hi);
          (probe(mid) > 0.0 ? lo : hi) = mid;
        }
        dual(i) = hi;
        beams = beams_for(fh_dual, pw_dual);
      }
    }
    if (all_ok) break;
  }

  // final safety: uniform shrink restores any residual violation
  double worst = 1.0;
  for (int i = 0; i < aps; ++i) {
    if (violation(beams, i, true) > 0.0 || violation(beams, i, false) > 0.0) worst = -1.0;
  }
  if (worst < 0.0) {
    double lo = 0.0, hi = 1.0;
    const Mat full = beams;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      beams = mid * full;
      bool ok = true;
      for (int i = 0; i < aps && ok; ++i)
        ok = violation(beams, i, true) <= 0.0 && violation(beams, i, false) <= 0.0;
      (ok ? lo : hi) = mid;
    }
    beams = lo * full;
  }
  // strict interior for the next barrier start
  beams *= 1.0 - 1e-9;
  state.beamformers = beams;
  return true;
}

}  // namespace

DownlinkState downlink_digital_pass(const SystemConfig& config, const ChannelRealization& channels,
                                    const SimStack& stack, DownlinkState state, const AoSettings& settings,
                                    const PackOptions& options, double capacity_scale) {
  SystemConfig tight = config;
  tight.fronthaul_capacity = config.fronthaul_capacity * capacity_scale;
  const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Downlink);
  const RealVec alpha = config.weights(Direction::Downlink);

  // shrink quantizers first if the tightened cap is violated at entry
  for (int i = 0; i < config.num_aps; ++i) {
    if (downlink_fronthaul_load(config, state, i) <= tight.fronthaul_capacity - 1e-6) continue;
    const Mat full = state.beamformers;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
      const double mid = 0.5 * (lo + hi);
      state.beamformers = mid * full;
      (downlink_fronthaul_load(config, state, i) > tight.fronthaul_capacity - 1e-6 ? hi : lo) = mid;
    }
    state.beamformers = lo * full;
  }

  double previous = weighted_sum_rate(config, eff, state);
  for (int it = 0; it < settings.max_digital; ++it) {
    const AuxiliaryState aux = downlink_rate_aux(config, eff, state);
    const auto surrogate_sum = [&](const DownlinkState& s) {
      double acc = 0.0;
      for (int k = 0; k < config.num_ues; ++k)
        acc += alpha(k) * downlink_rate_surrogate(config, eff, s, aux, k);
      return acc;
    };

    const DownlinkDigitalPack pack = pack_downlink_digital(tight, eff, state, aux, options);
    const SolveResult res = solve(pack.program, settings.solver);
    DownlinkState candidate = state;
    pack.apply(res.x, candidate);

    if (!options.equal_rate && !options.wave_only) {
      DownlinkState polished = candidate;
      if (polish_downlink_beams(config, eff, aux, alpha, tight.fronthaul_capacity, polished) &&
          surrogate_sum(polished) > surrogate_sum(candidate))
        candidate = std::move(polished);
    }

    if (!options.equal_rate) {
      const int n = config.rf_chains;
      for (int i = 0; i < config.num_aps; ++i) {
        const Mat xi_inv = aux.load_cov[i].inverse();
        Mat coeff = Mat::Zero(n, n);
        double signal = 0.0, beam_power = 0.0;
        for (int k = 0; k < config.num_ues; ++k) {
          const Vec hi = eff.col(k).segment(i * n, n);
          coeff.noalias() += alpha(k) * (1.0 + aux.sinr(k)) / kLn2 * std::norm(aux.weight(k)) *
                             (hi * hi.adjoint());
          const Vec vi = candidate.beamformers.col(k).segment(i * n, n);
          signal += std::real((vi.adjoint() * xi_inv * vi).value()) / kLn2;
          beam_power += vi.squaredNorm();
        }
        const double base = log2_det_hermitian(aux.load_cov[i]) - n / kLn2;
        const double budget = tight.fronthaul_capacity - base - signal;
        candidate.quant_cov[i] = optimal_quant_cov(xi_inv, coeff, budget, candidate.quant_cov[i],
                                                   config.ap_power - beam_power);
      }
    }
    if (surrogate_sum(candidate) >= surrogate_sum(state)) state = std::move(candidate);

    const double current = weighted_sum_rate(config, eff, state);
    if (std::abs(current - previous) <= settings.objective_tol * std::max(1.0, std::abs(previous)))
      break;
    previous = current;
  }
  return state;
}

DownlinkState downlink_wave_pass(const SystemConfig& config, const ChannelRealization& channels,
                                 const SimStack& stack, DownlinkState state, const AoSettings& settings,
                                 const PackOptions& options) {
  (void)options;
  double mu = settings.step_init;
  double previous = weighted_sum_rate(config, channels, stack, state);

  for (int it = 0; it < settings.max_wave; ++it) {
    const PhaseProfiles grad = downlink_phase_gradient(config, channels, stack, state);

    const auto stepped = [&](double step) {
      DownlinkState next = state;
      for (int i = 0; i < config.num_aps; ++i)
        for (int l = 0; l < config.layers; ++l) {
          const double norm = grad[i][l].norm();
          if (norm == 0.0) continue;  // zero-gradient block stays put
          for (int m = 0; m < config.atoms_per_layer; ++m)
            next.phases[i][l](m) = wrap_angle(state.phases[i][l](m) + step / norm * grad[i][l](m));
        }
      return next;
    };

    DownlinkState candidate = stepped(mu);
    double value = weighted_sum_rate(config, channels, stack, candidate);
    if (settings.monotone_phase_steps) {
      double local = mu;
      int halvings = 0;
      while (value < previous && halvings < 25) {
        local *= 0.5;
        candidate = stepped(local);
        value = weighted_sum_rate(config, channels, stack, candidate);
        ++halvings;
      }
      if (value < previous) {
        mu *= settings.step_decay;
        continue;  // no acceptable step at this scale
      }
    }
    state = std::move(candidate);
    mu *= settings.step_decay;

    if (std::abs(value - previous) <= settings.objective_tol * std::max(1.0, std::abs(previous))) {
      previous = value;
      break;
    }
    previous = value;
  }
  return state;
}

namespace {

template <typename State>
TraceRow make_trace_row(const SystemConfig& config, const ChannelRealization& channels,
                        const SimStack& stack, const State& state, int iteration,
                        Clock::time_point start) {
  TraceRow row;
  row.iteration = iteration;
  if constexpr (std::is_same_v<State, UplinkState>) {
    const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Uplink);
    row.sum_rate = weighted_sum_rate(config, eff, state);
    row.min_fronthaul_slack = min_fronthaul_slack(config, eff, state);
    row.min_power_slack = min_power_slack(config, state);
  } else {
    const Mat eff = effective_channels(config, channels, stack, state.phases, Direction::Downlink);
    row.sum_rate = weighted_sum_rate(config, eff, state);
    row.min_fronthaul_slack = min_fronthaul_slack(config, state);
    row.min_power_slack = min_power_slack(config, state);
  }
  row.elapsed_ms = elapsed_ms(start);
  return row;
}

}  // namespace

std::pair<UplinkState, ConvergenceTrace> run_uplink_ao(const SystemConfig& config,
                                                       const ChannelRealization& channels,
                                                       const SimStack& stack, const AoSettings& settings,
                                                       const RunOptions& options) {
  const auto start = Clock::now();
  Rng rng(derive_seed(settings.seed, {0xA011ULL}));
  UplinkState state = init_uplink(config, channels, stack, rng, options.pack);

  const double initial = weighted_sum_rate(config, channels, stack, state);
  UplinkState best = state;
  double best_value = initial;

  ConvergenceTrace trace;
  double previous = initial;
  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    double capacity_scale = 1.0;
    if (options.optimize_phases && !options.pack.equal_rate && outer <= 12 &&
        outer < settings.max_outer) {
      // withhold a sliver of capacity from the quantizer so the next wave
      // pass is not pinned to the fronthaul boundary; fully released after
      // twelve rounds so the tail can settle and converge
      capacity_scale = 1.0 - settings.capacity_headroom * std::pow(0.65, outer - 1);
    }
    if (options.optimize_phases)
      state = uplink_wave_pass(config, channels, stack, std::move(state), settings, options.pack);
    state = uplink_digital_pass(config, channels, stack, std::move(state), settings, options.pack,
                                capacity_scale);

    const TraceRow row = make_trace_row(config, channels, stack, state, outer, start);
    trace.rows.push_back(row);
    if (row.sum_rate >= best_value) {
      best_value = row.sum_rate;
      best = state;
    }
    // never stop while capacity is still withheld from the quantizer
    if (capacity_scale >= 1.0 - 1e-3 &&
        std::abs(row.sum_rate - previous) <= settings.objective_tol * std::max(1.0, std::abs(previous)))
      break;
    previous = row.sum_rate;
  }

  if (best_value > weighted_sum_rate(config, channels, stack, state)) state = best;
  return {std::move(state), std::move(trace)};
}

std::pair<DownlinkState, ConvergenceTrace> run_downlink_ao(const SystemConfig& config,
                                                           const ChannelRealization& channels,
                                                           const SimStack& stack, const AoSettings& settings,
                                                           const RunOptions& options) {
  const auto start = Clock::now();
  Rng rng(derive_seed(settings.seed, {0xD011ULL}));
  DownlinkState state = init_downlink(config, channels, stack, rng, options.pack);

  ConvergenceTrace trace;
  double previous = weighted_sum_rate(config, channels, stack, state);
  for (int outer = 1; outer <= settings.max_outer; ++outer) {
    double capacity_scale = 1.0;
    if (options.optimize_phases && !options.pack.equal_rate && outer <= 16 &&
        outer < settings.max_outer)
      capacity_scale = 1.0 - settings.capacity_headroom * std::pow(0.85, outer - 1);
    state = downlink_digital_pass(config, channels, stack, std::move(state), settings, options.pack,
                                  capacity_scale);
    if (options.optimize_phases)
      state = downlink_wave_pass(config, channels, stack, std::move(state), settings, options.pack);

    const TraceRow row = make_trace_row(config, channels, stack, state, outer, start);
    trace.rows.push_back(row);
    // never stop while capacity is still withheld from the quantizer
    if (capacity_scale >= 1.0 - 1e-3 &&
        std::abs(row.sum_rate - previous) <= settings.objective_tol * std::max(1.0, std::abs(previous)))
      break;
    previous = row.sum_rate;
  }
  return {std::move(state), std::move(trace)};
}

}  // namespace simcf
