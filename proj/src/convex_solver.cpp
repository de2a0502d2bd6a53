#include "simcf/convex_solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace simcf {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

void project(const ConcaveProgram& prog, RealVec& x) {
  if (prog.lower.size() == x.size()) x = x.cwiseMax(prog.lower);
  if (prog.upper.size() == x.size()) x = x.cwiseMin(prog.upper);
  for (const auto& disk : prog.disks) {
    const double re = x(disk.re_index);
    const double im = x(disk.im_index);
    const double mag = std::hypot(re, im);
    if (mag > disk.radius) {
      const double s = disk.radius / mag;
      x(disk.re_index) = re * s;
      x(disk.im_index) = im * s;
    }
  }
  for (const auto& block : prog.psd_blocks) {
    Mat h = unpack_hermitian(x, block.offset, block.side);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) throw SolverError("PSD block eigendecomposition failed");
    // floor relative to the spectral radius: reconstruction noise scales with
    // the largest eigenvalue, so an absolute floor alone cannot keep wildly
    // spread blocks numerically definite
    const double top = std::abs(es.eigenvalues().cwiseAbs().maxCoeff());
    const double floor = std::max(block.floor, 64.0 * std::numeric_limits<double>::epsilon() * top);
    if (es.eigenvalues().minCoeff() >= floor) continue;
    const RealVec vals = es.eigenvalues().cwiseMax(floor);
    h = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
    pack_hermitian(h, x, block.offset);
  }
}

}  // namespace

SolveResult solve(const ConcaveProgram& prog, const SolverSettings& settings) {
  if (prog.dim <= 0 || prog.start.size() != prog.dim) throw SolverError("bad program dimensions");
  RealVec x = prog.start;
  project(prog, x);

  const int m = static_cast<int>(prog.constraints.size());
  for (const auto& c : prog.constraints)
    if (c.value(x) >= 0.0)
      throw SolverError("infeasible start: constraint " + c.label + " violated");
  if (!std::isfinite(prog.objective(x))) throw SolverError("objective not finite at start");

  // candidates outside the constraint domain (near-singular PSD blocks) are
  // simply rejected, so domain errors here mean "infeasible", not failure
  const auto barrier = [&](const RealVec& y, double t) -> double {
    try {
      double val = t * prog.objective(y);
      if (!std::isfinite(val)) return -kInf;
      for (const auto& c : prog.constraints) {
        const double g = c.value(y);
        if (g >= 0.0) return -kInf;
        val += std::log(-g);
      }
      return val;
    } catch (const std::runtime_error&) {
      return -kInf;
    }
  };
  const auto barrier_gradient = [&](const RealVec& y, double t) -> RealVec {
    RealVec g = t * prog.objective_gradient(y);
    for (const auto& c : prog.constraints) {
      const double gv = c.value(y);
      g += c.gradient(y) / gv;  // gv < 0 pushes away from the boundary
    }
    return g;
  };

  double t = settings.barrier_init;
  int total_iterations = 0;
  bool reached = true;

  std::ofstream trace;
  if (!settings.trace_path.empty()) {
    trace.open(settings.trace_path, std::ios::trunc);
    if (trace) trace << "iteration,objective,max_violation\n";
  }
  const auto trace_row = [&](const RealVec& point) {
    if (!trace) return;
    double violation = 0.0;
    for (const auto& c : prog.constraints) violation = std::max(violation, c.value(point));
    trace << total_iterations << ',' << prog.objective(point) << ',' << violation << "\n";
  };
  trace_row(x);

  for (int outer = 0; outer < settings.max_outer; ++outer) {
    double step = 1.0;
    double fx = barrier(x, t);
    bool inner_converged = false;
    RealVec prev_x, prev_g;
    for (int inner = 0; inner < settings.max_inner; ++inner) {
      const RealVec g = barrier_gradient(x, t);
      // spectral (Barzilai-Borwein) trial step, Armijo-guarded below
      if (prev_x.size() == x.size()) {
        const RealVec dx = x - prev_x;
        const RealVec dg = g - prev_g;
        const double denom = -dx.dot(dg);  // positive for concave objectives
        if (denom > 0.0) {
          const double bb = dx.squaredNorm() / denom;
          if (std::isfinite(bb) && bb > 0.0) step = std::min(std::max(bb, 1e-12), 1e8);
        }
      }
      prev_x = x;
      prev_g = g;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        RealVec cand = x + step * g;
        project(prog, cand);
        const RealVec d = cand - x;
        const double advance = g.dot(d);
        if (d.lpNorm<Eigen::Infinity>() == 0.0) break;
        const double fc = barrier(cand, t);
        if (fc > -kInf && fc >= fx + settings.sufficient_decrease * advance) {
          const double moved = d.norm();
          x = std::move(cand);
          fx = fc;
          accepted = true;
          ++total_iterations;
          trace_row(x);
          if (moved <= settings.gradient_tol * (1.0 + x.norm())) inner_converged = true;
          break;
        }
        step *= settings.backtrack_shrink;
      }
      if (!accepted) {
        inner_converged = true;
        break;
      }
      step = std::min(step * 2.0, 1e8);
      if (inner_converged) break;
    }
    if (!inner_converged) reached = false;
    if (m == 0 || static_cast<double>(m) / t <= settings.gap_tol) break;
    if (outer == settings.max_outer - 1) {
      reached = false;
      break;
    }
    t *= settings.barrier_growth;
  }

  SolveResult result;
  result.x = x;
  result.objective = prog.objective(x);
  result.slacks.resize(m);
  for (int i = 0; i < m; ++i) result.slacks(i) = -prog.constraints[i].value(x);
  result.reached_tolerance = reached;
  result.iterations = total_iterations;
  return result;
}

// --- packed-variable helpers ---

int hermitian_param_count(int side) { return side * side; }

Mat unpack_hermitian(const RealVec& x, int offset, int side) {
  Mat h(side, side);
  int pos = offset;
  for (int i = 0; i < side; ++i) h(i, i) = x(pos++);
  for (int col = 0; col < side; ++col)
    for (int row = col + 1; row < side; ++row) {
      const cplx v(x(pos), x(pos + 1));
      pos += 2;
      h(row, col) = v;
      h(col, row) = std::conj(v);
    }
  return h;
}

void pack_hermitian(const Mat& h, RealVec& x, int offset) {
  const int side = static_cast<int>(h.rows());
  int pos = offset;
  for (int i = 0; i < side; ++i) x(pos++) = h(i, i).real();
  for (int col = 0; col < side; ++col)
    for (int row = col + 1; row < side; ++row) {
      x(pos) = h(row, col).real();
      x(pos + 1) = h(row, col).imag();
      pos += 2;
    }
}

void accumulate_hermitian_gradient(const Mat& d, RealVec& grad, int offset) {
  const int side = static_cast<int>(d.rows());
  int pos = offset;
  for (int i = 0; i < side; ++i) grad(pos++) += d(i, i).real();
  for (int col = 0; col < side; ++col)
    for (int row = col + 1; row < side; ++row) {
      grad(pos) += 2.0 * d(row, col).real();
      grad(pos + 1) += 2.0 * d(row, col).imag();
      pos += 2;
    }
}

Vec unpack_complex(const RealVec& x, int offset, int count) {
  Vec v(count);
  for (int i = 0; i < count; ++i) v(i) = cplx(x(offset + 2 * i), x(offset + 2 * i + 1));
  return v;
}

void pack_complex(const Vec& v, RealVec& x, int offset) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    x(offset + 2 * i) = v(i).real();
    x(offset + 2 * i + 1) = v(i).imag();
  }
}

void accumulate_complex_gradient(const Vec& g, RealVec& grad, int offset) {
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    grad(offset + 2 * i) += 2.0 * g(i).real();
    grad(offset + 2 * i + 1) += 2.0 * g(i).imag();
  }
}

double equal_rate_scale(const SystemConfig& config) {
  return 1.0 / (std::pow(2.0, config.fronthaul_capacity / config.rf_chains) - 1.0);
}

// --- uplink digital pack ---

namespace {

struct HermitianInverse {
  // cached per evaluation point is overkill at these sizes; recompute
  static Mat of(const Mat& h) {
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    if (es.info() != Eigen::Success) throw SolverError("Hermitian inverse failed");
    RealVec vals = es.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
      if (vals(i) <= 0.0) throw SolverError("matrix not positive definite");
      vals(i) = 1.0 / vals(i);
    }
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
  }
};

double log2_det_or_throw(const Mat& h) { return log2_det_hermitian(h); }

}  // namespace

UplinkDigitalPack pack_uplink_digital(const SystemConfig& config, const Mat& eff,
                                      const UplinkState& state, const AuxiliaryState& aux,
                                      const PackOptions& options) {
  const int ues = config.num_ues;
  const int aps = config.num_aps;
  const int n = static_cast<int>(eff.rows()) / aps;
  const RealVec alpha = config.weights(Direction::Uplink);
  const double sigma2 = config.uplink_noise;
  const double cap = config.fronthaul_capacity;
  const double omega_floor = 1e-10 * sigma2;

  UplinkDigitalPack pack;
  pack.equal_rate = options.equal_rate;
  pack.chains = n;
  pack.aps = aps;
  pack.ues = ues;
  pack.power_offset = 0;
  pack.comp_offset = ues;
  const int comp_params = options.equal_rate ? n : hermitian_param_count(n);
  const int dim = ues + aps * comp_params;

  // fixed-combiner coefficients
  Mat cross(ues, ues);  // cross(k, k') = u_k^H htilde_k'
  for (int k = 0; k < ues; ++k)
    for (int kp = 0; kp < ues; ++kp) cross(k, kp) = state.combiners.col(k).dot(eff.col(kp));

  RealVec scale(ues), lin_q(ues), quad_q(ues);
  double constant = 0.0;
  for (int k = 0; k < ues; ++k) {
    scale(k) = alpha(k) * (1.0 + aux.sinr(k)) / kLn2;
    constant += alpha(k) * (std::log2(1.0 + aux.sinr(k)) - aux.sinr(k) / kLn2);
    constant -= scale(k) * std::norm(aux.weight(k)) * sigma2 * state.combiners.col(k).squaredNorm();
    lin_q(k) = scale(k) * 2.0 * std::real(std::conj(cross(k, k)) * aux.weight(k));
  }
  for (int kp = 0; kp < ues; ++kp) {
    double acc = 0.0;
    for (int k = 0; k < ues; ++k) acc += scale(k) * std::norm(aux.weight(k)) * std::norm(cross(k, kp));
    quad_q(kp) = acc;
  }
  std::vector<Mat> omega_coeff(aps);  // objective term -tr(coeff * Omega_i)
  for (int i = 0; i < aps; ++i) {
    omega_coeff[i] = Mat::Zero(n, n);
    for (int k = 0; k < ues; ++k) {
      const Vec ui = state.combiners.col(k).segment(i * n, n);
      omega_coeff[i].noalias() += scale(k) * std::norm(aux.weight(k)) * (ui * ui.adjoint());
    }
  }

  auto& prog = pack.program;
  prog.dim = dim;
  prog.lower = RealVec::Constant(dim, -kInf);
  prog.upper = RealVec::Constant(dim, kInf);
  for (int k = 0; k < ues; ++k) {
    prog.lower(k) = 0.0;
    prog.upper(k) = std::sqrt(config.uplink_power);
  }

  const int comp_offset = pack.comp_offset;
  if (options.equal_rate) {
    for (int i = 0; i < aps; ++i)
      for (int j = 0; j < n; ++j) prog.lower(comp_offset + i * n + j) = omega_floor;
  } else {
    for (int i = 0; i < aps; ++i)
      prog.psd_blocks.push_back({comp_offset + i * hermitian_param_count(n), n, omega_floor});
  }

  prog.objective = [=](const RealVec& x) {
    double val = constant;
    for (int k = 0; k < ues; ++k) {
      const double q = x(k);
      val += lin_q(k) * q - quad_q(k) * q * q;
    }
    for (int i = 0; i < aps; ++i) {
      if (options.equal_rate) {
        for (int j = 0; j < n; ++j)
          val -= omega_coeff[i](j, j).real() * x(comp_offset + i * n + j);
      } else {
        const Mat omega = unpack_hermitian(x, comp_offset + i * hermitian_param_count(n), n);
        val -= (omega_coeff[i] * omega).trace().real();
      }
    }
    return val;
  };
  prog.objective_gradient = [=](const RealVec& x) {
    RealVec g = RealVec::Zero(dim);
    for (int k = 0; k < ues; ++k) g(k) = lin_q(k) - 2.0 * quad_q(k) * x(k);
    for (int i = 0; i < aps; ++i) {
      if (options.equal_rate) {
        for (int j = 0; j < n; ++j) g(comp_offset + i * n + j) -= omega_coeff[i](j, j).real();
      } else {
        accumulate_hermitian_gradient(-omega_coeff[i], g, comp_offset + i * hermitian_param_count(n));
      }
    }
    return g;
  };

  if (options.equal_rate) {
    const double c_scale = equal_rate_scale(config);
    for (int i = 0; i < aps; ++i)
      for (int j = 0; j < n; ++j) {
        RealVec gains(ues);
        for (int k = 0; k < ues; ++k) gains(k) = std::norm(eff(i * n + j, k));
        const int nu_index = comp_offset + i * n + j;
        prog.constraints.push_back(
            {[=](const RealVec& x) {
               double signal = sigma2;
               for (int k = 0; k < ues; ++k) signal += x(k) * x(k) * gains(k);
               return c_scale * signal - x(nu_index);
             },
             [=](const RealVec& x) {
               RealVec g = RealVec::Zero(dim);
               for (int k = 0; k < ues; ++k) g(k) = c_scale * 2.0 * x(k) * gains(k);
               g(nu_index) = -1.0;
               return g;
             },
             "equal_rate_floor"});
      }
  } else {
    for (int i = 0; i < aps; ++i) {
      const Mat xi_inv = HermitianInverse::of(aux.load_cov[i]);
      RealVec coupling(ues);
      for (int k = 0; k < ues; ++k) {
        const Vec h = eff.col(k).segment(i * n, n);
        coupling(k) = (h.adjoint() * xi_inv * h).value().real() / kLn2;
      }
      const double base = log2_det_or_throw(aux.load_cov[i]) - n / kLn2 +
                          sigma2 * xi_inv.trace().real() / kLn2 - cap;
      const int off = comp_offset + i * hermitian_param_count(n);
      const Mat xi_inv_scaled = xi_inv / kLn2;
      prog.constraints.push_back(
          {[=](const RealVec& x) {
             const Mat omega = unpack_hermitian(x, off, n);
             double val = base + (xi_inv_scaled * omega).trace().real() - log2_det_or_throw(omega);
             for (int k = 0; k < ues; ++k) val += x(k) * x(k) * coupling(k);
             return val;
           },
           [=](const RealVec& x) {
             RealVec g = RealVec::Zero(dim);
             const Mat omega = unpack_hermitian(x, off, n);
             const Mat d = xi_inv_scaled - HermitianInverse::of(omega) / kLn2;
             accumulate_hermitian_gradient(d, g, off);
             for (int k = 0; k < ues; ++k) g(k) = 2.0 * x(k) * coupling(k);
             return g;
           },
           "fronthaul"});
    }
  }

  prog.start = RealVec::Zero(dim);
  for (int k = 0; k < ues; ++k) prog.start(k) = std::sqrt(state.powers(k));
  for (int i = 0; i < aps; ++i) {
    if (options.equal_rate) {
      for (int j = 0; j < n; ++j) prog.start(comp_offset + i * n + j) = state.quant_cov[i](j, j).real();
    } else {
      pack_hermitian(state.quant_cov[i], prog.start, comp_offset + i * hermitian_param_count(n));
    }
  }
  return pack;
}

void UplinkDigitalPack::apply(const RealVec& x, UplinkState& state) const {
  for (int k = 0; k < ues; ++k) state.powers(k) = x(k) * x(k);
  for (int i = 0; i < aps; ++i) {
    if (equal_rate) {
      Vec diag(chains);
      for (int j = 0; j < chains; ++j) diag(j) = x(comp_offset + i * chains + j);
      state.quant_cov[i] = diag.asDiagonal();
    } else {
      state.quant_cov[i] = unpack_hermitian(x, comp_offset + i * hermitian_param_count(chains), chains);
    }
  }
}

// --- wave-only combiner pack ---

UplinkCombinerPack pack_uplink_combiner(const SystemConfig& config, const Mat& eff,
                                        const UplinkState& state, const AuxiliaryState& aux) {
  const int ues = config.num_ues;
  const int aps = config.num_aps;
  const int total = static_cast<int>(eff.rows());
  const int n = total / aps;
  const RealVec alpha = config.weights(Direction::Uplink);

  UplinkCombinerPack pack;
  pack.chains = n;
  pack.aps = aps;
  pack.ues = ues;

  Mat cov = config.uplink_noise * Mat::Identity(total, total);
  for (int i = 0; i < aps; ++i) cov.block(i * n, i * n, n, n) += state.quant_cov[i];
  for (int k = 0; k < ues; ++k) cov.noalias() += state.powers(k) * (eff.col(k) * eff.col(k).adjoint());
  const RealMat cov_re = cov.real();  // u real: u^T Re(S) u = u^H S u

  RealMat lin(total, ues);
  RealVec quad_scale(ues);
  double constant = 0.0;
  for (int k = 0; k < ues; ++k) {
    const double scale = alpha(k) * (1.0 + aux.sinr(k)) / kLn2;
    constant += alpha(k) * (std::log2(1.0 + aux.sinr(k)) - aux.sinr(k) / kLn2);
    const double root_p = std::sqrt(state.powers(k));
    for (int j = 0; j < total; ++j)
      lin(j, k) = scale * 2.0 * root_p * std::real(aux.weight(k) * std::conj(eff(j, k)));
    quad_scale(k) = scale * std::norm(aux.weight(k));
  }

  auto& prog = pack.program;
  const int dim = total * ues;
  prog.dim = dim;
  prog.lower = RealVec::Zero(dim);
  prog.upper = RealVec::Constant(dim, kInf);
  prog.objective = [=](const RealVec& x) {
    double val = constant;
    for (int k = 0; k < ues; ++k) {
      const RealVec u = x.segment(k * total, total);
      val += lin.col(k).dot(u) - quad_scale(k) * u.dot(cov_re * u);
    }
    return val;
  };
  prog.objective_gradient = [=](const RealVec& x) {
    RealVec g(dim);
    for (int k = 0; k < ues; ++k) {
      const RealVec u = x.segment(k * total, total);
      g.segment(k * total, total) = lin.col(k) - 2.0 * quad_scale(k) * (cov_re * u);
    }
    return g;
  };
  prog.start = RealVec::Zero(dim);
  for (int k = 0; k < ues; ++k)
    for (int j = 0; j < total; ++j) prog.start(k * total + j) = std::max(state.combiners(j, k).real(), 0.0);
  return pack;
}

void UplinkCombinerPack::apply(const RealVec& x, UplinkState& state) const {
  const int total = chains * aps;
  for (int k = 0; k < ues; ++k)
    for (int j = 0; j < total; ++j) state.combiners(j, k) = cplx(x(k * total + j), 0.0);
}

// --- downlink digital pack ---

DownlinkDigitalPack pack_downlink_digital(const SystemConfig& config, const Mat& eff,
                                          const DownlinkState& state, const AuxiliaryState& aux,
                                          const PackOptions& options) {
  const int ues = config.num_ues;
  const int aps = config.num_aps;
  const int total = static_cast<int>(eff.rows());
  const int n = total / aps;
  const RealVec alpha = config.weights(Direction::Downlink);
  const double sigma2 = config.downlink_noise;
  const double cap = config.fronthaul_capacity;
  const double omega_floor = 1e-10 * sigma2;

  DownlinkDigitalPack pack;
  pack.equal_rate = options.equal_rate;
  pack.chains = n;
  pack.aps = aps;
  pack.ues = ues;
  pack.beam_offset = 0;
  const int beam_params = 2 * total;
  pack.comp_offset = ues * beam_params;
  const int comp_params = options.equal_rate ? n : hermitian_param_count(n);
  const int dim = pack.comp_offset + aps * comp_params;
  const int comp_offset = pack.comp_offset;

  RealVec scale(ues);
  Vec lin_weight(ues);
  double constant = 0.0;
  Mat quad = Mat::Zero(total, total);  // shared across beamformer blocks
  std::vector<Mat> omega_coeff(aps, Mat::Zero(n, n));
  for (int k = 0; k < ues; ++k) {
    scale(k) = alpha(k) * (1.0 + aux.sinr(k)) / kLn2;
    constant += alpha(k) * (std::log2(1.0 + aux.sinr(k)) - aux.sinr(k) / kLn2);
    constant -= scale(k) * std::norm(aux.weight(k)) * sigma2;
    lin_weight(k) = scale(k) * aux.weight(k);
    quad.noalias() += scale(k) * std::norm(aux.weight(k)) * (eff.col(k) * eff.col(k).adjoint());
    for (int i = 0; i < aps; ++i) {
      const Vec hi = eff.col(k).segment(i * n, n);
      omega_coeff[i].noalias() += scale(k) * std::norm(aux.weight(k)) * (hi * hi.adjoint());
    }
  }

  auto& prog = pack.program;
  prog.dim = dim;
  prog.lower = RealVec::Constant(dim, -kInf);
  prog.upper = RealVec::Constant(dim, kInf);
  if (options.wave_only) {
    for (int k = 0; k < ues; ++k)
      for (int j = 0; j < total; ++j) {
        prog.lower(k * beam_params + 2 * j) = 0.0;      // Re >= 0
        prog.lower(k * beam_params + 2 * j + 1) = 0.0;  // Im pinned to 0
        prog.upper(k * beam_params + 2 * j + 1) = 0.0;
      }
  }
  if (options.equal_rate) {
    for (int i = 0; i < aps; ++i)
      for (int j = 0; j < n; ++j) prog.lower(comp_offset + i * n + j) = omega_floor;
  } else {
    for (int i = 0; i < aps; ++i)
      prog.psd_blocks.push_back({comp_offset + i * hermitian_param_count(n), n, omega_floor});
  }

  prog.objective = [=](const RealVec& x) {
    double val = constant;
    for (int k = 0; k < ues; ++k) {
      const Vec v = unpack_complex(x, k * beam_params, total);
      val += 2.0 * std::real((lin_weight(k) * eff.col(k)).dot(v));
      val -= std::real(v.dot(quad * v));
    }
    for (int i = 0; i < aps; ++i) {
      if (options.equal_rate) {
        for (int j = 0; j < n; ++j)
          val -= omega_coeff[i](j, j).real() * x(comp_offset + i * n + j);
      } else {
        const Mat omega = unpack_hermitian(x, comp_offset + i * hermitian_param_count(n), n);
        val -= (omega_coeff[i] * omega).trace().real();
      }
    }
    return val;
  };
  prog.objective_gradient = [=](const RealVec& x) {
    RealVec g = RealVec::Zero(dim);
    for (int k = 0; k < ues; ++k) {
      const Vec v = unpack_complex(x, k * beam_params, total);
      accumulate_complex_gradient(lin_weight(k) * eff.col(k) - quad * v, g, k * beam_params);
    }
    for (int i = 0; i < aps; ++i) {
      if (options.equal_rate) {
        for (int j = 0; j < n; ++j) g(comp_offset + i * n + j) -= omega_coeff[i](j, j).real();
      } else {
        accumulate_hermitian_gradient(-omega_coeff[i], g, comp_offset + i * hermitian_param_count(n));
      }
    }
    return g;
  };

  // per-AP power constraints
  for (int i = 0; i < aps; ++i) {
    prog.constraints.push_back(
        {[=](const RealVec& x) {
           double used = 0.0;
           for (int k = 0; k < ues; ++k)
             used += unpack_complex(x, k * beam_params + 2 * i * n, n).squaredNorm();
           if (options.equal_rate) {
             for (int j = 0; j < n; ++j) used += x(comp_offset + i * n + j);
           } else {
             const Mat omega = unpack_hermitian(x, comp_offset + i * hermitian_param_count(n), n);
             used += omega.trace().real();
           }
           return used - config.ap_power;
         },
         [=](const RealVec& x) {
           RealVec g = RealVec::Zero(dim);
           for (int k = 0; k < ues; ++k)
             accumulate_complex_gradient(unpack_complex(x, k * beam_params + 2 * i * n, n), g,
                                         k * beam_params + 2 * i * n);
           if (options.equal_rate) {
             for (int j = 0; j < n; ++j) g(comp_offset + i * n + j) = 1.0;
           } else {
             accumulate_hermitian_gradient(Mat::Identity(n, n), g,
                                           comp_offset + i * hermitian_param_count(n));
           }
           return g;
         },
         "power"});
  }

  if (options.equal_rate) {
    const double c_scale = equal_rate_scale(config);
    for (int i = 0; i < aps; ++i)
      for (int j = 0; j < n; ++j) {
        const int nu_index = comp_offset + i * n + j;
        const int entry = i * n + j;
        prog.constraints.push_back(
            {[=](const RealVec& x) {
               double signal = 0.0;
               for (int k = 0; k < ues; ++k) {
                 const cplx v(x(k * beam_params + 2 * entry), x(k * beam_params + 2 * entry + 1));
                 signal += std::norm(v);
               }
               return c_scale * signal - x(nu_index);
             },
             [=](const RealVec& x) {
               RealVec g = RealVec::Zero(dim);
               for (int k = 0; k < ues; ++k) {
                 g(k * beam_params + 2 * entry) = c_scale * 2.0 * x(k * beam_params + 2 * entry);
                 g(k * beam_params + 2 * entry + 1) = c_scale * 2.0 * x(k * beam_params + 2 * entry + 1);
               }
               g(nu_index) = -1.0;
               return g;
             },
             "equal_rate_floor"});
      }
  } else {
    for (int i = 0; i < aps; ++i) {
      const Mat xi_inv = HermitianInverse::of(aux.load_cov[i]);
      const Mat xi_inv_scaled = xi_inv / kLn2;
      const double base = log2_det_or_throw(aux.load_cov[i]) - n / kLn2 - cap;
      const int off = comp_offset + i * hermitian_param_count(n);
      prog.constraints.push_back(
          {[=](const RealVec& x) {
             const Mat omega = unpack_hermitian(x, off, n);
             double val = base + (xi_inv_scaled * omega).trace().real() - log2_det_or_throw(omega);
             for (int k = 0; k < ues; ++k) {
               const Vec vi = unpack_complex(x, k * beam_params + 2 * i * n, n);
               val += (vi.adjoint() * xi_inv_scaled * vi).value().real();
             }
             return val;
           },
           [=](const RealVec& x) {
             RealVec g = RealVec::Zero(dim);
             const Mat omega = unpack_hermitian(x, off, n);
             accumulate_hermitian_gradient(xi_inv_scaled - HermitianInverse::of(omega) / kLn2, g, off);
             for (int k = 0; k < ues; ++k) {
               const Vec vi = unpack_complex(x, k * beam_params + 2 * i * n, n);
               accumulate_complex_gradient(xi_inv_scaled * vi, g, k * beam_params + 2 * i * n);
             }
             return g;
           },
           "fronthaul"});
    }
  }

  prog.start = RealVec::Zero(dim);
  for (int k = 0; k < ues; ++k) pack_complex(state.beamformers.col(k), prog.start, k * beam_params);
  for (int i = 0; i < aps; ++i) {
    if (options.equal_rate) {
      for (int j = 0; j < n; ++j) prog.start(comp_offset + i * n + j) = state.quant_cov[i](j, j).real();
    } else {
      pack_hermitian(state.quant_cov[i], prog.start, comp_offset + i * hermitian_param_count(n));
    }
  }
  return pack;
}

void DownlinkDigitalPack::apply(const RealVec& x, DownlinkState& state) const {
  const int total = chains * aps;
  for (int k = 0; k < ues; ++k) state.beamformers.col(k) = unpack_complex(x, k * 2 * total, total);
  for (int i = 0; i < aps; ++i) {
    if (equal_rate) {
      Vec diag(chains);
      for (int j = 0; j < chains; ++j) diag(j) = x(comp_offset + i * chains + j);
      state.quant_cov[i] = diag.asDiagonal();
    } else {
      state.quant_cov[i] = unpack_hermitian(x, comp_offset + i * hermitian_param_count(chains), chains);
    }
  }
}

// --- wave layer pack ---

WaveLayerPack pack_wave_layer(const SystemConfig& config, const LayerForms& forms,
                              const UplinkState& state, const std::vector<std::vector<Vec>>& diagonals,
                              const AuxiliaryState& aux, int layer, double penalty,
                              const PackOptions& options) {
  const int aps = config.num_aps;
  const int m = config.atoms_per_layer;
  const int stacked = m * aps;
  const RealVec alpha = config.weights(Direction::Uplink);
  const double cap = config.fronthaul_capacity;
  const double sigma2 = config.uplink_noise;

  WaveLayerPack pack;
  pack.layer = layer;
  pack.atoms = m;
  pack.aps = aps;

  Vec target(stacked);  // Psi diagonal entries
  for (int i = 0; i < aps; ++i) target.segment(i * m, m) = aux.phase_target.at(i).at(layer - 1);

  Vec lin = Vec::Zero(stacked);
  Mat quad = Mat::Zero(stacked, stacked);
  double constant = 0.0;
  for (int k = 0; k < config.num_ues; ++k) {
    const auto& f = forms.per_ue[k];
    lin += alpha(k) * f.lin;
    quad += alpha(k) * f.quad;
    constant += alpha(k) * f.constant;
  }
  if (penalty > 0.0) {
    lin += penalty * target;
    quad += penalty * Mat::Identity(stacked, stacked);
    constant -= penalty * target.squaredNorm();
  }

  auto& prog = pack.program;
  const int dim = 2 * stacked;
  prog.dim = dim;
  prog.objective = [=](const RealVec& x) {
    const Vec phi = unpack_complex(x, 0, stacked);
    return constant + 2.0 * std::real(lin.dot(phi)) - std::real(phi.dot(quad * phi));
  };
  prog.objective_gradient = [=](const RealVec& x) {
    const Vec phi = unpack_complex(x, 0, stacked);
    RealVec g = RealVec::Zero(dim);
    accumulate_complex_gradient(lin - quad * phi, g, 0);
    return g;
  };

  prog.disks.reserve(stacked);
  for (int j = 0; j < stacked; ++j) prog.disks.push_back({2 * j, 2 * j + 1, 1.0});

  const int ues = config.num_ues;
  if (options.equal_rate) {
    const double c_scale = equal_rate_scale(config);
    for (int i = 0; i < aps; ++i) {
      for (int j = 0; j < config.rf_chains; ++j) {
        const double nu = state.quant_cov[i](j, j).real();
        // rows of the per-(UE, AP) channel maps give the per-element signal
        Mat rows(ues, m);
        for (int k = 0; k < ues; ++k) rows.row(k) = forms.channel_maps[k][i].row(j);
        const RealVec powers = state.powers;
        const int off = 2 * i * m;
        prog.constraints.push_back(
            {[=](const RealVec& x) {
               const Vec phi = unpack_complex(x, off, m);
               double signal = sigma2;
               for (int k = 0; k < ues; ++k) signal += powers(k) * std::norm((rows.row(k) * phi)(0, 0));
               return c_scale * signal - nu;
             },
             [=](const RealVec& x) {
               const Vec phi = unpack_complex(x, off, m);
               RealVec g = RealVec::Zero(dim);
               Vec cg = Vec::Zero(m);
               for (int k = 0; k < ues; ++k) {
                 const cplx s = (rows.row(k) * phi)(0, 0);
                 cg += powers(k) * s * rows.row(k).adjoint();
               }
               accumulate_complex_gradient(c_scale * cg, g, off);
               return g;
             },
             "equal_rate_floor"});
      }
    }
  } else {
    for (int i = 0; i < aps; ++i) {
      const double fh_const = forms.per_ap[i].constant;
      const Mat fh_quad = forms.per_ap[i].quad;
      const int off = 2 * i * m;
      prog.constraints.push_back(
          {[=](const RealVec& x) {
             const Vec phi = unpack_complex(x, off, m);
             return fh_const + std::real(phi.dot(fh_quad * phi)) - cap;
           },
           [=](const RealVec& x) {
             const Vec phi = unpack_complex(x, off, m);
             RealVec g = RealVec::Zero(dim);
             accumulate_complex_gradient(fh_quad * phi, g, off);
             return g;
           },
           "fronthaul"});
    }
  }

  prog.start = RealVec::Zero(prog.dim);
  for (int i = 0; i < aps; ++i) pack_complex(diagonals[i][layer - 1], prog.start, 2 * i * m);
  return pack;
}

void WaveLayerPack::apply(const RealVec& x, std::vector<std::vector<Vec>>& diagonals) const {
  for (int i = 0; i < aps; ++i) diagonals[i][layer - 1] = unpack_complex(x, 2 * i * atoms, atoms);
}

// --- feasibility restoration ---

void restore_uplink_feasibility(const SystemConfig& config, const Mat& eff, UplinkState& state,
                                const PackOptions& options, double margin) {
  if (options.equal_rate) {
    for (int i = 0; i < config.num_aps; ++i) {
      const RealVec floor = equal_rate_noise_floor(config, eff, state, i);
      Mat omega = state.quant_cov[i];
      for (int j = 0; j < config.rf_chains; ++j) {
        const double target = floor(j) * (1.0 + 1e-9) + 1e-300;
        if (omega(j, j).real() < target) omega(j, j) = target;
      }
      state.quant_cov[i] = omega;
    }
    return;
  }
  const double target = config.fronthaul_capacity - margin;
  for (int i = 0; i < config.num_aps; ++i) {
    const auto load = [&](double factor) {
      UplinkState probe = state;
      probe.quant_cov[i] = factor * state.quant_cov[i];
      return uplink_fronthaul_load(config, eff, probe, i);
    };
    if (load(1.0) <= target) continue;
    double lo = 1.0, hi = 2.0;
    while (load(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e30) throw SolverError("fronthaul restoration failed to bracket");
    }
    while ((hi - lo) / hi > 1e-9) {
      const double mid = 0.5 * (lo + hi);
      (load(mid) > target ? lo : hi) = mid;
    }
    state.quant_cov[i] = hi * state.quant_cov[i];
  }
}

RealVec equal_rate_noise_floor(const SystemConfig& config, const Mat& eff, const UplinkState& state,
                               int ap) {
  const int n = config.rf_chains;
  const double c_scale = equal_rate_scale(config);
  RealVec floor(n);
  for (int j = 0; j < n; ++j) {
    double signal = config.uplink_noise;
    for (int k = 0; k < config.num_ues; ++k) signal += state.powers(k) * std::norm(eff(ap * n + j, k));
    floor(j) = c_scale * signal;
  }
  return floor;
}

RealVec equal_rate_noise_floor(const SystemConfig& config, const DownlinkState& state, int ap) {
  const int n = static_cast<int>(state.beamformers.rows()) / config.num_aps;
  const double c_scale = equal_rate_scale(config);
  RealVec floor(n);
  for (int j = 0; j < n; ++j) {
    double signal = 0.0;
    for (int k = 0; k < config.num_ues; ++k) signal += std::norm(state.beamformers(ap * n + j, k));
    floor(j) = c_scale * signal;
  }
  return floor;
}

namespace {

Mat stationarity_cov(const Mat& xi_inv, const Mat& pressure, double mu) {
  const int n = static_cast<int>(xi_inv.rows());
  return HermitianInverse::of(Mat(xi_inv + (kLn2 / mu) * pressure +
                                  1e-300 * Mat::Identity(n, n)));
}

double load_term(const Mat& xi_inv, const Mat& omega) {
  return (xi_inv * omega).trace().real() / kLn2 - log2_det_hermitian(omega);
}

}  // namespace

Mat optimal_quant_cov(const Mat& xi_inv, const Mat& coeff, double budget, const Mat& incumbent,
                      double power_budget) {
  const int n = static_cast<int>(xi_inv.rows());
  // land strictly inside both constraints so the next barrier start is valid
  budget -= 1e-7 * std::max(1.0, std::abs(budget));
  if (power_budget >= 0.0) power_budget *= 1.0 - 1e-9;
  // ridge keeps the pressure matrix PD so the stationarity inverse exists
  const double ridge = std::max(1e-12, 1e-9 * std::abs(coeff.trace().real()) / n);
  const Mat pressure_base = coeff + ridge * Mat::Identity(n, n);

  const auto solve_mu = [&](const Mat& pressure) -> Mat {
    // load_term along Omega(mu) decreases in mu; find the smallest feasible mu
    double lo = 1e-14, hi = 1e14;
    if (load_term(xi_inv, stationarity_cov(xi_inv, pressure, hi)) > budget) return incumbent;
    if (load_term(xi_inv, stationarity_cov(xi_inv, pressure, lo)) <= budget)
      return stationarity_cov(xi_inv, pressure, lo);
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
      const double mid = std::sqrt(lo * hi);
      (load_term(xi_inv, stationarity_cov(xi_inv, pressure, mid)) > budget ? lo : hi) = mid;
    }
    return stationarity_cov(xi_inv, pressure, hi);
  };

  try {
    Mat best = solve_mu(pressure_base);
    if (power_budget >= 0.0 && best.trace().real() > power_budget) {
      // activate the power multiplier and bisect it to the power boundary
      double lo = 1e-12, hi = 1e12;
      const auto power_at = [&](double nu) {
        return solve_mu(Mat(pressure_base + nu * Mat::Identity(n, n))).trace().real();
      };
      if (power_at(hi) > power_budget) return incumbent;
      for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-12; ++it) {
        const double mid = std::sqrt(lo * hi);
        (power_at(mid) > power_budget ? lo : hi) = mid;
      }
      best = solve_mu(Mat(pressure_base + hi * Mat::Identity(n, n)));
    }
    return best;
  } catch (const std::runtime_error&) {
    return incumbent;
  }
}

}  // namespace simcf
