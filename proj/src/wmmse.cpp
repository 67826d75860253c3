// SPDX-License-Identifier: Apache-2.0

#include "metabf/wmmse.hpp"

#include <chrono>
#include <cmath>
#include <optional>

namespace metabf {

namespace {

constexpr double kPowerTolerance = 1e-8;
constexpr int kMaxDoublings = 60;
constexpr int kMaxBisections = 200;

ComplexMatrix identity(Eigen::Index n) { return ComplexMatrix::Identity(n, n); }

void check_sizes(const ChannelSet& h, std::size_t a, std::size_t b, const char* what) {
  if (h.empty() || a != h.size() || b != h.size()) {
    throw DimensionError(std::string(what) + ": per-user list sizes disagree");
  }
}

// Pieces of the beamformer update that do not depend on mu.
struct BeamformerSystem {
  ComplexMatrix j;                 // sum_r alpha_r H_r^H U_r W_r U_r^H H_r
  std::vector<ComplexMatrix> rhs;  // alpha_k H_k^H U_k W_k
  std::vector<ComplexMatrix> g;    // U_k^H H_k
  Eigen::Index n_tx = 0;
  Eigen::Index total_streams = 0;
};

BeamformerSystem build_system(const ChannelSet& h, std::span<const ComplexMatrix> u,
                              std::span<const ComplexMatrix> w, std::span<const double> weights) {
  check_sizes(h, u.size(), w.size(), "update_beamformers");
  if (weights.size() != h.size()) throw DimensionError("update_beamformers: weight count");
  BeamformerSystem sys;
  sys.n_tx = h.front().cols();
  sys.j = ComplexMatrix::Zero(sys.n_tx, sys.n_tx);
  for (std::size_t k = 0; k < h.size(); ++k) {
    ComplexMatrix gk = mul_ah(u[k], h[k]);
    ComplexMatrix t = weights[k] * mul_ah(gk, w[k]);  // alpha_k H^H U W
    sys.j += mul(t, gk);
    sys.rhs.push_back(std::move(t));
    sys.total_streams += gk.rows();
    sys.g.push_back(std::move(gk));
  }
  sys.j = hermitian_part(sys.j);
  return sys;
}

BeamformerSet solve_primal(const BeamformerSystem& sys, double mu) {
  ComplexMatrix lhs = sys.j;
  lhs.diagonal().array() += mu;
  const HpdFactor fac(lhs);
  BeamformerSet v;
  v.reserve(sys.rhs.size());
  for (const auto& r : sys.rhs) v.push_back(fac.solve(r));
  return v;
}

// Minimum-norm unconstrained solution through the K*d x K*d system
// V = G^H (G G^H)^{-1}, used when J is rank deficient (K*d < N_t).
BeamformerSet solve_dual_unconstrained(const BeamformerSystem& sys) {
  ComplexMatrix g(sys.total_streams, sys.n_tx);
  Eigen::Index row = 0;
  for (const auto& gk : sys.g) {
    g.middleRows(row, gk.rows()) = gk;
    row += gk.rows();
  }
  const ComplexMatrix gram = hermitian_part(mul_bh(g, g));
  const ComplexMatrix all = mul_ah(g, solve_hpd(gram, identity(sys.total_streams)));
  BeamformerSet v;
  Eigen::Index col = 0;
  for (const auto& gk : sys.g) {
    v.push_back(all.middleCols(col, gk.rows()));
    col += gk.rows();
  }
  return v;
}

std::optional<BeamformerSet> unconstrained_solution(const BeamformerSystem& sys) {
  try {
    if (sys.total_streams < sys.n_tx) return solve_dual_unconstrained(sys);
    return solve_primal(sys, 0.0);
  } catch (const SingularityError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<ComplexMatrix> update_receivers(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                            double sigma2) {
  check_sizes(h, v.size(), v.size(), "update_receivers");
  const ComplexMatrix s = transmit_covariance(v);
  std::vector<ComplexMatrix> u;
  u.reserve(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    const ComplexMatrix a = received_covariance_from(h[k], s, sigma2);
    u.push_back(solve_hpd(a, mul(h[k], v[k])));
  }
  return u;
}

std::vector<ComplexMatrix> mse_matrices(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                        std::span<const ComplexMatrix> u, double sigma2) {
  check_sizes(h, v.size(), u.size(), "mse_matrices");
  const ComplexMatrix s = transmit_covariance(v);
  std::vector<ComplexMatrix> e;
  e.reserve(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    // (I - T V_k)(I - T V_k)^H + sum_{r != k} T V_r V_r^H T^H + sigma2 U^H U, T = U^H H
    // = I - T V_k - (T V_k)^H + T S T^H + sigma2 U^H U
    const ComplexMatrix t = mul_ah(u[k], h[k]);
    const ComplexMatrix tv = mul(t, v[k]);
    ComplexMatrix ek = identity(tv.rows()) - tv - tv.adjoint() + mul_bh(mul(t, s), t) +
                       sigma2 * mul_ah(u[k], u[k]);
    e.push_back(hermitian_part(ek));
  }
  return e;
}

std::vector<ComplexMatrix> update_weights(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                          std::span<const ComplexMatrix> u, double sigma2) {
  const std::vector<ComplexMatrix> e = mse_matrices(h, v, u, sigma2);
  std::vector<ComplexMatrix> w;
  w.reserve(e.size());
  for (std::size_t k = 0; k < e.size(); ++k) {
    try {
      w.push_back(hermitian_part(solve_hpd(e[k], identity(e[k].rows()))));
    } catch (const SingularityError& err) {
      throw SingularityError("update_weights: MSE matrix of user " + std::to_string(k) +
                             " is numerically singular (noise power too small?): " + err.what());
    }
  }
  return w;
}

BeamformerSet beamformers_at(const ChannelSet& h, std::span<const ComplexMatrix> u,
                             std::span<const ComplexMatrix> w, std::span<const double> weights,
                             double mu) {
  return solve_primal(build_system(h, u, w, weights), mu);
}

BeamformerUpdate update_beamformers(const ChannelSet& h, std::span<const ComplexMatrix> u,
                                    std::span<const ComplexMatrix> w,
                                    std::span<const double> weights, double total_power) {
  const BeamformerSystem sys = build_system(h, u, w, weights);

  if (auto v0 = unconstrained_solution(sys); v0 && frob2(*v0) <= total_power) {
    return {std::move(*v0), 0.0, 0};
  }

  ++op_counters().bisections;
  BeamformerUpdate out;
  // power(mu) is strictly decreasing; bracket [lo, hi] with power(hi) <= P.
  double lo = 0.0;
  double hi = 1.0;
  BeamformerSet v_hi = solve_primal(sys, hi);
  double p_hi = frob2(v_hi);
  int doublings = 0;
  while (p_hi > total_power) {
    if (++doublings > kMaxDoublings) {
      throw NumericalError("update_beamformers: no upper bracket for the power multiplier");
    }
    lo = hi;
    hi *= 2.0;
    v_hi = solve_primal(sys, hi);
    p_hi = frob2(v_hi);
  }
  if (lo == 0.0) {
    // power(1) is already feasible; walk down until it is not.
    double probe = hi;
    for (int halvings = 0; halvings < kMaxDoublings; ++halvings) {
      probe *= 0.5;
      BeamformerSet v_probe = solve_primal(sys, probe);
      const double p_probe = frob2(v_probe);
      if (p_probe > total_power) {
        lo = probe;
        break;
      }
      hi = probe;
      v_hi = std::move(v_probe);
      p_hi = p_probe;
    }
    if (lo == 0.0) {
      // Constraint inactive in the limit mu -> 0; keep the smallest probe and
      // report the multiplier as zero.
      out.v = std::move(v_hi);
      out.mu = 0.0;
      return out;
    }
  }

  int steps = 0;
  while (steps < kMaxBisections && hi - lo > 1e-15 * hi &&
         total_power - p_hi > 1e-14 * total_power) {
    ++steps;
    const double mid = 0.5 * (lo + hi);
    BeamformerSet v_mid = solve_primal(sys, mid);
    const double p_mid = frob2(v_mid);
    if (p_mid > total_power) {
      lo = mid;
    } else {
      hi = mid;
      v_hi = std::move(v_mid);
      p_hi = p_mid;
    }
  }
  if (total_power - p_hi > kPowerTolerance * total_power) {
    throw NumericalError("update_beamformers: bisection stalled away from the power budget");
  }
  out.v = std::move(v_hi);
  out.mu = hi;
  out.bisection_steps = steps;
  return out;
}

double wmmse_surrogate(const ChannelSet& h, std::span<const ComplexMatrix> v,
                       std::span<const ComplexMatrix> u, std::span<const ComplexMatrix> w,
                       double sigma2, std::span<const double> weights) {
  const std::vector<ComplexMatrix> e = mse_matrices(h, v, u, sigma2);
  double total = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double trace = (w[k] * e[k]).trace().real();
    total += weights[k] * (trace - std::log(2.0) * logdet2_hpd(w[k]));
  }
  return total;
}

void wmmse_sweep(const ChannelSet& h, double sigma2, std::span<const double> weights,
                 double total_power, WmmseState& state) {
  state.u = update_receivers(h, state.v, sigma2);
  state.w = update_weights(h, state.v, state.u, sigma2);
  BeamformerUpdate upd = update_beamformers(h, state.u, state.w, weights, total_power);
  state.v = std::move(upd.v);
  state.mu = upd.mu;
  ++state.iteration;
}

RunTrajectory run_wmmse_from(const ChannelSet& h, const ScenarioConfig& config, int max_iters,
                             BeamformerSet v0) {
  if (max_iters < 1) throw std::invalid_argument("run_wmmse: max_iters must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  reset_op_counters();

  const std::vector<double> weights = config.weights();
  const double sigma2 = noise_variance(config);
  const WsrProblem problem{h, sigma2, weights};

  RunTrajectory traj;
  traj.algorithm = "wmmse";
  WmmseState state;
  state.v = std::move(v0);
  state.last_wsr = wsr_value(problem, state.v);
  traj.initial_wsr = state.last_wsr;

  for (int t = 0; t < max_iters; ++t) {
    wmmse_sweep(h, sigma2, weights, config.total_power, state);
    const double value = wsr_value(problem, state.v);
    traj.record(value, state.v);
    traj.multiplier.push_back(state.mu);
    const double change = std::abs(value - state.last_wsr);
    state.last_wsr = value;
    if (change <= kWmmseStopBits) break;
  }
  traj.final_v = std::move(state.v);
  traj.ops = op_counters();
  traj.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

RunTrajectory run_wmmse(const ChannelSet& h, const ScenarioConfig& config, int max_iters,
                        std::uint64_t realization, std::uint64_t restart) {
  RunTrajectory traj =
      run_wmmse_from(h, config, max_iters, init_beamformers(config, realization, restart));
  traj.realization = realization;
  traj.restart = restart;
  return traj;
}

}  // namespace metabf
