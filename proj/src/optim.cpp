// SPDX-License-Identifier: Apache-2.0

#include "metabf/optim.hpp"

#include <chrono>
#include <cmath>

namespace metabf {

BeamformerSet project_power(std::span<const ComplexMatrix> v, double total_power, double& scale) {
  const double power = frob2(v);
  if (!(power > 0.0)) throw DegenerateInputError("project_power: all beamformers are zero");
  if (!(total_power > 0.0)) throw std::invalid_argument("project_power: total_power must be > 0");
  scale = std::sqrt(total_power / power);
  BeamformerSet out;
  out.reserve(v.size());
  for (const auto& vk : v) out.push_back(scale * vk);
  return out;
}

BeamformerSet project_power(std::span<const ComplexMatrix> v, double total_power) {
  double scale = 0.0;
  return project_power(v, total_power, scale);
}

AdamState AdamState::zeros(Eigen::Index n) {
  AdamState s;
  s.m = RealVector::Zero(n);
  s.v = RealVector::Zero(n);
  return s;
}

RealVector AdamState::advance(const RealVector& grad) {
  if (m.size() != grad.size() || v.size() != grad.size()) {
    throw DimensionError("AdamState: gradient size " + std::to_string(grad.size()) +
                         " does not match state size " + std::to_string(m.size()));
  }
  ++step;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  return ((m / c1).array() / ((v / c2).array().sqrt() + eps)).matrix();
}

BeamformerSet gd_step(std::span<const ComplexMatrix> v, std::span<const ComplexMatrix> g,
                      double lr, double total_power) {
  if (v.size() != g.size()) throw DimensionError("gd_step: gradient count mismatch");
  if (lr < 0.0) throw std::invalid_argument("gd_step: lr must be >= 0");
  BeamformerSet moved;
  moved.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) moved.push_back(v[k] + lr * g[k]);
  return project_power(moved, total_power);
}

BeamformerSet adam_step(std::span<const ComplexMatrix> v, std::span<const ComplexMatrix> g,
                        AdamState& state, double lr, double total_power) {
  if (v.size() != g.size()) throw DimensionError("adam_step: gradient count mismatch");
  const RealVector direction = state.advance(to_real_view(g));
  const RealVector moved = to_real_view(v) + lr * direction;
  return project_power(from_real_view(std::span(moved.data(), moved.size()), v), total_power);
}

std::string_view to_string(FirstOrderMethod method) {
  return method == FirstOrderMethod::kGd ? "gd" : "adam";
}

RunTrajectory run_first_order_from(const ChannelSet& h, const ScenarioConfig& config,
                                   FirstOrderMethod method, double lr, int iters,
                                   BeamformerSet v0) {
  if (iters < 1) throw std::invalid_argument("run_first_order: iters must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  reset_op_counters();

  const std::vector<double> weights = config.weights();
  const WsrProblem problem{h, noise_variance(config), weights};

  RunTrajectory traj;
  traj.algorithm = std::string(to_string(method));
  BeamformerSet v = std::move(v0);
  AdamState adam = AdamState::zeros(2 * config.n_tx * config.n_streams * config.n_users);

  WsrWithGradient eval = wsr_and_gradient(problem, v);
  traj.initial_wsr = eval.wsr;
  for (int t = 0; t < iters; ++t) {
    v = method == FirstOrderMethod::kGd
            ? gd_step(v, eval.gradient, lr, config.total_power)
            : adam_step(v, eval.gradient, adam, lr, config.total_power);
    eval = wsr_and_gradient(problem, v);
    traj.record(eval.wsr, v);
  }
  traj.final_v = std::move(v);
  traj.ops = op_counters();
  traj.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return traj;
}

RunTrajectory run_first_order(const ChannelSet& h, const ScenarioConfig& config,
                              FirstOrderMethod method, double lr, int iters,
                              std::uint64_t realization, std::uint64_t restart) {
  RunTrajectory traj = run_first_order_from(h, config, method, lr, iters,
                                            init_beamformers(config, realization, restart));
  traj.realization = realization;
  traj.restart = restart;
  return traj;
}

}  // namespace metabf
