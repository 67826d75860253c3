// SPDX-License-Identifier: Apache-2.0

#include "metabf/mlgd.hpp"

#include <chrono>
#include <stdexcept>

namespace metabf {

namespace {

RealMatrix stack_inputs(std::span<const ComplexMatrix> grads,
                        const std::vector<std::size_t>& users) {
  const Eigen::Index width = 2 * grads[users.front()].size();
  RealMatrix x(width, static_cast<Eigen::Index>(users.size()));
  for (std::size_t j = 0; j < users.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = to_real_view(grads[users[j]]);
  }
  return x;
}

// Applies the network to the listed users of `before` with inputs `x`,
// projects, and records the sub-step. Returns the projected state.
BeamformerSet apply_update(const MetaNetParams& params, const BeamformerSet& before,
                           const RealMatrix& x, std::vector<std::size_t> users,
                           double total_power, std::vector<SubStep>& steps) {
  ForwardResult fwd = net_forward(params, x);
  BeamformerSet y = before;
  for (std::size_t j = 0; j < users.size(); ++j) {
    auto col = fwd.y.col(static_cast<Eigen::Index>(j));
    ComplexMatrix& vk = y[users[j]];
    vk += from_real_view(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())),
                         vk.rows(), vk.cols());
  }
  SubStep step;
  BeamformerSet after = project_power(y, total_power, step.scale);
  step.users = std::move(users);
  step.before = before;
  step.pre_projection = std::move(y);
  step.tape = std::move(fwd.tape);
  steps.push_back(std::move(step));
  return after;
}

// One MLGD iteration from `rec.v` with gradient `rec.gradient`. With `replay`
// set, the network inputs are taken from that record instead of being
// recomputed (the detached-input view of the same computation).
BeamformerSet advance(const MlgdStepContext& ctx, const MetaNetParams& params,
                      IterationRecord& rec, const IterationRecord* replay) {
  const std::size_t k_users = rec.v.size();
  auto input = [&](std::size_t s, std::span<const ComplexMatrix> g,
                   const std::vector<std::size_t>& users) {
    return replay != nullptr ? replay->steps.at(s).tape.input : stack_inputs(g, users);
  };
  if (ctx.order == UpdateOrder::kJacobi) {
    std::vector<std::size_t> all(k_users);
    for (std::size_t k = 0; k < k_users; ++k) all[k] = k;
    const RealMatrix x = input(0, rec.gradient, all);
    return apply_update(params, rec.v, x, std::move(all), ctx.total_power, rec.steps);
  }
  // Per-user loop: each user sees the gradient at the partially updated
  // state, and the projection runs after every user.
  BeamformerSet next = rec.v;
  for (std::size_t k = 0; k < k_users; ++k) {
    RealMatrix x;
    if (replay != nullptr || k == 0) {
      x = input(k, rec.gradient, {k});
    } else {
      x = stack_inputs(wsr_gradient(ctx.problem, next), {k});
    }
    next = apply_update(params, next, x, {k}, ctx.total_power, rec.steps);
  }
  return next;
}

}  // namespace

std::string_view to_string(UpdateOrder order) {
  return order == UpdateOrder::kJacobi ? "jacobi" : "gauss_seidel";
}

std::string_view to_string(ReportMode mode) {
  return mode == ReportMode::kBestIterate ? "best" : "last";
}

UpdateOrder parse_update_order(std::string_view text) {
  if (text == "jacobi") return UpdateOrder::kJacobi;
  if (text == "gauss_seidel" || text == "gauss-seidel") return UpdateOrder::kGaussSeidel;
  throw std::invalid_argument("unknown update order '" + std::string(text) + "'");
}

ReportMode parse_report_mode(std::string_view text) {
  if (text == "best" || text == "best_iterate") return ReportMode::kBestIterate;
  if (text == "last" || text == "last_iterate") return ReportMode::kLastIterate;
  throw std::invalid_argument("unknown report mode '" + std::string(text) + "'");
}

void MlgdConfig::validate() const {
  if (window < 1) throw std::invalid_argument("mlgd: window must be >= 1");
  if (total_iters < window) throw std::invalid_argument("mlgd: total_iters must be >= window");
  if (!(meta_lr >= 0.0)) throw std::invalid_argument("mlgd: meta_lr must be >= 0");
}

BeamformerSet mlgd_iteration(const MlgdStepContext& ctx, const BeamformerSet& v,
                             const MetaNetParams& params, WindowTape& tape,
                             const WsrWithGradient* at_v) {
  IterationRecord rec;
  rec.v = v;
  if (at_v != nullptr) {
    rec.wsr = at_v->wsr;
    rec.gradient = at_v->gradient;
  } else {
    WsrWithGradient eval = wsr_and_gradient(ctx.problem, v);
    rec.wsr = eval.wsr;
    rec.gradient = std::move(eval.gradient);
  }
  BeamformerSet next = advance(ctx, params, rec, nullptr);
  tape.meta_loss += rec.wsr;
  tape.iterations.push_back(std::move(rec));
  return next;
}

double replay_window_loss(const MlgdStepContext& ctx, const BeamformerSet& v0,
                          const MetaNetParams& params, int window, const WindowTape* detached) {
  if (detached != nullptr && static_cast<int>(detached->size()) != window) {
    throw DimensionError("replay_window_loss: recorded tape length differs from the window");
  }
  BeamformerSet v = v0;
  double loss = 0.0;
  for (int r = 0; r < window; ++r) {
    IterationRecord rec;
    rec.v = std::move(v);
    WsrWithGradient eval = wsr_and_gradient(ctx.problem, rec.v);
    loss += eval.wsr;
    rec.gradient = std::move(eval.gradient);
    v = advance(ctx, params, rec,
                detached != nullptr ? &detached->iterations[static_cast<std::size_t>(r)] : nullptr);
  }
  return loss;
}

MetaNetParams meta_backward(const WindowTape& tape, const MetaNetParams& params,
                            const WsrProblem& problem, bool detach_inputs) {
  MetaNetParams grads = params.zeros_like();
  if (tape.iterations.empty()) return grads;

  const BeamformerSet& shape = tape.iterations.front().v;
  // Adjoint dL/dz in the stacked real view; starts at the iterate after the
  // window, which the window's loss does not see.
  RealVector adjoint = RealVector::Zero(to_real_view(shape).size());

  for (std::size_t r = tape.iterations.size(); r-- > 0;) {
    const IterationRecord& rec = tape.iterations[r];
    for (std::size_t s = rec.steps.size(); s-- > 0;) {
      const SubStep& step = rec.steps[s];
      if (adjoint.isZero(0.0)) continue;

      // after = c * y with c = sqrt(P / |y|^2):
      // dL/dy = c * (a - y (y . a) / |y|^2)
      const RealVector y = to_real_view(step.pre_projection);
      const RealVector dl_dy = step.scale * (adjoint - y * (y.dot(adjoint) / y.squaredNorm()));

      // Cotangent of each moved user's network output.
      const Eigen::Index width = step.tape.post.back().rows();
      RealMatrix dl_dout(width, static_cast<Eigen::Index>(step.users.size()));
      for (std::size_t j = 0; j < step.users.size(); ++j) {
        dl_dout.col(static_cast<Eigen::Index>(j)) =
            dl_dy.segment(static_cast<Eigen::Index>(step.users[j]) * width, width);
      }
      BackwardResult back = net_backward(params, step.tape, dl_dout);
      for (std::size_t l = 0; l < grads.layer_count(); ++l) {
        grads.weights[l] += back.dtheta.weights[l];
        grads.biases[l] += back.dtheta.biases[l];
      }

      adjoint = dl_dy;
      if (!detach_inputs) {
        // x_k is the k-th block of (1/2) grad_z F, whose Jacobian is half the
        // symmetric real Hessian; the pullback of dx is the directional
        // derivative of the Wirtinger gradient along dx.
        RealVector direction = RealVector::Zero(adjoint.size());
        for (std::size_t j = 0; j < step.users.size(); ++j) {
          direction.segment(static_cast<Eigen::Index>(step.users[j]) * width, width) =
              back.dx.col(static_cast<Eigen::Index>(j));
        }
        const BeamformerSet dv = from_real_view(
            std::span<const double>(direction.data(), static_cast<std::size_t>(direction.size())),
            shape);
        adjoint += to_real_view(wsr_gradient_directional(problem, step.before, dv));
      }
    }
    // Loss term F(V_r); the first iterate of the window is a constant.
    if (r > 0) adjoint += 2.0 * to_real_view(rec.gradient);
  }
  return grads;
}

MlgdRun run_mlgd_detailed(const ChannelSet& h, const ScenarioConfig& config,
                          const MlgdConfig& mcfg, std::uint64_t realization,
                          std::uint64_t restart) {
  mcfg.validate();
  BeamformerSet v = init_beamformers(config, realization, restart);
  KeyedRng net_rng(config.master_seed, realization, restart, StreamPurpose::kNetInit);
  MetaNetParams params = net_init(meta_net_dims(config.n_tx, config.n_streams), net_rng, mcfg.activation);

  const auto start = std::chrono::steady_clock::now();
  reset_op_counters();

  const std::vector<double> weights = config.weights();
  const WsrProblem problem{h, noise_variance(config), weights};
  const MlgdStepContext ctx{problem, config.total_power, mcfg.update_order};
  AdamState adam = AdamState::zeros(params.parameter_count());

  RunTrajectory traj;
  traj.algorithm = "mlgd";
  traj.realization = realization;
  traj.restart = restart;

  WindowTape tape;
  WsrWithGradient eval = wsr_and_gradient(problem, v);
  traj.initial_wsr = eval.wsr;
  for (int i = 1; i <= mcfg.total_iters; ++i) {
    v = mlgd_iteration(ctx, v, params, tape, &eval);
    if (static_cast<int>(tape.size()) == mcfg.window) {
      const MetaNetParams grads = meta_backward(tape, params, problem, mcfg.detach_inputs);
      net_adam_ascent(params, grads, adam, mcfg.meta_lr);
      ++traj.meta_updates;
      tape.clear();
    }
    eval = wsr_and_gradient(problem, v);
    traj.record(eval.wsr, v);
  }
  traj.final_v = std::move(v);
  traj.ops = op_counters();
  traj.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {std::move(traj), std::move(params)};
}

RunTrajectory run_mlgd(const ChannelSet& h, const ScenarioConfig& config, const MlgdConfig& mcfg,
                       std::uint64_t realization, std::uint64_t restart) {
  return run_mlgd_detailed(h, config, mcfg, realization, restart).trajectory;
}

}  // namespace metabf
