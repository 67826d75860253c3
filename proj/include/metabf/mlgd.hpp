// SPDX-License-Identifier: Apache-2.0
//
// Meta-learned gradient descent ("training while solving").
//
// Each iteration feeds the per-user Wirtinger gradient through the update-rule
// network, adds the output to the beamformer and projects back onto the power
// budget. Every `window` iterations the network parameters take one ascent Adam
// step on the summed WSR of the window, differentiated by truncated
// backpropagation through the unrolled updates (projection included).

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "metabf/meta_net.hpp"
#include "metabf/objective.hpp"
#include "metabf/optim.hpp"
#include "metabf/scenario.hpp"
#include "metabf/trajectory.hpp"

namespace metabf {

enum class UpdateOrder { kJacobi, kGaussSeidel };
enum class ReportMode { kBestIterate, kLastIterate };

std::string_view to_string(UpdateOrder order);
std::string_view to_string(ReportMode mode);
UpdateOrder parse_update_order(std::string_view text);
ReportMode parse_report_mode(std::string_view text);

struct MlgdConfig {
  int total_iters = 200;
  int window = 10;
  double meta_lr = kDefaultMetaLr;
  bool detach_inputs = true;
  UpdateOrder update_order = UpdateOrder::kJacobi;
  ReportMode report = ReportMode::kBestIterate;
  Activation activation = Activation::kTanh;

  void validate() const;
};

// One network application: the users it moved, their inputs and the affine
// step y = before + delta, followed by the projection after = scale * y.
struct SubStep {
  std::vector<std::size_t> users;
  BeamformerSet before;
  BeamformerSet pre_projection;
  double scale = 1.0;
  ForwardTape tape;
};

struct IterationRecord {
  BeamformerSet v;             // V_i
  double wsr = 0.0;            // F(V_i), one term of the meta loss
  WirtingerGradient gradient;  // gradient of F at V_i
  std::vector<SubStep> steps;
};

struct WindowTape {
  std::vector<IterationRecord> iterations;
  double meta_loss = 0.0;

  std::size_t size() const { return iterations.size(); }
  void clear() {
    iterations.clear();
    meta_loss = 0.0;
  }
};

struct MlgdStepContext {
  const WsrProblem& problem;
  double total_power;
  UpdateOrder order = UpdateOrder::kJacobi;
};

// Advances V_i to V_{i+1} and appends the iteration to the tape. `at_v` may
// carry a precomputed value/gradient at V_i.
BeamformerSet mlgd_iteration(const MlgdStepContext& ctx, const BeamformerSet& v,
                             const MetaNetParams& params, WindowTape& tape,
                             const WsrWithGradient* at_v = nullptr);

// Re-runs a window of `window` iterations from v0 and returns its meta loss
// sum_{r<window} F(V_r). With `detached` set, the network inputs are the ones
// recorded there rather than fresh gradients. Used as a finite-difference
// oracle for meta_backward.
double replay_window_loss(const MlgdStepContext& ctx, const BeamformerSet& v0,
                          const MetaNetParams& params, int window,
                          const WindowTape* detached = nullptr);

// Gradient of the window's meta loss with respect to the network parameters.
// The window's first iterate is held constant.
MetaNetParams meta_backward(const WindowTape& tape, const MetaNetParams& params,
                            const WsrProblem& problem, bool detach_inputs);

struct MlgdRun {
  RunTrajectory trajectory;
  MetaNetParams final_params;
};

MlgdRun run_mlgd_detailed(const ChannelSet& h, const ScenarioConfig& config,
                          const MlgdConfig& mcfg, std::uint64_t realization = 0,
                          std::uint64_t restart = 0);

RunTrajectory run_mlgd(const ChannelSet& h, const ScenarioConfig& config, const MlgdConfig& mcfg,
                       std::uint64_t realization = 0, std::uint64_t restart = 0);

}  // namespace metabf
