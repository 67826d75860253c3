// SPDX-License-Identifier: Apache-2.0
//
// Total-power projection and the plain first-order baselines.

#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "metabf/linalg.hpp"
#include "metabf/objective.hpp"
#include "metabf/scenario.hpp"
#include "metabf/trajectory.hpp"

namespace metabf {

// Rescales every V_k by the common factor sqrt(P / sum_k Tr(V_k V_k^H)).
// Applied unconditionally, so it scales up as well as down.
BeamformerSet project_power(std::span<const ComplexMatrix> v, double total_power);

// Same projection, also returning the scale factor it applied.
BeamformerSet project_power(std::span<const ComplexMatrix> v, double total_power, double& scale);

struct AdamState {
  RealVector m;
  RealVector v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(Eigen::Index n);

  // Advances the moments by one gradient and returns the bias-corrected
  // direction m_hat / (sqrt(v_hat) + eps).
  RealVector advance(const RealVector& grad);
};

BeamformerSet gd_step(std::span<const ComplexMatrix> v, std::span<const ComplexMatrix> g,
                      double lr, double total_power);

// Ascent Adam on the stacked real/imaginary view, then projection.
BeamformerSet adam_step(std::span<const ComplexMatrix> v, std::span<const ComplexMatrix> g,
                        AdamState& state, double lr, double total_power);

enum class FirstOrderMethod { kGd, kAdam };

std::string_view to_string(FirstOrderMethod method);

inline constexpr double kDefaultGdLr = 1e-1;
inline constexpr double kDefaultAdamLr = 1e-2;

RunTrajectory run_first_order(const ChannelSet& h, const ScenarioConfig& config,
                              FirstOrderMethod method, double lr, int iters,
                              std::uint64_t realization = 0, std::uint64_t restart = 0);

// Same, from an explicit starting point.
RunTrajectory run_first_order_from(const ChannelSet& h, const ScenarioConfig& config,
                                   FirstOrderMethod method, double lr, int iters,
                                   BeamformerSet v0);

}  // namespace metabf
