// SPDX-License-Identifier: Apache-2.0
//
// WMMSE alternating minimization: MMSE receivers U_k, weights W_k = E_k^{-1}
// and power-constrained beamformers V_k found by bisection on the Lagrange
// multiplier of the total power constraint.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "metabf/linalg.hpp"
#include "metabf/objective.hpp"
#include "metabf/scenario.hpp"
#include "metabf/trajectory.hpp"

namespace metabf {

inline constexpr double kWmmseStopBits = 1e-4;
inline constexpr int kWmmseDefaultMaxIters = 500;

struct WmmseState {
  std::vector<ComplexMatrix> u;  // N_r x d
  std::vector<ComplexMatrix> w;  // d x d, HPD
  BeamformerSet v;
  double mu = 0.0;
  int iteration = 0;
  double last_wsr = 0.0;
};

// U_k = A_k^{-1} H_k V_k.
std::vector<ComplexMatrix> update_receivers(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                            double sigma2);

// E_k for arbitrary (not necessarily MMSE) receivers.
std::vector<ComplexMatrix> mse_matrices(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                        std::span<const ComplexMatrix> u, double sigma2);

// W_k = E_k^{-1}, Hermitian-symmetrized.
std::vector<ComplexMatrix> update_weights(const ChannelSet& h, std::span<const ComplexMatrix> v,
                                          std::span<const ComplexMatrix> u, double sigma2);

// V_k(mu) = alpha_k (J + mu I)^{-1} H_k^H U_k W_k with
// J = sum_r alpha_r H_r^H U_r W_r U_r^H H_r. Requires mu > 0 unless J is
// positive definite.
BeamformerSet beamformers_at(const ChannelSet& h, std::span<const ComplexMatrix> u,
                             std::span<const ComplexMatrix> w, std::span<const double> weights,
                             double mu);

struct BeamformerUpdate {
  BeamformerSet v;
  double mu = 0.0;
  int bisection_steps = 0;
};

BeamformerUpdate update_beamformers(const ChannelSet& h, std::span<const ComplexMatrix> u,
                                    std::span<const ComplexMatrix> w,
                                    std::span<const double> weights, double total_power);

// Weighted MSE surrogate sum_k alpha_k (Tr(W_k E_k) - ln det W_k), natural log.
double wmmse_surrogate(const ChannelSet& h, std::span<const ComplexMatrix> v,
                       std::span<const ComplexMatrix> u, std::span<const ComplexMatrix> w,
                       double sigma2, std::span<const double> weights);

// One receiver -> weight -> beamformer sweep.
void wmmse_sweep(const ChannelSet& h, double sigma2, std::span<const double> weights,
                 double total_power, WmmseState& state);

RunTrajectory run_wmmse(const ChannelSet& h, const ScenarioConfig& config,
                        int max_iters = kWmmseDefaultMaxIters, std::uint64_t realization = 0,
                        std::uint64_t restart = 0);

RunTrajectory run_wmmse_from(const ChannelSet& h, const ScenarioConfig& config, int max_iters,
                             BeamformerSet v0);

}  // namespace metabf
