// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metabf/linalg.hpp"
#include "metabf/scenario.hpp"

namespace metabf {

// Record of one solver run. Entry t of `wsr` / `power` is the iterate after
// t + 1 updates; `initial_wsr` is the projected starting point.
struct RunTrajectory {
  std::string algorithm;
  std::uint64_t realization = 0;
  std::uint64_t restart = 0;

  double initial_wsr = 0.0;
  std::vector<double> wsr;
  std::vector<double> power;
  // Power multiplier per iterate; WMMSE only, empty for the other solvers.
  std::vector<double> multiplier;

  int iterations = 0;
  double wall_ms = 0.0;
  double final_wsr = 0.0;
  double best_wsr = 0.0;
  int best_iter = 0;  // 1-based index into `wsr`

  BeamformerSet final_v;
  BeamformerSet best_v;

  OpCounters ops;
  int meta_updates = 0;

  // Appends one iterate and keeps final/best bookkeeping current.
  void record(double value, const BeamformerSet& v, bool keep_best_snapshot = true);
};

// Largest relative power-budget violation over the recorded iterates. Iterates
// with a zero multiplier only need frob2(V) <= P; all others must meet P.
double power_violation(const RunTrajectory& traj, double total_power);

}  // namespace metabf
