// SPDX-License-Identifier: Apache-2.0

#include "metabf/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace metabf {

void RunTrajectory::record(double value, const BeamformerSet& v, bool keep_best_snapshot) {
  wsr.push_back(value);
  power.push_back(frob2(v));
  iterations = static_cast<int>(wsr.size());
  final_wsr = value;
  if (wsr.size() == 1 || value > best_wsr) {
    best_wsr = value;
    best_iter = iterations;
    if (keep_best_snapshot) best_v = v;
  }
}

double power_violation(const RunTrajectory& traj, double total_power) {
  double worst = 0.0;
  for (std::size_t t = 0; t < traj.power.size(); ++t) {
    const double gap = traj.power[t] - total_power;
    const bool inequality = t < traj.multiplier.size() && traj.multiplier[t] == 0.0;
    worst = std::max(worst, (inequality ? std::max(gap, 0.0) : std::abs(gap)) / total_power);
  }
  return worst;
}

}  // namespace metabf
