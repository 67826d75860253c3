// SPDX-License-Identifier: Apache-2.0
//
// Operation-count report and the finite-difference check suites behind
// `bench complexity` and `bench gradcheck`.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metabf/experiment.hpp"

namespace metabf {

struct ComplexityRow {
  std::string scenario;
  Algorithm algorithm = Algorithm::kWmmse;
  int runs = 0;
  double mean_wall_ms = 0.0;
  double mean_iters = 0.0;
  double matmuls_per_iter = 0.0;
  double hpd_solves_per_iter = 0.0;
  double factorizations_per_iter = 0.0;
  double bisections_per_run = 0.0;  // bisection searches, not bisection steps
  double net_forwards_per_iter = 0.0;
  // K N_t^2 N_r + N_r^3, and the same times the mean iteration count.
  double formula_per_iter = 0.0;
  double formula_per_run = 0.0;
  // Update-rule network size, MLGD only: parameters and hidden nodes.
  std::int64_t net_params = 0;
  int net_nodes = 0;
};

inline constexpr std::string_view kComplexityHeader =
    "scenario,algorithm,runs,mean_wall_ms,mean_iters,matmuls_per_iter,hpd_solves_per_iter,"
    "factorizations_per_iter,bisections_per_run,net_forwards_per_iter,formula_per_iter,"
    "formula_per_run,net_params,net_nodes";

double complexity_formula(const ScenarioConfig& config);

// Per-algorithm averages over the successful runs of `result`.
std::vector<ComplexityRow> complexity_rows(const ExperimentResult& result,
                                           const ScenarioConfig& config);

// Runs the plan and summarizes its operation counters.
std::vector<ComplexityRow> report_complexity(const ExperimentPlan& plan);

void write_complexity_csv(const std::vector<ComplexityRow>& rows,
                          const std::filesystem::path& path);

struct CheckCase {
  std::string label;
  double rel_error = 0.0;
};

struct CheckReport {
  std::vector<CheckCase> cases;
  double max_rel_error = 0.0;
  double seconds = 0.0;
};

// Analytic WSR gradient against central differences on seeded instances
// cycling through K in {1,2,4}, N_t in {4,8} and SNR in {0,10,25} dB.
CheckReport wsr_gradient_suite(int n_instances = 50, std::uint64_t seed = 7);

// meta_backward against central differences of the replayed window loss on
// tiny instances (N_t = 2, d = 1, K = 1, T = 2), with detached and with live
// network inputs.
CheckReport meta_gradient_suite(int n_instances = 4, std::uint64_t seed = 11);

}  // namespace metabf
