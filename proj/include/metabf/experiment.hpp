// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo harness: SNR x realization x algorithm x restart sweeps,
// best-restart selection, aggregation and CSV output.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metabf/mlgd.hpp"
#include "metabf/optim.hpp"
#include "metabf/scenario.hpp"
#include "metabf/wmmse.hpp"

namespace metabf {

enum class Algorithm { kWmmse, kGd, kAdam, kMlgd };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view text);

struct ExperimentPlan {
  ScenarioConfig scenario;
  std::vector<double> snr_list{10.0};
  int n_realizations = 100;
  int n_restarts = 10;
  std::vector<Algorithm> algorithms{Algorithm::kWmmse, Algorithm::kGd, Algorithm::kAdam,
                                    Algorithm::kMlgd};
  MlgdConfig mlgd;  // `report` applies to every algorithm
  double gd_lr = kDefaultGdLr;
  double adam_lr = kDefaultAdamLr;
  int first_order_iters = 0;  // 0 means mlgd.total_iters
  int wmmse_max_iters = kWmmseDefaultMaxIters;
  std::filesystem::path out_dir;  // empty: nothing is written
  int workers = 1;

  void validate() const;
  int gradient_iters() const { return first_order_iters > 0 ? first_order_iters : mlgd.total_iters; }
};

// One (snr, realization, algorithm, restart) run.
struct DetailRow {
  std::string scenario;
  int k_users = 0;
  int n_tx = 0;
  int n_rx = 0;
  int d = 0;
  double snr_db = 0.0;
  Algorithm algorithm = Algorithm::kWmmse;
  std::uint64_t realization = 0;
  std::uint64_t restart = 0;
  double wsr_bits = 0.0;  // best or last iterate, per the plan's report mode
  int best_iter = 0;
  int iters = 0;
  double wall_ms = 0.0;
  std::string status = "ok";

  // Not written to detail.csv.
  double best_wsr = 0.0;
  double final_wsr = 0.0;
  double power_violation = 0.0;
  OpCounters ops;

  bool ok() const { return status == "ok"; }
};

struct SummaryRow {
  std::string scenario;
  double snr_db = 0.0;
  Algorithm algorithm = Algorithm::kWmmse;
  double mean_wsr = 0.0;
  std::optional<double> var_wsr;  // unbiased; empty for n < 2
  double min_wsr = 0.0;
  double max_wsr = 0.0;
  double mean_iters = 0.0;
  double mean_wall_ms = 0.0;
  int n = 0;
};

struct ExperimentResult {
  std::vector<DetailRow> detail;    // ordered by (snr, realization, algorithm, restart)
  std::vector<SummaryRow> summary;  // ordered by (snr, algorithm)
  std::vector<std::string> log;     // failed runs and excluded realizations
};

// Runs one solver on one channel draw; numerical failures become a status.
DetailRow run_cell(const ExperimentPlan& plan, const ChannelSet& h, const ScenarioConfig& config,
                   Algorithm algorithm, std::uint64_t realization, std::uint64_t restart);

ExperimentResult run_experiment(const ExperimentPlan& plan);

// Best restart per (snr, realization, algorithm), then mean / variance / range
// over realizations. Failed runs are skipped; a realization with no successful
// restart is dropped from n and logged.
std::vector<SummaryRow> aggregate(const std::vector<DetailRow>& detail,
                                  std::vector<std::string>* log = nullptr);

// printf %.9g: 9 significant digits, byte-stable for identical doubles.
std::string format_real(double value);

inline constexpr std::string_view kDetailHeader =
    "scenario,k_users,n_tx,n_rx,d,snr_db,algorithm,realization,restart,wsr_bits,best_iter,iters,"
    "wall_ms,status";
inline constexpr std::string_view kSummaryHeader =
    "scenario,snr_db,algorithm,mean_wsr,var_wsr,min_wsr,max_wsr,mean_iters,mean_wall_ms,n";

void write_detail_csv(const std::vector<DetailRow>& rows, const std::filesystem::path& path);
void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
// Resolved configuration and seed, one `key = value` per line.
void write_manifest(const ExperimentPlan& plan, const std::filesystem::path& path);

// Writes detail.csv, summary.csv and manifest.txt into plan.out_dir.
void write_outputs(const ExperimentPlan& plan, const ExperimentResult& result);

}  // namespace metabf
