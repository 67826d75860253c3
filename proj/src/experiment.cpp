// SPDX-License-Identifier: Apache-2.0

#include "metabf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <thread>

#include "metabf/config.hpp"

namespace metabf {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kWmmse: return "wmmse";
    case Algorithm::kGd: return "gd";
    case Algorithm::kAdam: return "adam";
    case Algorithm::kMlgd: return "mlgd";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  if (text == "wmmse") return Algorithm::kWmmse;
  if (text == "gd") return Algorithm::kGd;
  if (text == "adam") return Algorithm::kAdam;
  if (text == "mlgd") return Algorithm::kMlgd;
  throw std::invalid_argument("unknown algorithm '" + std::string(text) + "'");
}

void ExperimentPlan::validate() const {
  scenario.validate();
  mlgd.validate();
  if (n_realizations < 1) throw std::invalid_argument("plan: realizations must be >= 1");
  if (n_restarts < 1) throw std::invalid_argument("plan: restarts must be >= 1");
  if (snr_list.empty()) throw std::invalid_argument("plan: snr list is empty");
  if (algorithms.empty()) throw std::invalid_argument("plan: no algorithms selected");
  if (workers < 1) throw std::invalid_argument("plan: workers must be >= 1");
  if (wmmse_max_iters < 1) throw std::invalid_argument("plan: wmmse_max_iters must be >= 1");
  if (!(gd_lr > 0.0) || !(adam_lr > 0.0)) throw std::invalid_argument("plan: step sizes must be > 0");
}

DetailRow run_cell(const ExperimentPlan& plan, const ChannelSet& h, const ScenarioConfig& config,
                   Algorithm algorithm, std::uint64_t realization, std::uint64_t restart) {
  DetailRow row;
  row.scenario = config.name;
  row.k_users = config.n_users;
  row.n_tx = config.n_tx;
  row.n_rx = config.n_rx;
  row.d = config.n_streams;
  row.snr_db = config.snr_db;
  row.algorithm = algorithm;
  row.realization = realization;
  row.restart = restart;
  try {
    RunTrajectory traj;
    switch (algorithm) {
      case Algorithm::kWmmse:
        traj = run_wmmse(h, config, plan.wmmse_max_iters, realization, restart);
        break;
      case Algorithm::kGd:
        traj = run_first_order(h, config, FirstOrderMethod::kGd, plan.gd_lr,
                               plan.gradient_iters(), realization, restart);
        break;
      case Algorithm::kAdam:
        traj = run_first_order(h, config, FirstOrderMethod::kAdam, plan.adam_lr,
                               plan.gradient_iters(), realization, restart);
        break;
      case Algorithm::kMlgd:
        traj = run_mlgd(h, config, plan.mlgd, realization, restart);
        break;
    }
    row.best_wsr = traj.best_wsr;
    row.final_wsr = traj.final_wsr;
    row.wsr_bits = plan.mlgd.report == ReportMode::kBestIterate ? traj.best_wsr : traj.final_wsr;
    row.best_iter = traj.best_iter;
    row.iters = traj.iterations;
    row.wall_ms = traj.wall_ms;
    row.power_violation = power_violation(traj, config.total_power);
    row.ops = traj.ops;
    if (!std::isfinite(row.wsr_bits)) row.status = "nonfinite";
  } catch (const SingularityError&) {
    row.status = "singular";
  } catch (const DegenerateInputError&) {
    row.status = "degenerate";
  } catch (const NumericalError&) {
    row.status = "numerical";
  } catch (const std::exception&) {
    row.status = "error";
  }
  return row;
}

namespace {

struct CellKey {
  std::size_t snr = 0;
  std::uint64_t realization = 0;
};

std::vector<DetailRow> run_key(const ExperimentPlan& plan, const CellKey& key) {
  ScenarioConfig config = plan.scenario;
  config.snr_db = plan.snr_list[key.snr];
  // Channels are keyed by realization only, so every SNR sees the same draw.
  const ChannelSet h = sample_channels(config, key.realization);
  std::vector<DetailRow> rows;
  for (Algorithm a : plan.algorithms) {
    for (int r = 0; r < plan.n_restarts; ++r) {
      rows.push_back(run_cell(plan, h, config, a, key.realization, static_cast<std::uint64_t>(r)));
    }
  }
  return rows;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<CellKey> keys;
  for (std::size_t s = 0; s < plan.snr_list.size(); ++s) {
    for (int r = 0; r < plan.n_realizations; ++r) keys.push_back({s, static_cast<std::uint64_t>(r)});
  }

  std::vector<std::vector<DetailRow>> slots(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) slots[i] = run_key(plan, keys[i]);
  };
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(plan.workers), keys.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Single-threaded reduce in key order; the algorithm order within a key
  // follows the plan's list, so sort it into (snr, realization, algorithm,
  // restart) order.
  ExperimentResult result;
  for (auto& slot : slots) {
    std::stable_sort(slot.begin(), slot.end(), [](const DetailRow& a, const DetailRow& b) {
      return a.algorithm < b.algorithm;
    });
    for (auto& row : slot) {
      if (!row.ok()) {
        result.log.push_back("failed run: snr " + format_real(row.snr_db) + " realization " +
                             std::to_string(row.realization) + " " +
                             std::string(to_string(row.algorithm)) + " restart " +
                             std::to_string(row.restart) + ": " + row.status);
      }
      result.detail.push_back(std::move(row));
    }
  }
  result.summary = aggregate(result.detail, &result.log);
  return result;
}

std::vector<SummaryRow> aggregate(const std::vector<DetailRow>& detail,
                                  std::vector<std::string>* log) {
  struct Best {
    double wsr = 0.0;
    bool any = false;
  };
  struct Group {
    std::string scenario;
    std::map<std::uint64_t, Best> per_realization;
    double iters_sum = 0.0;
    double wall_sum = 0.0;
    int runs = 0;
  };
  // std::map keys keep the output order fixed: (snr, algorithm).
  std::map<std::pair<double, Algorithm>, Group> groups;
  for (const auto& row : detail) {
    Group& g = groups[{row.snr_db, row.algorithm}];
    g.scenario = row.scenario;
    Best& b = g.per_realization[row.realization];
    if (!row.ok()) continue;
    if (!b.any || row.wsr_bits > b.wsr) b.wsr = row.wsr_bits;
    b.any = true;
    g.iters_sum += row.iters;
    g.wall_sum += row.wall_ms;
    ++g.runs;
  }

  std::vector<SummaryRow> out;
  for (const auto& [key, g] : groups) {
    SummaryRow s;
    s.scenario = g.scenario;
    s.snr_db = key.first;
    s.algorithm = key.second;
    std::vector<double> values;
    for (const auto& [realization, b] : g.per_realization) {
      if (b.any) {
        values.push_back(b.wsr);
      } else if (log != nullptr) {
        log->push_back("excluded realization " + std::to_string(realization) + " for " +
                       std::string(to_string(key.second)) + " at snr " + format_real(key.first) +
                       ": every restart failed");
      }
    }
    s.n = static_cast<int>(values.size());
    if (s.n > 0) {
      double sum = 0.0;
      for (double v : values) sum += v;
      s.mean_wsr = sum / s.n;
      s.min_wsr = *std::min_element(values.begin(), values.end());
      s.max_wsr = *std::max_element(values.begin(), values.end());
      if (s.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean_wsr) * (v - s.mean_wsr);
        s.var_wsr = ss / (s.n - 1);
      }
    }
    if (g.runs > 0) {
      s.mean_iters = g.iters_sum / g.runs;
      s.mean_wall_ms = g.wall_sum / g.runs;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void write_detail_csv(const std::vector<DetailRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kDetailHeader << '\n';
  for (const auto& r : rows) {
    out << r.scenario << ',' << r.k_users << ',' << r.n_tx << ',' << r.n_rx << ',' << r.d << ','
        << format_real(r.snr_db) << ',' << to_string(r.algorithm) << ',' << r.realization << ','
        << r.restart << ',' << (r.ok() ? format_real(r.wsr_bits) : "") << ',' << r.best_iter
        << ',' << r.iters << ',' << format_real(r.wall_ms) << ',' << r.status << '\n';
  }
  finish(out, path);
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    const bool any = s.n > 0;
    out << s.scenario << ',' << format_real(s.snr_db) << ',' << to_string(s.algorithm) << ','
        << (any ? format_real(s.mean_wsr) : "") << ','
        << (s.var_wsr ? format_real(*s.var_wsr) : "") << ','
        << (any ? format_real(s.min_wsr) : "") << ',' << (any ? format_real(s.max_wsr) : "")
        << ',' << format_real(s.mean_iters) << ',' << format_real(s.mean_wall_ms) << ',' << s.n
        << '\n';
  }
  finish(out, path);
}

void write_manifest(const ExperimentPlan& plan, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "# resolved configuration\n" << render_config(plan);
  finish(out, path);
}

void write_outputs(const ExperimentPlan& plan, const ExperimentResult& result) {
  if (plan.out_dir.empty()) return;
  std::filesystem::create_directories(plan.out_dir);
  write_detail_csv(result.detail, plan.out_dir / "detail.csv");
  write_summary_csv(result.summary, plan.out_dir / "summary.csv");
  write_manifest(plan, plan.out_dir / "manifest.txt");
}

}  // namespace metabf
