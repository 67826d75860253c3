// SPDX-License-Identifier: Apache-2.0
//
// bench run        -- SNR sweep, writes detail.csv / summary.csv / manifest.txt
// bench gradcheck  -- finite-difference suites
// bench complexity -- operation counters next to the asymptotic formula

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "metabf/config.hpp"
#include "metabf/experiment.hpp"
#include "metabf/report.hpp"

using namespace metabf;

namespace {

struct Overrides {
  std::string config;
  std::string snr;
  std::string algorithms;
  std::optional<int> realizations;
  std::optional<int> restarts;
  std::optional<std::uint64_t> seed;
  std::optional<int> iters;
  std::optional<int> window;
  std::optional<int> workers;
  std::string out;
  std::string update_order;
  std::string report;
};

void add_plan_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value scenario file")->check(CLI::ExistingFile);
  cmd->add_option("--snr", o.snr, "comma-separated SNR list in dB");
  cmd->add_option("--algorithms", o.algorithms, "subset of wmmse,gd,adam,mlgd");
  cmd->add_option("--realizations", o.realizations);
  cmd->add_option("--restarts", o.restarts);
  cmd->add_option("--seed", o.seed);
  cmd->add_option("--iters", o.iters, "MLGD / GD / Adam iteration budget");
  cmd->add_option("--window", o.window, "MLGD meta-update window");
  cmd->add_option("--workers", o.workers);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--update-order", o.update_order, "jacobi | gauss_seidel");
  cmd->add_option("--report", o.report, "best | last");
}

ExperimentPlan resolve(const Overrides& o) {
  ExperimentPlan plan = o.config.empty() ? ExperimentPlan{} : load_plan(o.config);
  if (!o.snr.empty()) apply_config_value("snr_list", o.snr, plan);
  if (!o.algorithms.empty()) apply_config_value("algorithms", o.algorithms, plan);
  if (o.realizations) plan.n_realizations = *o.realizations;
  if (o.restarts) plan.n_restarts = *o.restarts;
  if (o.seed) plan.scenario.master_seed = *o.seed;
  if (o.iters) plan.mlgd.total_iters = *o.iters;
  if (o.window) plan.mlgd.window = *o.window;
  if (o.workers) plan.workers = *o.workers;
  if (!o.out.empty()) plan.out_dir = o.out;
  if (!o.update_order.empty()) apply_config_value("update_order", o.update_order, plan);
  if (!o.report.empty()) apply_config_value("report", o.report, plan);
  for (const auto& warning : plan.scenario.validate()) std::cerr << "warning: " << warning << '\n';
  plan.validate();
  return plan;
}

int cmd_run(const Overrides& o) {
  ExperimentPlan plan = resolve(o);
  if (plan.out_dir.empty()) plan.out_dir = "bench_out";
  const ExperimentResult result = run_experiment(plan);
  write_outputs(plan, result);
  for (const auto& line : result.log) std::cerr << line << '\n';
  std::printf("%-8s %-6s %12s %12s %8s %10s %4s\n", "snr_db", "algo", "mean_wsr", "var_wsr",
              "iters", "wall_ms", "n");
  for (const auto& s : result.summary) {
    std::printf("%-8s %-6s %12.4f %12s %8.1f %10.3f %4d\n", format_real(s.snr_db).c_str(),
                std::string(to_string(s.algorithm)).c_str(), s.mean_wsr,
                s.var_wsr ? format_real(*s.var_wsr).c_str() : "-", s.mean_iters, s.mean_wall_ms,
                s.n);
  }
  std::printf("wrote %s\n", plan.out_dir.string().c_str());
  return 0;
}

int cmd_complexity(const Overrides& o) {
  ExperimentPlan plan = resolve(o);
  const ExperimentResult result = run_experiment(plan);
  const auto rows = complexity_rows(result, plan.scenario);
  if (!plan.out_dir.empty()) {
    std::filesystem::create_directories(plan.out_dir);
    write_complexity_csv(rows, plan.out_dir / "complexity.csv");
  }
  std::printf("K N_t^2 N_r + N_r^3 = %s per iteration\n",
              format_real(complexity_formula(plan.scenario)).c_str());
  std::printf("%-6s %9s %10s %12s %12s %10s %12s\n", "algo", "iters", "wall_ms", "matmul/it",
              "hpd_solve/it", "bisect/run", "formula/run");
  for (const auto& r : rows) {
    std::printf("%-6s %9.1f %10.3f %12.2f %12.2f %10.2f %12s\n",
                std::string(to_string(r.algorithm)).c_str(), r.mean_iters, r.mean_wall_ms,
                r.matmuls_per_iter, r.hpd_solves_per_iter, r.bisections_per_run,
                format_real(r.formula_per_run).c_str());
    if (r.algorithm == Algorithm::kMlgd) {
      std::printf("       update network: %lld parameters, %d hidden nodes\n",
                  static_cast<long long>(r.net_params), r.net_nodes);
    }
  }
  return 0;
}

void print_report(const char* title, const CheckReport& report, double tol) {
  for (const auto& c : report.cases) std::printf("  %-32s rel %.3e\n", c.label.c_str(), c.rel_error);
  std::printf("%s: %zu cases, max rel error %.3e (tol %.0e), %.2f s -> %s\n", title,
              report.cases.size(), report.max_rel_error, tol, report.seconds,
              report.max_rel_error <= tol ? "ok" : "FAILED");
}

int cmd_gradcheck(bool verbose) {
  const CheckReport wsr = wsr_gradient_suite();
  const CheckReport meta = meta_gradient_suite();
  constexpr double kTol = 1e-4;
  if (verbose) {
    print_report("wsr gradient", wsr, kTol);
    print_report("meta gradient", meta, kTol);
  } else {
    std::printf("wsr gradient: max rel error %.3e over %zu cases\n", wsr.max_rel_error,
                wsr.cases.size());
    std::printf("meta gradient: max rel error %.3e over %zu cases\n", meta.max_rel_error,
                meta.cases.size());
  }
  return wsr.max_rel_error <= kTol && meta.max_rel_error <= kTol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MU-MIMO weighted sum-rate benchmark"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run an SNR sweep and write CSV files");
  add_plan_options(run, run_opts);

  Overrides cx_opts;
  auto* cx = app.add_subcommand("complexity", "operation counts per solver");
  add_plan_options(cx, cx_opts);

  bool verbose = false;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_flag("-v,--verbose", verbose, "print every case");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_opts);
    if (*cx) return cmd_complexity(cx_opts);
    if (*gc) return cmd_gradcheck(verbose);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
