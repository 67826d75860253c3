// SPDX-License-Identifier: Apache-2.0

#include "metabf/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

namespace metabf {

double complexity_formula(const ScenarioConfig& c) {
  const double nt = c.n_tx;
  const double nr = c.n_rx;
  return c.n_users * nt * nt * nr + nr * nr * nr;
}

std::vector<ComplexityRow> complexity_rows(const ExperimentResult& result,
                                           const ScenarioConfig& config) {
  struct Acc {
    ComplexityRow row;
    double iters = 0.0;
    double matmuls = 0.0, solves = 0.0, factorizations = 0.0, bisections = 0.0, forwards = 0.0;
  };
  std::map<Algorithm, Acc> acc;
  for (const auto& r : result.detail) {
    if (!r.ok()) continue;
    Acc& a = acc[r.algorithm];
    a.row.scenario = r.scenario;
    a.row.algorithm = r.algorithm;
    ++a.row.runs;
    a.row.mean_wall_ms += r.wall_ms;
    a.iters += r.iters;
    a.matmuls += static_cast<double>(r.ops.matmuls);
    a.solves += static_cast<double>(r.ops.hpd_solves);
    a.factorizations += static_cast<double>(r.ops.factorizations);
    a.bisections += static_cast<double>(r.ops.bisections);
    a.forwards += static_cast<double>(r.ops.net_forwards);
  }

  const double formula = complexity_formula(config);
  std::vector<ComplexityRow> out;
  for (auto& [algorithm, a] : acc) {
    ComplexityRow row = a.row;
    const double runs = row.runs;
    const double iters = std::max(a.iters, 1.0);
    row.mean_wall_ms /= runs;
    row.mean_iters = a.iters / runs;
    row.matmuls_per_iter = a.matmuls / iters;
    row.hpd_solves_per_iter = a.solves / iters;
    row.factorizations_per_iter = a.factorizations / iters;
    row.bisections_per_run = a.bisections / runs;
    row.net_forwards_per_iter = a.forwards / iters;
    row.formula_per_iter = formula;
    row.formula_per_run = formula * row.mean_iters;
    if (algorithm == Algorithm::kMlgd) {
      KeyedRng rng(0, 0, 0, StreamPurpose::kNetInit);
      const MetaNetParams net = net_init(meta_net_dims(config.n_tx, config.n_streams), rng);
      row.net_params = net.parameter_count();
      row.net_nodes = net.hidden_nodes();
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ComplexityRow> report_complexity(const ExperimentPlan& plan) {
  return complexity_rows(run_experiment(plan), plan.scenario);
}

void write_complexity_csv(const std::vector<ComplexityRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kComplexityHeader << '\n';
  for (const auto& r : rows) {
    const bool net = r.algorithm == Algorithm::kMlgd;
    out << r.scenario << ',' << to_string(r.algorithm) << ',' << r.runs << ','
        << format_real(r.mean_wall_ms) << ',' << format_real(r.mean_iters) << ','
        << format_real(r.matmuls_per_iter) << ',' << format_real(r.hpd_solves_per_iter) << ','
        << format_real(r.factorizations_per_iter) << ',' << format_real(r.bisections_per_run)
        << ',' << format_real(r.net_forwards_per_iter) << ',' << format_real(r.formula_per_iter)
        << ',' << format_real(r.formula_per_run) << ','
        << (net ? std::to_string(r.net_params) : "") << ','
        << (net ? std::to_string(r.net_nodes) : "") << '\n';
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

namespace {

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void add_case(CheckReport& report, std::string label, double err) {
  report.max_rel_error = std::max(report.max_rel_error, err);
  report.cases.push_back({std::move(label), err});
}

// Largest entrywise relative error; pairs where both sides are below 1e-10
// are compared absolutely.
double coordinate_rel_error(const RealVector& a, const RealVector& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max(std::abs(a(i)), std::abs(b(i)));
    const double diff = std::abs(a(i) - b(i));
    worst = std::max(worst, scale < 1e-10 ? diff : diff / scale);
  }
  return worst;
}

// Every weight and bias drawn from U(-scale, scale), output layer included,
// so that all layers receive a nonzero gradient.
MetaNetParams random_params(const std::vector<int>& dims, KeyedRng& rng, double scale) {
  MetaNetParams p = net_init(dims, rng);
  RealVector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-scale, scale);
  p.assign(flat);
  return p;
}

}  // namespace

CheckReport wsr_gradient_suite(int n_instances, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kUsers[] = {1, 2, 4};
  constexpr int kTx[] = {4, 8};
  constexpr double kSnr[] = {0.0, 10.0, 25.0};
  CheckReport report;
  for (int i = 0; i < n_instances; ++i) {
    ScenarioConfig c;
    c.n_users = kUsers[i % 3];
    c.n_tx = kTx[(i / 3) % 2];
    c.snr_db = kSnr[(i / 6) % 3];
    c.master_seed = seed;
    const auto r = static_cast<std::uint64_t>(i);
    const ChannelSet h = sample_channels(c, r);
    const BeamformerSet v = init_beamformers(c, r, 0);
    const std::vector<double> w = c.weights();
    const WsrProblem problem{h, noise_variance(c), w};
    const RealVector g = to_real_view(wsr_gradient(problem, v));
    const RealVector fd = to_real_view(wsr_gradient_fd(problem, v, 1e-5));
    add_case(report,
             "K=" + std::to_string(c.n_users) + " Nt=" + std::to_string(c.n_tx) +
                 " snr=" + format_real(c.snr_db) + " #" + std::to_string(i),
             coordinate_rel_error(g, fd));
  }
  report.seconds = elapsed_s(start);
  return report;
}

CheckReport meta_gradient_suite(int n_instances, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  constexpr int kWindow = 2;
  constexpr double kStep = 1e-5;
  CheckReport report;
  for (int i = 0; i < n_instances; ++i) {
    ScenarioConfig c;
    c.n_tx = 2;
    c.n_rx = 1;
    c.n_streams = 1;
    c.n_users = 1;
    c.snr_db = 10.0;
    c.master_seed = seed;
    const auto r = static_cast<std::uint64_t>(i);
    const ChannelSet h = sample_channels(c, r);
    const BeamformerSet v0 = init_beamformers(c, r, 0);
    const std::vector<double> w = c.weights();
    const WsrProblem problem{h, noise_variance(c), w};
    const MlgdStepContext ctx{problem, c.total_power, UpdateOrder::kJacobi};

    KeyedRng rng(seed, r, 0, StreamPurpose::kTest);
    MetaNetParams params = random_params(meta_net_dims(c.n_tx, c.n_streams), rng, 0.3);

    WindowTape tape;
    BeamformerSet v = v0;
    for (int t = 0; t < kWindow; ++t) v = mlgd_iteration(ctx, v, params, tape);

    for (bool detach : {true, false}) {
      const RealVector analytic = meta_backward(tape, params, problem, detach).flatten();
      const WindowTape* recorded = detach ? &tape : nullptr;
      RealVector theta = params.flatten();
      RealVector fd(theta.size());
      MetaNetParams probe = params;
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        const double original = theta(j);
        theta(j) = original + kStep;
        probe.assign(theta);
        const double up = replay_window_loss(ctx, v0, probe, kWindow, recorded);
        theta(j) = original - kStep;
        probe.assign(theta);
        const double down = replay_window_loss(ctx, v0, probe, kWindow, recorded);
        theta(j) = original;
        fd(j) = (up - down) / (2.0 * kStep);
      }
      add_case(report,
               std::string(detach ? "detached" : "live") + " inputs #" + std::to_string(i),
               coordinate_rel_error(analytic, fd));
    }
  }
  report.seconds = elapsed_s(start);
  return report;
}

}  // namespace metabf
