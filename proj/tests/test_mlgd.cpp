// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "metabf/mlgd.hpp"
#include "metabf/wmmse.hpp"

using namespace metabf;

namespace {

ScenarioConfig scenario(int k, double snr, int nt = 8, int nr = 2, int d = 2) {
  ScenarioConfig c;
  c.n_users = k;
  c.n_tx = nt;
  c.n_rx = nr;
  c.n_streams = d;
  c.snr_db = snr;
  c.master_seed = 2024;
  return c;
}

MetaNetParams random_params(const std::vector<int>& dims, std::uint64_t seed) {
  KeyedRng rng(seed, 0, 0, StreamPurpose::kTest);
  MetaNetParams p = net_init(dims, rng);
  RealVector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-0.3, 0.3);
  p.assign(flat);
  return p;
}

double rel_err(const RealVector& a, const RealVector& b) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), 1e-12});
}

}  // namespace

TEST(MlgdConfig, Validation) {
  MlgdConfig m;
  EXPECT_NO_THROW(m.validate());
  m.window = 0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.window = 10;
  m.total_iters = 5;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  EXPECT_EQ(parse_update_order("gauss_seidel"), UpdateOrder::kGaussSeidel);
  EXPECT_EQ(parse_report_mode("last"), ReportMode::kLastIterate);
  EXPECT_THROW(parse_update_order("random"), std::invalid_argument);
}

TEST(MlgdIteration, FreshNetworkIsNoOpAfterProjection) {
  const ScenarioConfig c = scenario(3, 10.0);
  const ChannelSet h = sample_channels(c, 0);
  const std::vector<double> w = c.weights();
  const WsrProblem problem{h, noise_variance(c), w};
  const MlgdStepContext ctx{problem, c.total_power};
  const BeamformerSet v0 = init_beamformers(c, 0, 0);
  const MetaNetParams fresh = net_init(meta_net_dims(c.n_tx, c.n_streams), 3);
  WindowTape tape;
  const BeamformerSet v1 = mlgd_iteration(ctx, v0, fresh, tape);
  const BeamformerSet expected = project_power(v0, c.total_power);
  for (std::size_t k = 0; k < v1.size(); ++k) EXPECT_LE((v1[k] - expected[k]).norm(), 1e-14);
  ASSERT_EQ(tape.size(), 1u);
  EXPECT_NEAR(tape.meta_loss, wsr_value(problem, v0), 1e-12);
}

TEST(MlgdIteration, TapeRecordsEveryIteration) {
  const ScenarioConfig c = scenario(2, 10.0);
  const ChannelSet h = sample_channels(c, 1);
  const std::vector<double> w = c.weights();
  const WsrProblem problem{h, noise_variance(c), w};
  for (UpdateOrder order : {UpdateOrder::kJacobi, UpdateOrder::kGaussSeidel}) {
    const MlgdStepContext ctx{problem, c.total_power, order};
    const MetaNetParams p = random_params(meta_net_dims(c.n_tx, c.n_streams), 1);
    WindowTape tape;
    BeamformerSet v = init_beamformers(c, 1, 0);
    double loss = 0.0;
    for (int i = 0; i < 4; ++i) {
      loss += wsr_value(problem, v);
      v = mlgd_iteration(ctx, v, p, tape);
      EXPECT_LE(frob2(v), c.total_power * (1.0 + 1e-9));
    }
    ASSERT_EQ(tape.size(), 4u);
    EXPECT_NEAR(tape.meta_loss, loss, 1e-9 * loss);
    const std::size_t steps = order == UpdateOrder::kJacobi ? 1u : 2u;
    for (const auto& rec : tape.iterations) EXPECT_EQ(rec.steps.size(), steps);
  }
}

TEST(MetaBackward, MatchesFiniteDifferences) {
  constexpr double kEps = 1e-5;
  ScenarioConfig c = scenario(2, 10.0, 2, 1, 1);
  for (UpdateOrder order : {UpdateOrder::kJacobi, UpdateOrder::kGaussSeidel}) {
    for (std::uint64_t r = 0; r < 2; ++r) {
      const ChannelSet h = sample_channels(c, r);
      const std::vector<double> w = c.weights();
      const WsrProblem problem{h, noise_variance(c), w};
      const MlgdStepContext ctx{problem, c.total_power, order};
      const BeamformerSet v0 = init_beamformers(c, r, 0);
      const MetaNetParams p = random_params(meta_net_dims(c.n_tx, c.n_streams), 40 + r);
      WindowTape tape;
      BeamformerSet v = v0;
      for (int t = 0; t < 3; ++t) v = mlgd_iteration(ctx, v, p, tape);

      for (bool detach : {true, false}) {
        const RealVector analytic = meta_backward(tape, p, problem, detach).flatten();
        RealVector theta = p.flatten();
        RealVector fd(theta.size());
        MetaNetParams probe = p;
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
          const double keep = theta(j);
          theta(j) = keep + kEps;
          probe.assign(theta);
          const double up = replay_window_loss(ctx, v0, probe, 3, detach ? &tape : nullptr);
          theta(j) = keep - kEps;
          probe.assign(theta);
          const double down = replay_window_loss(ctx, v0, probe, 3, detach ? &tape : nullptr);
          theta(j) = keep;
          fd(j) = (up - down) / (2 * kEps);
        }
        EXPECT_LE(rel_err(analytic, fd), 1e-4)
            << to_string(order) << " detach=" << detach << " r=" << r;
      }
    }
  }
}

TEST(MetaBackward, ReplayReproducesRecordedLoss) {
  const ScenarioConfig c = scenario(2, 10.0, 4, 2, 1);
  const ChannelSet h = sample_channels(c, 2);
  const std::vector<double> w = c.weights();
  const WsrProblem problem{h, noise_variance(c), w};
  const MlgdStepContext ctx{problem, c.total_power};
  const BeamformerSet v0 = init_beamformers(c, 2, 0);
  const MetaNetParams p = random_params(meta_net_dims(c.n_tx, c.n_streams), 5);
  WindowTape tape;
  BeamformerSet v = v0;
  for (int t = 0; t < 5; ++t) v = mlgd_iteration(ctx, v, p, tape);
  EXPECT_NEAR(replay_window_loss(ctx, v0, p, 5), tape.meta_loss, 1e-12 * tape.meta_loss);
  EXPECT_NEAR(replay_window_loss(ctx, v0, p, 5, &tape), tape.meta_loss, 1e-12 * tape.meta_loss);
}

TEST(MetaBackward, SingleIterateWindowHasZeroGradient) {
  // F(V_0) does not depend on theta.
  const ScenarioConfig c = scenario(2, 10.0, 4, 2, 1);
  const ChannelSet h = sample_channels(c, 3);
  const std::vector<double> w = c.weights();
  const WsrProblem problem{h, noise_variance(c), w};
  const MlgdStepContext ctx{problem, c.total_power};
  const MetaNetParams p = random_params(meta_net_dims(c.n_tx, c.n_streams), 6);
  WindowTape tape;
  mlgd_iteration(ctx, init_beamformers(c, 3, 0), p, tape);
  EXPECT_EQ(meta_backward(tape, p, problem, true).flatten().norm(), 0.0);
  EXPECT_EQ(meta_backward(tape, p, problem, false).flatten().norm(), 0.0);
}

TEST(RunMlgd, ScheduleAndFeasibility) {
  const ScenarioConfig c = scenario(2, 10.0);
  const ChannelSet h = sample_channels(c, 4);
  for (auto [iters, window] : {std::pair{200, 10}, std::pair{25, 10}, std::pair{10, 10},
                               std::pair{7, 1}}) {
    MlgdConfig m;
    m.total_iters = iters;
    m.window = window;
    const RunTrajectory t = run_mlgd(h, c, m, 4, 0);
    EXPECT_EQ(t.meta_updates, iters / window);
    EXPECT_EQ(t.iterations, iters);
    EXPECT_EQ(static_cast<int>(t.wsr.size()), iters);
    EXPECT_LE(power_violation(t, c.total_power), 1e-9);
    EXPECT_EQ(t.best_wsr, *std::max_element(t.wsr.begin(), t.wsr.end()));
    EXPECT_EQ(t.final_wsr, t.wsr.back());
    EXPECT_EQ(t.ops.bisections, 0u);
  }
}

TEST(RunMlgd, ThetaFrozenBetweenUpdates) {
  const ScenarioConfig c = scenario(2, 10.0);
  const ChannelSet h = sample_channels(c, 5);
  MlgdConfig m;
  m.total_iters = 19;
  m.window = 10;
  const MlgdRun a = run_mlgd_detailed(h, c, m, 5, 0);
  m.total_iters = 10;
  const MlgdRun b = run_mlgd_detailed(h, c, m, 5, 0);
  // 19 and 10 iterations both take exactly one theta update.
  EXPECT_EQ(a.final_params.flatten(), b.final_params.flatten());
  EXPECT_NE(a.final_params.flatten(),
            net_init(meta_net_dims(c.n_tx, c.n_streams), 0).flatten());
}

TEST(RunMlgd, DeterministicAndRestartsIndependent) {
  const ScenarioConfig c = scenario(3, 10.0);
  const ChannelSet h = sample_channels(c, 6);
  MlgdConfig m;
  m.total_iters = 40;
  const RunTrajectory a = run_mlgd(h, c, m, 6, 0);
  const RunTrajectory b = run_mlgd(h, c, m, 6, 0);
  const RunTrajectory other = run_mlgd(h, c, m, 6, 1);
  EXPECT_EQ(a.wsr, b.wsr);
  EXPECT_NE(a.wsr, other.wsr);
  EXPECT_NE(a.initial_wsr, other.initial_wsr);
}

TEST(RunMlgd, DetachDoesNotChangeTheFirstWindow) {
  const ScenarioConfig c = scenario(2, 10.0);
  const ChannelSet h = sample_channels(c, 7);
  MlgdConfig m;
  m.total_iters = 30;
  const RunTrajectory det = run_mlgd(h, c, m, 7, 0);
  m.detach_inputs = false;
  const RunTrajectory live = run_mlgd(h, c, m, 7, 0);
  // The forward pass is the same; only theta updates differ.
  for (int i = 0; i < 10; ++i) EXPECT_EQ(det.wsr[i], live.wsr[i]);
}

TEST(RunMlgd, GaussSeidelRunsFeasibly) {
  const ScenarioConfig c = scenario(3, 10.0);
  const ChannelSet h = sample_channels(c, 8);
  MlgdConfig m;
  m.total_iters = 50;
  m.update_order = UpdateOrder::kGaussSeidel;
  const RunTrajectory t = run_mlgd(h, c, m, 8, 0);
  EXPECT_EQ(t.iterations, 50);
  EXPECT_LE(power_violation(t, c.total_power), 1e-9);
  EXPECT_TRUE(std::isfinite(t.best_wsr));
}

TEST(RunMlgd, MisoBestOfRestartsNearOptimum) {
  const ScenarioConfig c = scenario(1, 10.0, 4, 1, 1);
  for (std::uint64_t r = 0; r < 5; ++r) {
    const ChannelSet h = sample_channels(c, r);
    const double optimum = std::log2(1.0 + h[0].squaredNorm() / noise_variance(c));
    double best = -1.0;
    for (std::uint64_t s = 0; s < 10; ++s) best = std::max(best, run_mlgd(h, c, MlgdConfig{}, r, s).best_wsr);
    EXPECT_LE(best, optimum + 1e-9);
    EXPECT_GE(best, optimum - 2e-2) << "realization " << r;
  }
}

TEST(RunMlgd, MovesBeyondFirstIterateAtHighSnr) {
  const ScenarioConfig c = scenario(4, 25.0);
  int escaped = 0;
  constexpr int kInstances = 50;
  for (int r = 0; r < kInstances; ++r) {
    const auto rr = static_cast<std::uint64_t>(r);
    const RunTrajectory t = run_mlgd(sample_channels(c, rr), c, MlgdConfig{}, rr, 0);
    if (t.best_wsr >= t.wsr.front() + 0.5) ++escaped;
  }
  EXPECT_GE(escaped, 45) << escaped << "/" << kInstances;
}
