// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "metabf/objective.hpp"
#include "metabf/optim.hpp"

using namespace metabf;

namespace {

ComplexMatrix scalar(cdouble x) { return ComplexMatrix::Constant(1, 1, x); }

struct Instance {
  ScenarioConfig config;
  ChannelSet h;
  BeamformerSet v;
  std::vector<double> weights;
  WsrProblem problem() const { return {h, noise_variance(config), weights}; }
};

Instance make(int k, int nt, int nr, int d, double snr, std::uint64_t r) {
  Instance in;
  in.config.n_users = k;
  in.config.n_tx = nt;
  in.config.n_rx = nr;
  in.config.n_streams = d;
  in.config.snr_db = snr;
  in.config.master_seed = 31;
  in.h = sample_channels(in.config, r);
  in.v = init_beamformers(in.config, r, 0);
  in.weights = in.config.weights();
  return in;
}

// Rate of user k written the textbook way, with explicit determinants:
// log2 det(I + M_k (sum_{r != k} M_r + sigma2 I)^{-1}).
double rate_explicit(const ChannelSet& h, const BeamformerSet& v, double sigma2, std::size_t k) {
  const Eigen::Index nr = h[k].rows();
  ComplexMatrix interference = sigma2 * ComplexMatrix::Identity(nr, nr);
  for (std::size_t r = 0; r < v.size(); ++r) {
    if (r == k) continue;
    const ComplexMatrix hv = h[k] * v[r];
    interference += hv * hv.adjoint();
  }
  const ComplexMatrix hv = h[k] * v[k];
  const ComplexMatrix m = ComplexMatrix::Identity(nr, nr) +
                          hv * hv.adjoint() * interference.inverse();
  return std::log2(std::abs(m.determinant()));
}

}  // namespace

TEST(EvaluateWsr, ScalarExamples) {
  const ChannelSet h{scalar(1.0)};
  const std::vector<double> w{1.0};
  const WsrProblem p{h, 1.0, w};
  EXPECT_NEAR(evaluate_wsr(p, BeamformerSet{scalar(1.0)}).wsr, 1.0, 1e-15);
  const RateBreakdown zero = evaluate_wsr(p, BeamformerSet{scalar(0.0)});
  EXPECT_EQ(zero.wsr, 0.0);
  EXPECT_EQ(zero.rates[0], 0.0);

  const ChannelSet h2{scalar(1.0), scalar(1.0)};
  const std::vector<double> w2{1.0, 1.0};
  const RateBreakdown two =
      evaluate_wsr({h2, 1.0, w2}, BeamformerSet{scalar(std::sqrt(0.5)), scalar(std::sqrt(0.5))});
  const double expected = std::log2(1.0 + 0.5 / 1.5);
  EXPECT_NEAR(two.rates[0], expected, 1e-12);
  EXPECT_NEAR(two.rates[1], expected, 1e-12);
  EXPECT_NEAR(two.wsr, 0.830074998557688, 1e-12);
}

TEST(EvaluateWsr, MatchesExplicitRateFormula) {
  for (std::uint64_t r = 0; r < 12; ++r) {
    const Instance in = make(1 + static_cast<int>(r % 4), 6, 2, 2, 10.0 * (r % 3), r);
    const RateBreakdown b = evaluate_wsr(in.problem(), in.v);
    double sum = 0.0;
    for (std::size_t k = 0; k < in.h.size(); ++k) {
      const double oracle = rate_explicit(in.h, in.v, noise_variance(in.config), k);
      EXPECT_NEAR(b.rates[k], oracle, 1e-10 * std::max(1.0, oracle));
      EXPECT_GE(b.rates[k], 0.0);
      sum += in.weights[k] * b.rates[k];
    }
    EXPECT_NEAR(b.wsr, sum, 1e-12 * sum);
    EXPECT_NEAR(wsr_value(in.problem(), in.v), b.wsr, 1e-12 * b.wsr);
  }
}

TEST(WsrGradient, ScalarExampleAndZero) {
  const ChannelSet h{scalar(1.0)};
  const std::vector<double> w{1.0};
  const WsrProblem p{h, 1.0, w};
  const double expected = 0.5 / std::log(2.0);  // 0.721348
  EXPECT_NEAR(wsr_gradient(p, BeamformerSet{scalar(1.0)})[0](0, 0).real(), expected, 1e-14);
  EXPECT_NEAR(wsr_gradient_fd(p, BeamformerSet{scalar(1.0)}, 1e-5)[0](0, 0).real(), expected,
              1e-6);

  const Instance in = make(3, 4, 2, 2, 10.0, 1);
  BeamformerSet zero = in.v;
  for (auto& m : zero) m.setZero();
  for (const auto& g : wsr_gradient(in.problem(), zero)) EXPECT_EQ(g.norm(), 0.0);
  for (const auto& g : wsr_gradient_fd(in.problem(), zero, 1e-5)) EXPECT_LE(g.norm(), 1e-9);
}

TEST(WsrGradient, MatchesFiniteDifferences) {
  const Instance in = make(2, 4, 2, 2, 10.0, 7);
  const RealVector g = to_real_view(wsr_gradient(in.problem(), in.v));
  const RealVector fd = to_real_view(wsr_gradient_fd(in.problem(), in.v, 1e-5));
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(g(i), fd(i), 1e-5 * std::max(std::abs(g(i)), 1e-3)) << "coordinate " << i;
  }
}

TEST(WsrGradient, FdSignSymmetry) {
  // F(-V) = F(V), so the oracle's output must flip sign with V.
  const Instance in = make(1, 4, 2, 2, 10.0, 3);
  BeamformerSet neg = in.v;
  for (auto& m : neg) m = -m;
  const RealVector a = to_real_view(wsr_gradient_fd(in.problem(), in.v, 1e-5));
  const RealVector b = to_real_view(wsr_gradient_fd(in.problem(), neg, 1e-5));
  EXPECT_LE((a + b).norm(), 1e-8 * a.norm());
}

TEST(WsrGradient, AscentDirection) {
  for (std::uint64_t r = 0; r < 10; ++r) {
    const Instance in = make(1 + static_cast<int>(r % 3), 8, 2, 2, 5.0 * (r % 4), r);
    const WirtingerGradient g = wsr_gradient(in.problem(), in.v);
    if (std::sqrt(frob2(g)) <= 1e-6) continue;
    BeamformerSet moved = in.v;
    const double eta = 1e-4;
    for (std::size_t k = 0; k < moved.size(); ++k) moved[k] += eta * g[k];
    EXPECT_GT(wsr_value(in.problem(), moved), wsr_value(in.problem(), in.v));
  }
}

TEST(WsrGradient, WeightsScaleLinearly) {
  Instance in = make(3, 6, 2, 2, 10.0, 4);
  in.weights = {0.5, 1.5, 2.0};
  const WsrWithGradient base = wsr_and_gradient(in.problem(), in.v);
  const double c = 3.7;
  std::vector<double> scaled = in.weights;
  for (double& w : scaled) w *= c;
  const WsrWithGradient s = wsr_and_gradient({in.h, noise_variance(in.config), scaled}, in.v);
  EXPECT_NEAR(s.wsr, c * base.wsr, 1e-12 * c * base.wsr);
  for (std::size_t k = 0; k < s.gradient.size(); ++k) {
    EXPECT_LE((s.gradient[k] - c * base.gradient[k]).norm(), 1e-12 * c * base.gradient[k].norm());
  }
}

TEST(WsrGradient, ValueAndGradientAgreeWithSeparateCalls) {
  const Instance in = make(4, 8, 2, 2, 25.0, 2);
  const WsrWithGradient both = wsr_and_gradient(in.problem(), in.v);
  EXPECT_DOUBLE_EQ(both.wsr, wsr_value(in.problem(), in.v));
  const WirtingerGradient g = wsr_gradient(in.problem(), in.v);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_TRUE(both.gradient[k].isApprox(g[k], 1e-14));
}

TEST(WsrGradient, DirectionalDerivativeMatchesFd) {
  const Instance in = make(2, 4, 2, 2, 10.0, 9);
  KeyedRng rng(9, 0, 0, StreamPurpose::kTest);
  BeamformerSet dv;
  for (const auto& m : in.v) dv.push_back(complex_gaussian_matrix(rng, m.rows(), m.cols()));
  const double eps = 1e-6;
  BeamformerSet up = in.v, down = in.v;
  for (std::size_t k = 0; k < up.size(); ++k) {
    up[k] += eps * dv[k];
    down[k] -= eps * dv[k];
  }
  const RealVector fd = (to_real_view(wsr_gradient(in.problem(), up)) -
                         to_real_view(wsr_gradient(in.problem(), down))) /
                        (2.0 * eps);
  const RealVector analytic = to_real_view(wsr_gradient_directional(in.problem(), in.v, dv));
  EXPECT_LE((analytic - fd).norm(), 1e-6 * analytic.norm());
}

TEST(EvaluateWsr, OwnRateMonotoneInOwnPower) {
  for (std::uint64_t r = 0; r < 10; ++r) {
    const Instance in = make(3, 4, 2, 2, 10.0, r);
    const RateBreakdown base = evaluate_wsr(in.problem(), in.v);
    for (double t : {1.1, 2.0, 5.0}) {
      BeamformerSet scaled = in.v;
      scaled[1] *= t;
      EXPECT_GE(evaluate_wsr(in.problem(), scaled).rates[1], base.rates[1] - 1e-12);
    }
  }
}

TEST(EvaluateWsr, ShapeErrors) {
  const Instance in = make(2, 4, 2, 2, 10.0, 0);
  BeamformerSet bad = in.v;
  bad.pop_back();
  EXPECT_THROW(evaluate_wsr(in.problem(), bad), DimensionError);
  bad = in.v;
  bad[0] = ComplexMatrix::Ones(3, 2);
  EXPECT_THROW(wsr_gradient(in.problem(), bad), DimensionError);
}
