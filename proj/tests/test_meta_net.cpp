// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "metabf/meta_net.hpp"

using namespace metabf;

namespace {

RealMatrix random_real(KeyedRng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

MetaNetParams random_net(const std::vector<int>& dims, std::uint64_t seed, Activation a) {
  KeyedRng rng(seed, 0, 0, StreamPurpose::kTest);
  MetaNetParams p = net_init(dims, rng, a);
  RealVector flat = p.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = rng.uniform(-0.5, 0.5);
  p.assign(flat);
  return p;
}

// Straight loops, no Eigen products.
RealMatrix forward_oracle(const MetaNetParams& p, const RealMatrix& x) {
  RealMatrix cur = x;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const RealMatrix& w = p.weights[l];
    RealMatrix next(w.rows(), cur.cols());
    for (Eigen::Index c = 0; c < cur.cols(); ++c) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double s = p.biases[l](i);
        for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * cur(j, c);
        if (l + 1 < p.weights.size()) {
          s = p.activation == Activation::kTanh ? std::tanh(s) : (s > 0.0 ? s : p.slope * s);
        }
        next(i, c) = s;
      }
    }
    cur = next;
  }
  return cur;
}

double loss(const MetaNetParams& p, const RealMatrix& x, const RealMatrix& c) {
  return (net_forward(p, x).y.array() * c.array()).sum();
}

class BothActivations : public ::testing::TestWithParam<Activation> {};

}  // namespace

TEST(MetaNet, DimsAndSizes) {
  const auto dims = meta_net_dims(8, 2);
  EXPECT_EQ(dims, (std::vector<int>{32, 50, 50, 32}));
  const MetaNetParams p = net_init(dims, 1);
  std::int64_t oracle = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) oracle += dims[l] * dims[l + 1] + dims[l + 1];
  EXPECT_EQ(p.parameter_count(), oracle);
  EXPECT_EQ(p.parameter_count(), 5832);
  EXPECT_EQ(p.hidden_nodes(), 100);
  EXPECT_EQ(p.layer_count(), 3u);
}

TEST(MetaNet, InitOutputIsZeroAndHiddenBounded) {
  const MetaNetParams p = net_init(meta_net_dims(4, 2), 5);
  EXPECT_EQ(p.weights.back().norm(), 0.0);
  EXPECT_EQ(p.biases.back().norm(), 0.0);
  for (std::size_t l = 0; l + 1 < p.weights.size(); ++l) {
    const double bound = std::sqrt(6.0 / p.dims[l]);
    EXPECT_LE(p.weights[l].cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(p.weights[l].norm(), 0.0);
    EXPECT_EQ(p.biases[l].norm(), 0.0);
  }
  KeyedRng rng(3, 0, 0, StreamPurpose::kTest);
  const RealMatrix x = random_real(rng, 16, 3, 10.0);
  EXPECT_EQ(net_forward(p, x).y.norm(), 0.0);
}

TEST(MetaNet, InitDeterministicPerSeed) {
  const auto dims = meta_net_dims(4, 1);
  EXPECT_EQ(net_init(dims, 9).flatten(), net_init(dims, 9).flatten());
  EXPECT_NE(net_init(dims, 9).flatten(), net_init(dims, 10).flatten());
}

TEST(MetaNet, InvalidDimsRejected) {
  EXPECT_THROW(net_init({4, 50}, 1), DimensionError);
  const MetaNetParams p = net_init(meta_net_dims(2, 1), 1);
  EXPECT_THROW(net_forward(p, RealMatrix::Zero(3, 1)), DimensionError);
}

TEST(MetaNet, FlattenAssignRoundTrip) {
  MetaNetParams p = random_net(meta_net_dims(2, 1), 4, Activation::kTanh);
  const RealVector flat = p.flatten();
  MetaNetParams q = p.zeros_like();
  q.assign(flat);
  EXPECT_EQ(q.flatten(), flat);
  EXPECT_THROW(q.assign(RealVector::Zero(3)), DimensionError);
}

TEST_P(BothActivations, ForwardMatchesLoopOracle) {
  const MetaNetParams p = random_net(meta_net_dims(4, 2), 6, GetParam());
  KeyedRng rng(6, 1, 0, StreamPurpose::kTest);
  const RealMatrix x = random_real(rng, 16, 4, 2.0);
  EXPECT_LE((net_forward(p, x).y - forward_oracle(p, x)).norm(), 1e-12);
}

TEST_P(BothActivations, BackwardMatchesFiniteDifferences) {
  constexpr double kEps = 1e-6;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    MetaNetParams p = random_net(meta_net_dims(2, 1), 100 + trial, GetParam());
    KeyedRng rng(trial, 2, 0, StreamPurpose::kTest);
    const RealMatrix x = random_real(rng, 4, 2, 2.0);
    const RealMatrix c = random_real(rng, 4, 2);
    const ForwardResult fwd = net_forward(p, x);
    const BackwardResult back = net_backward(p, fwd.tape, c);

    RealVector theta = p.flatten();
    const RealVector analytic = back.dtheta.flatten();
    MetaNetParams probe = p;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      const double keep = theta(j);
      theta(j) = keep + kEps;
      probe.assign(theta);
      const double up = loss(probe, x, c);
      theta(j) = keep - kEps;
      probe.assign(theta);
      const double down = loss(probe, x, c);
      theta(j) = keep;
      EXPECT_NEAR(analytic(j), (up - down) / (2 * kEps), 1e-6 * std::max(1.0, std::abs(analytic(j))))
          << "parameter " << j << " trial " << trial;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      RealMatrix xp = x, xm = x;
      xp.data()[i] += kEps;
      xm.data()[i] -= kEps;
      const double fd = (loss(p, xp, c) - loss(p, xm, c)) / (2 * kEps);
      EXPECT_NEAR(back.dx.data()[i], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_P(BothActivations, BackwardIsLinearInUpstream) {
  const MetaNetParams p = random_net(meta_net_dims(2, 2), 7, GetParam());
  KeyedRng rng(7, 3, 0, StreamPurpose::kTest);
  const RealMatrix x = random_real(rng, 8, 3);
  const RealMatrix a = random_real(rng, 8, 3);
  const RealMatrix b = random_real(rng, 8, 3);
  const ForwardTape tape = net_forward(p, x).tape;
  const RealVector ga = net_backward(p, tape, a).dtheta.flatten();
  const RealVector gb = net_backward(p, tape, b).dtheta.flatten();
  const RealVector gab = net_backward(p, tape, 2.0 * a - 3.0 * b).dtheta.flatten();
  EXPECT_LE((gab - (2.0 * ga - 3.0 * gb)).norm(), 1e-11 * std::max(1.0, gab.norm()));
}

TEST_P(BothActivations, SaveLoadRoundTrip) {
  MetaNetParams p = random_net(meta_net_dims(4, 1), 8, GetParam());
  p.slope = 0.05;
  const auto path = std::filesystem::temp_directory_path() / "metabf_params_roundtrip.txt";
  save_params(p, path);
  const MetaNetParams q = load_params(path);
  std::filesystem::remove(path);
  EXPECT_EQ(q.dims, p.dims);
  EXPECT_EQ(q.activation, p.activation);
  EXPECT_EQ(q.slope, p.slope);
  EXPECT_EQ(q.flatten(), p.flatten());
}

INSTANTIATE_TEST_SUITE_P(Activations, BothActivations,
                         ::testing::Values(Activation::kTanh, Activation::kLeakyRelu),
                         [](const auto& info) { return std::string(to_string(info.param)) == "tanh"
                                                           ? std::string("Tanh")
                                                           : std::string("LeakyRelu"); });

TEST(MetaNet, LeakySlopeOnNegativeInputs) {
  MetaNetParams p = net_init({1, 50, 50, 1}, 1, Activation::kLeakyRelu);
  for (auto& w : p.weights) w.setZero();
  p.weights[0](0, 0) = 1.0;
  p.weights[1](0, 0) = 1.0;
  p.weights[2](0, 0) = 1.0;
  EXPECT_NEAR(net_forward(p, RealMatrix::Constant(1, 1, -2.0)).y(0, 0), -2.0 * 0.01 * 0.01, 1e-15);
  EXPECT_NEAR(net_forward(p, RealMatrix::Constant(1, 1, 3.0)).y(0, 0), 3.0, 1e-15);
}

TEST(MetaNet, ActivationNames) {
  EXPECT_EQ(parse_activation("tanh"), Activation::kTanh);
  EXPECT_EQ(parse_activation(to_string(Activation::kLeakyRelu)), Activation::kLeakyRelu);
  EXPECT_THROW(parse_activation("relu6"), std::invalid_argument);
}

TEST(MetaNet, AdamAscentZeroGradientIsNoOp) {
  MetaNetParams p = random_net(meta_net_dims(2, 1), 12, Activation::kTanh);
  const RealVector before = p.flatten();
  AdamState st = AdamState::zeros(before.size());
  net_adam_ascent(p, p.zeros_like(), st, 1e-3);
  EXPECT_EQ(p.flatten(), before);
}

TEST(MetaNet, AdamAscentFirstStepIsUniform) {
  MetaNetParams p = random_net(meta_net_dims(2, 1), 13, Activation::kTanh);
  const RealVector before = p.flatten();
  MetaNetParams g = p.zeros_like();
  RealVector gflat(before.size());
  KeyedRng rng(13, 0, 0, StreamPurpose::kTest);
  for (Eigen::Index i = 0; i < gflat.size(); ++i) gflat(i) = rng.uniform(-2.0, 2.0);
  g.assign(gflat);
  AdamState st = AdamState::zeros(before.size());
  net_adam_ascent(p, g, st, 5e-4);
  const RealVector step = p.flatten() - before;
  for (Eigen::Index i = 0; i < step.size(); ++i) {
    EXPECT_NEAR(step(i), 5e-4 * gflat(i) / (std::abs(gflat(i)) + st.eps), 1e-15);
  }
}
