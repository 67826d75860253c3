// SPDX-License-Identifier: Apache-2.0

#include "metabf/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "metabf/optim.hpp"

namespace metabf {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_key(std::uint64_t h, std::uint64_t key) {
  std::uint64_t s = h ^ (key + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

}  // namespace

std::vector<std::string> ScenarioConfig::validate() const {
  if (n_tx < 1 || n_rx < 1 || n_streams < 1 || n_users < 1) {
    throw std::invalid_argument("scenario: antenna, stream and user counts must be >= 1");
  }
  if (n_streams > std::min(n_tx, n_rx)) {
    throw std::invalid_argument("scenario: n_streams must not exceed min(n_tx, n_rx)");
  }
  if (!(total_power > 0.0)) throw std::invalid_argument("scenario: total_power must be > 0");
  if (!user_weights.empty()) {
    if (static_cast<int>(user_weights.size()) != n_users) {
      throw std::invalid_argument("scenario: user_weights needs one entry per user");
    }
    for (double w : user_weights) {
      if (!(w > 0.0)) throw std::invalid_argument("scenario: user weights must be > 0");
    }
  }
  std::vector<std::string> warnings;
  if (n_users * n_streams > n_tx) {
    warnings.push_back("scenario: overloaded system (K*d = " +
                       std::to_string(n_users * n_streams) + " > n_tx = " +
                       std::to_string(n_tx) + ")");
  }
  return warnings;
}

std::vector<double> ScenarioConfig::weights() const {
  if (user_weights.empty()) return std::vector<double>(static_cast<std::size_t>(n_users), 1.0);
  return user_weights;
}

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, StreamPurpose purpose) {
  std::uint64_t h = mix_key(0x1234ABCD5678EF01ULL, seed);
  h = mix_key(h, a);
  h = mix_key(h, b);
  h = mix_key(h, static_cast<std::uint64_t>(purpose));
  state_ = h;
}

std::uint64_t KeyedRng::next_u64() { return splitmix64(state_); }

double KeyedRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double KeyedRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double KeyedRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

cdouble KeyedRng::complex_normal() {
  const double re = normal();
  const double im = normal();
  return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

ComplexMatrix complex_gaussian_matrix(KeyedRng& rng, Eigen::Index rows, Eigen::Index cols) {
  ComplexMatrix m(rows, cols);
  // Row-major draw order, independent of Eigen's storage order.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.complex_normal();
  }
  return m;
}

ChannelSet sample_channels(const ScenarioConfig& config, std::uint64_t realization_index) {
  KeyedRng rng(config.master_seed, realization_index, 0, StreamPurpose::kChannel);
  ChannelSet h;
  h.reserve(static_cast<std::size_t>(config.n_users));
  for (int k = 0; k < config.n_users; ++k) {
    h.push_back(complex_gaussian_matrix(rng, config.n_rx, config.n_tx));
  }
  return h;
}

double noise_variance(const ScenarioConfig& config) {
  return config.total_power * std::pow(10.0, -config.snr_db / 10.0);
}

BeamformerSet init_beamformers(const ScenarioConfig& config, std::uint64_t realization_index,
                               std::uint64_t restart_index) {
  KeyedRng rng(config.master_seed, realization_index, restart_index,
               StreamPurpose::kBeamformerInit);
  for (int attempt = 0; attempt < 2; ++attempt) {
    BeamformerSet v;
    v.reserve(static_cast<std::size_t>(config.n_users));
    for (int k = 0; k < config.n_users; ++k) {
      v.push_back(complex_gaussian_matrix(rng, config.n_tx, config.n_streams));
    }
    if (frob2(v) > 0.0) return project_power(v, config.total_power);
  }
  throw DegenerateInputError("init_beamformers: repeated all-zero draw");
}

}  // namespace metabf
