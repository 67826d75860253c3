// SPDX-License-Identifier: Apache-2.0
//
// Scenario description, keyed random streams, Rayleigh channel draws and
// beamformer initialization.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metabf/linalg.hpp"

namespace metabf {

// H_k, one N_r x N_t matrix per user.
using ChannelSet = std::vector<ComplexMatrix>;
// V_k, one N_t x d matrix per user.
using BeamformerSet = std::vector<ComplexMatrix>;

struct ScenarioConfig {
  std::string name = "default";
  int n_tx = 8;
  int n_rx = 2;
  int n_streams = 2;
  int n_users = 2;
  double total_power = 1.0;
  double snr_db = 10.0;
  std::vector<double> user_weights;  // empty means alpha_k = 1 for all users
  std::uint64_t master_seed = 1;

  // Throws std::invalid_argument on a hard violation; returns soft warnings
  // (overloaded systems are allowed).
  std::vector<std::string> validate() const;

  std::vector<double> weights() const;
};

enum class StreamPurpose : std::uint64_t {
  kChannel = 1,
  kBeamformerInit = 2,
  kNetInit = 3,
  kTest = 99,
};

// Counter-based generator: the stream is a pure function of its keys, so
// draws do not depend on thread scheduling. Normals use Box-Muller on
// 53-bit uniforms.
class KeyedRng {
 public:
  KeyedRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b, StreamPurpose purpose);

  std::uint64_t next_u64();
  // Uniform on (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  // Circularly-symmetric CN(0, 1).
  cdouble complex_normal();

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

ComplexMatrix complex_gaussian_matrix(KeyedRng& rng, Eigen::Index rows, Eigen::Index cols);

ChannelSet sample_channels(const ScenarioConfig& config, std::uint64_t realization_index);

// sigma^2 = P * 10^(-snr_db / 10).
double noise_variance(const ScenarioConfig& config);

BeamformerSet init_beamformers(const ScenarioConfig& config, std::uint64_t realization_index,
                               std::uint64_t restart_index);

}  // namespace metabf
