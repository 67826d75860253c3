// SPDX-License-Identifier: Apache-2.0
//
// The update-rule network: a fully connected net with two hidden layers
// (tanh by default, leaky ReLU selectable), a linear output layer, a hand-written reverse pass and an ascent
// Adam updater. Inputs are batched column-wise (one column per user).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "metabf/linalg.hpp"
#include "metabf/optim.hpp"
#include "metabf/scenario.hpp"

namespace metabf {

inline constexpr int kHiddenWidth = 50;
inline constexpr double kDefaultLeakySlope = 0.01;
inline constexpr double kDefaultMetaLr = 5e-4;

// tanh keeps the hidden features zero-mean, so the learned readout does not
// push every user along one shared sign pattern the way rectifier features do.
enum class Activation { kTanh, kLeakyRelu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

struct MetaNetParams {
  std::vector<int> dims;             // {in, 50, 50, out}
  std::vector<RealMatrix> weights;   // weights[l] is dims[l+1] x dims[l]
  std::vector<RealVector> biases;
  Activation activation = Activation::kTanh;
  double slope = kDefaultLeakySlope;  // leaky ReLU only

  std::size_t layer_count() const { return weights.size(); }
  Eigen::Index parameter_count() const;
  // Node count of the hidden layers, the other way to read "model size".
  int hidden_nodes() const;

  // Same layout, all entries zero.
  MetaNetParams zeros_like() const;

  // Weights then bias for each layer, weights row-major.
  RealVector flatten() const;
  void assign(const RealVector& flat);

  bool all_finite() const;
};

MetaNetParams net_init(const std::vector<int>& dims, KeyedRng& rng,
                       Activation activation = Activation::kTanh);
MetaNetParams net_init(const std::vector<int>& dims, std::uint64_t init_seed,
                       Activation activation = Activation::kTanh);

// Layer dims for an N_t x d beamformer.
std::vector<int> meta_net_dims(int n_tx, int n_streams);

struct ForwardTape {
  RealMatrix input;
  std::vector<RealMatrix> pre;   // pre-activations, one per layer
  std::vector<RealMatrix> post;  // activations; post.back() is the output
};

struct ForwardResult {
  RealMatrix y;
  ForwardTape tape;
};

ForwardResult net_forward(const MetaNetParams& params, const RealMatrix& x);

struct BackwardResult {
  MetaNetParams dtheta;
  RealMatrix dx;
};

// Reverse pass of sum(dL_dy .* y) through the recorded forward pass.
BackwardResult net_backward(const MetaNetParams& params, const ForwardTape& tape,
                            const RealMatrix& dl_dy);

// theta <- theta + lr * Adam(grads).
void net_adam_ascent(MetaNetParams& params, const MetaNetParams& grads, AdamState& state,
                     double lr);

void save_params(const MetaNetParams& params, const std::filesystem::path& path);
MetaNetParams load_params(const std::filesystem::path& path);

}  // namespace metabf
