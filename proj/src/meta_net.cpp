// SPDX-License-Identifier: Apache-2.0

#include "metabf/meta_net.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>

namespace metabf {

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() != 4) throw DimensionError("meta net: expected 4 layer sizes");
  if (dims[1] != kHiddenWidth || dims[2] != kHiddenWidth) {
    throw DimensionError("meta net: hidden layers must have 50 units");
  }
  if (dims[0] < 1 || dims[3] < 1) throw DimensionError("meta net: empty input or output");
}

RealMatrix activate(const MetaNetParams& p, const RealMatrix& z) {
  if (p.activation == Activation::kTanh) return z.array().tanh().matrix();
  const double slope = p.slope;
  return z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

// Derivative of the activation, evaluated from the pre-activation.
RealMatrix activate_grad(const MetaNetParams& p, const RealMatrix& z) {
  if (p.activation == Activation::kTanh) return (1.0 - z.array().tanh().square()).matrix();
  const double slope = p.slope;
  return z.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

}  // namespace

std::string_view to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "leaky_relu";
}

Activation parse_activation(std::string_view text) {
  if (text == "tanh") return Activation::kTanh;
  if (text == "leaky_relu") return Activation::kLeakyRelu;
  throw std::invalid_argument("unknown activation '" + std::string(text) + "'");
}

Eigen::Index MetaNetParams::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

int MetaNetParams::hidden_nodes() const {
  int n = 0;
  for (std::size_t l = 1; l + 1 < dims.size(); ++l) n += dims[l];
  return n;
}

MetaNetParams MetaNetParams::zeros_like() const {
  MetaNetParams z;
  z.dims = dims;
  z.activation = activation;
  z.slope = slope;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    z.weights.push_back(RealMatrix::Zero(weights[l].rows(), weights[l].cols()));
    z.biases.push_back(RealVector::Zero(biases[l].size()));
  }
  return z;
}

RealVector MetaNetParams::flatten() const {
  RealVector flat(parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) flat(offset++) = w(i, j);
    }
    flat.segment(offset, biases[l].size()) = biases[l];
    offset += biases[l].size();
  }
  return flat;
}

void MetaNetParams::assign(const RealVector& flat) {
  if (flat.size() != parameter_count()) throw DimensionError("MetaNetParams::assign: size");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    auto& w = weights[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = flat(offset++);
    }
    biases[l] = flat.segment(offset, biases[l].size());
    offset += biases[l].size();
  }
}

bool MetaNetParams::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

std::vector<int> meta_net_dims(int n_tx, int n_streams) {
  const int width = 2 * n_tx * n_streams;
  return {width, kHiddenWidth, kHiddenWidth, width};
}

MetaNetParams net_init(const std::vector<int>& dims, KeyedRng& rng, Activation activation) {
  check_dims(dims);
  MetaNetParams p;
  p.dims = dims;
  p.activation = activation;
  const std::size_t layers = dims.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    RealMatrix w = RealMatrix::Zero(dims[l + 1], dims[l]);
    // The output layer stays zero so the first update is a no-op.
    if (l + 1 < layers) {
      const double bound = std::sqrt(6.0 / dims[l]);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
      }
    }
    p.weights.push_back(std::move(w));
    p.biases.push_back(RealVector::Zero(dims[l + 1]));
  }
  return p;
}

MetaNetParams net_init(const std::vector<int>& dims, std::uint64_t init_seed,
                       Activation activation) {
  KeyedRng rng(init_seed, 0, 0, StreamPurpose::kNetInit);
  return net_init(dims, rng, activation);
}

ForwardResult net_forward(const MetaNetParams& params, const RealMatrix& x) {
  if (params.weights.empty()) throw DimensionError("net_forward: empty network");
  if (x.rows() != params.weights.front().cols()) {
    throw DimensionError("net_forward: input has " + std::to_string(x.rows()) +
                         " rows, network expects " +
                         std::to_string(params.weights.front().cols()));
  }
  ++op_counters().net_forwards;
  ForwardResult out;
  out.tape.input = x;
  const std::size_t layers = params.layer_count();
  const RealMatrix* current = &out.tape.input;
  for (std::size_t l = 0; l < layers; ++l) {
    RealMatrix z = params.weights[l] * *current;
    z.colwise() += params.biases[l];
    out.tape.post.push_back(l + 1 < layers ? activate(params, z) : z);
    out.tape.pre.push_back(std::move(z));
    current = &out.tape.post.back();
  }
  out.y = out.tape.post.back();
  return out;
}

BackwardResult net_backward(const MetaNetParams& params, const ForwardTape& tape,
                            const RealMatrix& dl_dy) {
  const std::size_t layers = params.layer_count();
  if (tape.pre.size() != layers || tape.post.size() != layers) {
    throw DimensionError("net_backward: tape does not match the network");
  }
  if (dl_dy.rows() != tape.post.back().rows() || dl_dy.cols() != tape.post.back().cols()) {
    throw DimensionError("net_backward: output gradient shape mismatch");
  }
  ++op_counters().net_backwards;
  BackwardResult out;
  out.dtheta = params.zeros_like();
  RealMatrix delta = dl_dy;  // dL/d(pre-activation) of the current layer
  for (std::size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) delta = delta.cwiseProduct(activate_grad(params, tape.pre[l]));
    const RealMatrix& in = l == 0 ? tape.input : tape.post[l - 1];
    out.dtheta.weights[l] = delta * in.transpose();
    out.dtheta.biases[l] = delta.rowwise().sum();
    delta = params.weights[l].transpose() * delta;
  }
  out.dx = std::move(delta);
  return out;
}

void net_adam_ascent(MetaNetParams& params, const MetaNetParams& grads, AdamState& state,
                     double lr) {
  const RealVector direction = state.advance(grads.flatten());
  params.assign(params.flatten() + lr * direction);
}

void save_params(const MetaNetParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_params: cannot open " + path.string());
  out << std::setprecision(17);
  out << params.dims.size();
  for (int d : params.dims) out << ' ' << d;
  out << '\n' << to_string(params.activation) << ' ' << params.slope << '\n';
  const RealVector flat = params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) out << flat(i) << '\n';
  if (!out) throw std::runtime_error("save_params: write failed for " + path.string());
}

MetaNetParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_params: cannot open " + path.string());
  std::size_t n_dims = 0;
  in >> n_dims;
  std::vector<int> dims(n_dims);
  for (auto& d : dims) in >> d;
  std::string act;
  double slope = kDefaultLeakySlope;
  in >> act >> slope;
  if (!in) throw std::runtime_error("load_params: bad header in " + path.string());
  KeyedRng unused(0, 0, 0, StreamPurpose::kNetInit);
  MetaNetParams p = net_init(dims, unused, parse_activation(act));
  p.slope = slope;
  RealVector flat(p.parameter_count());
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    if (!(in >> flat(i))) throw std::runtime_error("load_params: truncated file " + path.string());
  }
  p.assign(flat);
  return p;
}

}  // namespace metabf
