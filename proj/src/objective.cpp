// SPDX-License-Identifier: Apache-2.0

#include "metabf/objective.hpp"

#include <cmath>
#include <numbers>

namespace metabf {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

void check_problem(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  const std::size_t k_users = problem.channels.size();
  if (k_users == 0) throw DimensionError("wsr: no users");
  if (v.size() != k_users) throw DimensionError("wsr: beamformer count differs from user count");
  if (problem.weights.size() != k_users) throw DimensionError("wsr: weight count differs");
  if (!(problem.sigma2 > 0.0)) throw std::invalid_argument("wsr: sigma2 must be > 0");
  const Eigen::Index n_tx = problem.channels.front().cols();
  for (std::size_t k = 0; k < k_users; ++k) {
    if (problem.channels[k].cols() != n_tx || v[k].rows() != n_tx) {
      throw DimensionError("wsr: transmit dimension mismatch for user " + std::to_string(k));
    }
  }
}

// Factorized covariances shared by value, gradient and Hessian products.
struct Factorized {
  ComplexMatrix s;  // sum_r V_r V_r^H
  std::vector<ComplexMatrix> hv;  // H_k V_k
  std::vector<ComplexMatrix> a, b;
  std::vector<HpdFactor> a_fac, b_fac;
  std::vector<double> rates;
  double wsr = 0.0;
};

Factorized factorize(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  check_problem(problem, v);
  const std::size_t k_users = v.size();
  Factorized f;
  f.s = transmit_covariance(v);
  f.hv.reserve(k_users);
  f.a.reserve(k_users);
  f.b.reserve(k_users);
  f.a_fac.reserve(k_users);
  f.b_fac.reserve(k_users);
  f.rates.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const ComplexMatrix& h = problem.channels[k];
    ComplexMatrix s_minus = f.s - mul_bh(v[k], v[k]);
    f.hv.push_back(mul(h, v[k]));
    f.a.push_back(received_covariance_from(h, f.s, problem.sigma2));
    f.b.push_back(received_covariance_from(h, s_minus, problem.sigma2));
    f.a_fac.emplace_back(f.a.back());
    f.b_fac.emplace_back(f.b.back());
    // A_k >= B_k, so the difference is non-negative up to rounding.
    const double rate = std::max(0.0, f.a_fac.back().logdet2() - f.b_fac.back().logdet2());
    f.rates.push_back(rate);
    f.wsr += problem.weights[k] * rate;
  }
  return f;
}

// H^H X^{-1} H for a factorized X.
ComplexMatrix sandwich(const ComplexMatrix& h, const HpdFactor& fac) {
  return hermitian_part(mul_ah(h, fac.solve(h)));
}

WirtingerGradient gradient_from(const WsrProblem& problem, std::span<const ComplexMatrix> v,
                                const Factorized& f) {
  const std::size_t k_users = v.size();
  const Eigen::Index n_tx = v.front().rows();
  ComplexMatrix q_a = ComplexMatrix::Zero(n_tx, n_tx);
  ComplexMatrix q_b = ComplexMatrix::Zero(n_tx, n_tx);
  std::vector<ComplexMatrix> p_b;
  p_b.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const ComplexMatrix& h = problem.channels[k];
    q_a += problem.weights[k] * sandwich(h, f.a_fac[k]);
    p_b.push_back(sandwich(h, f.b_fac[k]));
    q_b += problem.weights[k] * p_b.back();
  }
  WirtingerGradient g;
  g.reserve(k_users);
  for (std::size_t j = 0; j < k_users; ++j) {
    // Interference terms exclude user j's own B_j.
    ComplexMatrix q = q_a - q_b + problem.weights[j] * p_b[j];
    g.push_back(kInvLn2 * mul(q, v[j]));
  }
  return g;
}

}  // namespace

RateBreakdown evaluate_wsr(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  Factorized f = factorize(problem, v);
  RateBreakdown out;
  out.rates = std::move(f.rates);
  out.wsr = f.wsr;
  out.full_cov = std::move(f.a);
  out.interference_cov = std::move(f.b);
  return out;
}

double wsr_value(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  return factorize(problem, v).wsr;
}

WirtingerGradient wsr_gradient(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  return gradient_from(problem, v, factorize(problem, v));
}

WsrWithGradient wsr_and_gradient(const WsrProblem& problem, std::span<const ComplexMatrix> v) {
  const Factorized f = factorize(problem, v);
  return {f.wsr, gradient_from(problem, v, f)};
}

WirtingerGradient wsr_gradient_directional(const WsrProblem& problem,
                                           std::span<const ComplexMatrix> v,
                                           std::span<const ComplexMatrix> dv) {
  const Factorized f = factorize(problem, v);
  const std::size_t k_users = v.size();
  if (dv.size() != k_users) throw DimensionError("wsr_gradient_directional: direction size");
  const Eigen::Index n_tx = v.front().rows();

  // dS = sum_r (dV_r V_r^H + V_r dV_r^H)
  ComplexMatrix ds = ComplexMatrix::Zero(n_tx, n_tx);
  std::vector<ComplexMatrix> ds_own;
  ds_own.reserve(k_users);
  for (std::size_t r = 0; r < k_users; ++r) {
    ComplexMatrix t = mul_bh(dv[r], v[r]);
    ds_own.push_back(t + t.adjoint());
    ds += ds_own.back();
  }

  ComplexMatrix q_a = ComplexMatrix::Zero(n_tx, n_tx);
  ComplexMatrix q_b = ComplexMatrix::Zero(n_tx, n_tx);
  ComplexMatrix dq_a = ComplexMatrix::Zero(n_tx, n_tx);
  ComplexMatrix dq_b = ComplexMatrix::Zero(n_tx, n_tx);
  std::vector<ComplexMatrix> p_b, dp_b;
  p_b.reserve(k_users);
  dp_b.reserve(k_users);
  for (std::size_t k = 0; k < k_users; ++k) {
    const ComplexMatrix& h = problem.channels[k];
    const double w = problem.weights[k];
    const ComplexMatrix a_inv_h = f.a_fac[k].solve(h);
    const ComplexMatrix b_inv_h = f.b_fac[k].solve(h);
    const ComplexMatrix da = mul_bh(mul(h, ds), h);
    const ComplexMatrix db = mul_bh(mul(h, ComplexMatrix(ds - ds_own[k])), h);
    q_a += w * mul_ah(h, a_inv_h);
    p_b.push_back(mul_ah(h, b_inv_h));
    q_b += w * p_b.back();
    // d(H^H X^{-1} H) = -(X^{-1} H)^H dX (X^{-1} H)
    dq_a -= w * mul_ah(a_inv_h, mul(da, a_inv_h));
    dp_b.push_back(-mul_ah(b_inv_h, mul(db, b_inv_h)));
    dq_b += w * dp_b.back();
  }
  WirtingerGradient out;
  out.reserve(k_users);
  for (std::size_t j = 0; j < k_users; ++j) {
    const double w = problem.weights[j];
    ComplexMatrix q = q_a - q_b + w * p_b[j];
    ComplexMatrix dq = dq_a - dq_b + w * dp_b[j];
    out.push_back(kInvLn2 * (mul(dq, v[j]) + mul(q, dv[j])));
  }
  return out;
}

WirtingerGradient wsr_gradient_fd(const WsrProblem& problem, std::span<const ComplexMatrix> v,
                                  double step) {
  check_problem(problem, v);
  std::vector<ComplexMatrix> probe(v.begin(), v.end());
  WirtingerGradient g;
  g.reserve(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    ComplexMatrix gk(v[k].rows(), v[k].cols());
    for (Eigen::Index i = 0; i < v[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < v[k].cols(); ++j) {
        const cdouble original = probe[k](i, j);
        double parts[2];
        for (int part = 0; part < 2; ++part) {
          const cdouble delta = part == 0 ? cdouble(step, 0.0) : cdouble(0.0, step);
          probe[k](i, j) = original + delta;
          const double up = wsr_value(problem, probe);
          probe[k](i, j) = original - delta;
          const double down = wsr_value(problem, probe);
          probe[k](i, j) = original;
          parts[part] = (up - down) / (4.0 * step);
        }
        gk(i, j) = cdouble(parts[0], parts[1]);
      }
    }
    g.push_back(std::move(gk));
  }
  return g;
}

}  // namespace metabf
