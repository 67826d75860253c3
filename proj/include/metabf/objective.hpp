// SPDX-License-Identifier: Apache-2.0
//
// Weighted sum rate and its Wirtinger gradient.
//
// Rates are reported in bits. The gradient follows the conjugate convention
// G_k = dF/dV_k^*, so that dF = 2 Re Tr(G^H dV) and G is the steepest-ascent
// direction.

#pragma once

#include <span>
#include <vector>

#include "metabf/linalg.hpp"
#include "metabf/scenario.hpp"

namespace metabf {

using WirtingerGradient = std::vector<ComplexMatrix>;

struct RateBreakdown {
  std::vector<double> rates;   // R_k in bits
  double wsr = 0.0;            // sum_k alpha_k R_k
  std::vector<ComplexMatrix> full_cov;          // A_k
  std::vector<ComplexMatrix> interference_cov;  // B_k
};

struct WsrProblem {
  std::span<const ComplexMatrix> channels;
  double sigma2 = 1.0;
  std::span<const double> weights;
};

RateBreakdown evaluate_wsr(const WsrProblem& problem, std::span<const ComplexMatrix> v);

// Rate-only evaluation; skips caching the covariances.
double wsr_value(const WsrProblem& problem, std::span<const ComplexMatrix> v);

WirtingerGradient wsr_gradient(const WsrProblem& problem, std::span<const ComplexMatrix> v);

// Value and gradient sharing one set of factorizations.
struct WsrWithGradient {
  double wsr = 0.0;
  WirtingerGradient gradient;
};
WsrWithGradient wsr_and_gradient(const WsrProblem& problem, std::span<const ComplexMatrix> v);

// Directional derivative of the Wirtinger gradient along dv (all users move
// together). In the stacked real/imaginary coordinates this is one half of the
// real Hessian of F applied to dv.
WirtingerGradient wsr_gradient_directional(const WsrProblem& problem,
                                           std::span<const ComplexMatrix> v,
                                           std::span<const ComplexMatrix> dv);

// Central differences on every real and imaginary coordinate.
WirtingerGradient wsr_gradient_fd(const WsrProblem& problem, std::span<const ComplexMatrix> v,
                                  double step);

}  // namespace metabf
