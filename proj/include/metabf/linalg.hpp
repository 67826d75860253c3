// SPDX-License-Identifier: Apache-2.0
//
// Complex dense kernels for small MIMO dimensions.
//
// Matrices are Eigen::MatrixXcd, i.e. dense and column-major. Every solve goes
// through a Cholesky factorization; no routine in this library forms an
// explicit inverse.

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace metabf {

using cdouble = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-thread operation tallies. Solvers run single-threaded, so a caller can
// reset the counters, run one solve and read back exact counts.
struct OpCounters {
  std::uint64_t matmuls = 0;
  std::uint64_t factorizations = 0;
  std::uint64_t hpd_solves = 0;
  std::uint64_t bisections = 0;
  std::uint64_t net_forwards = 0;
  std::uint64_t net_backwards = 0;
};

OpCounters& op_counters();
void reset_op_counters();

// Counted products: A*B, A^H*B and A*B^H.
ComplexMatrix mul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix mul_ah(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix mul_bh(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix hermitian_transpose(const ComplexMatrix& m);

// (M + M^H) / 2.
ComplexMatrix hermitian_part(const ComplexMatrix& m);

// S = sum_r V_r V_r^H, optionally skipping one index.
ComplexMatrix transmit_covariance(std::span<const ComplexMatrix> v_list,
                                  std::optional<std::size_t> exclude = std::nullopt);

// sigma2 I + sum_{r != exclude} H V_r V_r^H H^H, symmetrized.
ComplexMatrix received_covariance(const ComplexMatrix& h,
                                  std::span<const ComplexMatrix> v_list,
                                  double sigma2,
                                  std::optional<std::size_t> exclude = std::nullopt);

// sigma2 I + H S H^H for a precomputed transmit covariance S, symmetrized.
ComplexMatrix received_covariance_from(const ComplexMatrix& h, const ComplexMatrix& s,
                                       double sigma2);

// Cholesky factor of a Hermitian positive definite matrix. Throws
// SingularityError when a pivot falls to or below 1e-300.
class HpdFactor {
 public:
  explicit HpdFactor(const ComplexMatrix& a);

  ComplexMatrix solve(const ComplexMatrix& b) const;
  double logdet2() const;
  Eigen::Index size() const { return llt_.rows(); }

 private:
  Eigen::LLT<ComplexMatrix> llt_;
};

ComplexMatrix solve_hpd(const ComplexMatrix& a, const ComplexMatrix& b);
double logdet2_hpd(const ComplexMatrix& a);

// sum_k Tr(V_k V_k^H).
double frob2(std::span<const ComplexMatrix> v_list);

// Real coordinate view of a matrix: real parts then imaginary parts, each
// row-major. Lists are concatenated in order.
RealVector to_real_view(const ComplexMatrix& m);
RealVector to_real_view(std::span<const ComplexMatrix> list);
ComplexMatrix from_real_view(std::span<const double> x, Eigen::Index rows, Eigen::Index cols);
// Inverse of the list form; shapes taken from `like`.
std::vector<ComplexMatrix> from_real_view(std::span<const double> x,
                                          std::span<const ComplexMatrix> like);

}  // namespace metabf
