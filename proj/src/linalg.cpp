// SPDX-License-Identifier: Apache-2.0

#include "metabf/linalg.hpp"

#include <cmath>

namespace metabf {

namespace {
constexpr double kPivotTolerance = 1e-300;

void check_inner(Eigen::Index a_inner, Eigen::Index b_inner, const char* what) {
  if (a_inner != b_inner) {
    throw DimensionError(std::string(what) + ": inner dimensions " + std::to_string(a_inner) +
                         " and " + std::to_string(b_inner) + " differ");
  }
}
}  // namespace

OpCounters& op_counters() {
  thread_local OpCounters counters;
  return counters;
}

void reset_op_counters() { op_counters() = OpCounters{}; }

ComplexMatrix mul(const ComplexMatrix& a, const ComplexMatrix& b) {
  check_inner(a.cols(), b.rows(), "mul");
  ++op_counters().matmuls;
  return a * b;
}

ComplexMatrix mul_ah(const ComplexMatrix& a, const ComplexMatrix& b) {
  check_inner(a.rows(), b.rows(), "mul_ah");
  ++op_counters().matmuls;
  return a.adjoint() * b;
}

ComplexMatrix mul_bh(const ComplexMatrix& a, const ComplexMatrix& b) {
  check_inner(a.cols(), b.cols(), "mul_bh");
  ++op_counters().matmuls;
  return a * b.adjoint();
}

ComplexMatrix hermitian_transpose(const ComplexMatrix& m) { return m.adjoint(); }

ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("hermitian_part: matrix is not square");
  ComplexMatrix out = 0.5 * (m + m.adjoint());
  return out;
}

ComplexMatrix transmit_covariance(std::span<const ComplexMatrix> v_list,
                                  std::optional<std::size_t> exclude) {
  if (v_list.empty()) throw DimensionError("transmit_covariance: empty beamformer list");
  const Eigen::Index n_tx = v_list.front().rows();
  ComplexMatrix s = ComplexMatrix::Zero(n_tx, n_tx);
  for (std::size_t r = 0; r < v_list.size(); ++r) {
    if (v_list[r].rows() != n_tx) throw DimensionError("transmit_covariance: row count differs");
    if (exclude && *exclude == r) continue;
    s += mul_bh(v_list[r], v_list[r]);
  }
  return s;
}

ComplexMatrix received_covariance_from(const ComplexMatrix& h, const ComplexMatrix& s,
                                       double sigma2) {
  if (h.cols() != s.rows() || s.rows() != s.cols()) {
    throw DimensionError("received_covariance: channel has " + std::to_string(h.cols()) +
                         " columns, transmit covariance is " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()));
  }
  ComplexMatrix a = mul_bh(mul(h, s), h);
  a.diagonal().array() += sigma2;
  return hermitian_part(a);
}

ComplexMatrix received_covariance(const ComplexMatrix& h, std::span<const ComplexMatrix> v_list,
                                  double sigma2, std::optional<std::size_t> exclude) {
  return received_covariance_from(h, transmit_covariance(v_list, exclude), sigma2);
}

HpdFactor::HpdFactor(const ComplexMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DimensionError("HpdFactor: expected a non-empty square matrix");
  }
  ++op_counters().factorizations;
  llt_.compute(a);
  if (llt_.info() != Eigen::Success) {
    throw SingularityError("HpdFactor: matrix is not positive definite");
  }
  const auto diag = llt_.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    const double pivot = std::norm(diag(i));
    if (!(pivot > kPivotTolerance) || !std::isfinite(pivot)) {
      throw SingularityError("HpdFactor: pivot " + std::to_string(i) + " below tolerance");
    }
  }
}

ComplexMatrix HpdFactor::solve(const ComplexMatrix& b) const {
  if (b.rows() != llt_.rows()) throw DimensionError("HpdFactor::solve: row count mismatch");
  ++op_counters().hpd_solves;
  return llt_.solve(b);
}

double HpdFactor::logdet2() const {
  // det A = prod |L_ii|^2
  const auto diag = llt_.matrixLLT().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) acc += std::log2(diag(i).real());
  return 2.0 * acc;
}

ComplexMatrix solve_hpd(const ComplexMatrix& a, const ComplexMatrix& b) {
  return HpdFactor(a).solve(b);
}

double logdet2_hpd(const ComplexMatrix& a) { return HpdFactor(a).logdet2(); }

double frob2(std::span<const ComplexMatrix> v_list) {
  double total = 0.0;
  for (const auto& v : v_list) total += v.squaredNorm();
  return total;
}

RealVector to_real_view(const ComplexMatrix& m) {
  const Eigen::Index n = m.size();
  RealVector x(2 * n);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, ++idx) {
      x(idx) = m(i, j).real();
      x(idx + n) = m(i, j).imag();
    }
  }
  return x;
}

RealVector to_real_view(std::span<const ComplexMatrix> list) {
  Eigen::Index total = 0;
  for (const auto& m : list) total += 2 * m.size();
  RealVector x(total);
  Eigen::Index offset = 0;
  for (const auto& m : list) {
    x.segment(offset, 2 * m.size()) = to_real_view(m);
    offset += 2 * m.size();
  }
  return x;
}

ComplexMatrix from_real_view(std::span<const double> x, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::Index n = rows * cols;
  if (static_cast<Eigen::Index>(x.size()) != 2 * n) {
    throw DimensionError("from_real_view: expected " + std::to_string(2 * n) + " values, got " +
                         std::to_string(x.size()));
  }
  ComplexMatrix m(rows, cols);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j, ++idx) {
      m(i, j) = cdouble(x[static_cast<std::size_t>(idx)], x[static_cast<std::size_t>(idx + n)]);
    }
  }
  return m;
}

std::vector<ComplexMatrix> from_real_view(std::span<const double> x,
                                          std::span<const ComplexMatrix> like) {
  std::vector<ComplexMatrix> out;
  out.reserve(like.size());
  std::size_t offset = 0;
  for (const auto& m : like) {
    const auto len = static_cast<std::size_t>(2 * m.size());
    if (offset + len > x.size()) throw DimensionError("from_real_view: vector too short");
    out.push_back(from_real_view(x.subspan(offset, len), m.rows(), m.cols()));
    offset += len;
  }
  if (offset != x.size()) throw DimensionError("from_real_view: vector too long");
  return out;
}

}  // namespace metabf
