#pragma once

// Real-Hilbert-space counterexamples: the operator-space dimension gap and
// the product-span test for the two-copy sigma_2 mixture.

#include <cmath>
#include <string>
#include <vector>

#include "qdf/states_povm.hpp"

namespace qdf {

class RealSymmetricOperator {
 public:
  explicit RealSymmetricOperator(Eigen::MatrixXd m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) fail(ErrorKind::Shape, "operator must be square");
    if (!m_.allFinite()) fail(ErrorKind::Invariant, "operator has non-finite entries");
    Eigen::MatrixXd sym = 0.5 * (m_ + m_.transpose());
    m_ = std::move(sym);
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }

 private:
  Eigen::MatrixXd m_;
};

// Fails with Invariant when op has a non-negligible imaginary part.
inline RealSymmetricOperator to_real(const HermitianOperator& op) {
  const double im = op.matrix().imag().cwiseAbs().maxCoeff();
  if (im > kHermTol) {
    fail(ErrorKind::Invariant, "operator is not real (max |Im| = " + std::to_string(im) + ")");
  }
  return RealSymmetricOperator(op.matrix().real());
}

struct DimensionGap {
  std::uint64_t lhs;  // d^N (d^N + 1) / 2
  std::uint64_t rhs;  // (d (d + 1) / 2)^N
  bool gap_positive;
};

inline DimensionGap dimension_gap(std::uint64_t d, std::uint64_t n) {
  if (d < 2 || n < 1) fail(ErrorKind::Argument, "need d >= 2 and n >= 1");
  const std::uint64_t dn = checked_pow(d, n);
  const std::uint64_t lhs = checked_mul(dn, dn + 1) / 2;
  const std::uint64_t rhs = checked_pow(d * (d + 1) / 2, n);
  return {lhs, rhs, lhs > rhs};
}

// d (d + 1) / 2: real symmetric d x d matrices, hence elements of a minimal
// informationally complete real POVM.
inline std::uint64_t real_basis_count(std::uint64_t d) {
  if (d < 1) fail(ErrorKind::Argument, "need d >= 1");
  return d * (d + 1) / 2;
}

struct RealStateVerdict {
  bool valid;
  bool trace_ok;
  bool psd_ok;
  double trace;
  double min_eigenvalue;
};

inline RealStateVerdict validate_real_state(const RealSymmetricOperator& op) {
  const double tr = op.matrix().trace();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op.matrix(), Eigen::EigenvaluesOnly);
  const double lo = solver.eigenvalues()(0);
  const bool trace_ok = std::abs(tr - 1.0) <= kTraceTol;
  const bool psd_ok = lo >= -kPsdTol;
  return {trace_ok && psd_ok, trace_ok, psd_ok, tr, lo};
}

// Orthonormal (trace inner product) basis of real symmetric d x d matrices:
// {I, sigma_1, sigma_3}/sqrt(2) for d = 2, e_jj and (e_jk + e_kj)/sqrt(2)
// otherwise.
inline std::vector<Eigen::MatrixXd> real_symmetric_basis(std::size_t d) {
  std::vector<Eigen::MatrixXd> out;
  const auto n = static_cast<Eigen::Index>(d);
  if (d == 2) {
    const double s = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2d i2, s1, s3;
    i2 << 1, 0, 0, 1;
    s1 << 0, 1, 1, 0;
    s3 << 1, 0, 0, -1;
    out = {s * i2, s * s1, s * s3};
    return out;
  }
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j; k < n; ++k) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
      if (j == k) {
        m(j, j) = 1.0;
      } else {
        m(j, k) = m(k, j) = 1.0 / std::sqrt(2.0);
      }
      out.push_back(std::move(m));
    }
  return out;
}

struct SpanProjection {
  RealSymmetricOperator projection;
  double residual_norm;  // Frobenius norm of op - projection
};

// Orthogonal projection onto span{S_i (x) S_j} with S_i real symmetric. Any
// mixture of real product states lies in that span, so a positive residual
// rules out every real separable decomposition.
inline SpanProjection real_product_span_residual(const RealSymmetricOperator& op, std::size_t d) {
  if (d < 2 || op.dim() != d * d) fail(ErrorKind::Shape, "operator must act on two d-dimensional systems");
  const auto basis = real_symmetric_basis(d);
  const auto n = static_cast<Eigen::Index>(d * d);
  Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(n, n);
  for (const auto& si : basis) {
    for (const auto& sj : basis) {
      Eigen::MatrixXd b(n, n);
      for (Eigen::Index r = 0; r < si.rows(); ++r)
        for (Eigen::Index c = 0; c < si.cols(); ++c)
          b.block(r * sj.rows(), c * sj.cols(), sj.rows(), sj.cols()) = si(r, c) * sj;
      proj += op.matrix().cwiseProduct(b).sum() * b;
    }
  }
  const double residual = (op.matrix() - proj).norm();
  return {RealSymmetricOperator(std::move(proj)), residual};
}

}  // namespace qdf
