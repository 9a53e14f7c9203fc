#pragma once

// Dense complex operator algebra on H_d and its tensor powers.
//
// Subsystem indices are zero-based; subsystem 0 is the leftmost
// (slowest-varying) tensor factor, so basis state |i_0 i_1 ... i_{N-1}>
// has flat index sum_k i_k d^(N-1-k).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "qdf/errors.hpp"

namespace qdf {

using cplx = std::complex<double>;
using CMatrix =
    Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RVector = Eigen::VectorXd;

inline constexpr double kHermTol = 1e-10;
inline constexpr double kPdTol = 1e-12;

inline double max_abs(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

// Throws Overflow when the product does not fit in size_t.
inline std::size_t checked_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
    fail(ErrorKind::Overflow, "dimension overflow: " + std::to_string(a) +
                                  " * " + std::to_string(b));
  }
  return a * b;
}

inline std::size_t checked_pow(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r = checked_mul(r, base);
  return r;
}

class HermitianOperator {
 public:
  // Symmetrizes drift up to kHermTol (max-entry); rejects anything larger.
  explicit HermitianOperator(CMatrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
      fail(ErrorKind::Shape, "Hermitian operator must be a non-empty square matrix");
    }
    if (!m_.allFinite()) {
      fail(ErrorKind::Invariant, "operator has non-finite entries");
    }
    const double asym = max_abs(m_ - m_.adjoint());
    if (asym > kHermTol) {
      fail(ErrorKind::Invariant,
           "operator is not Hermitian (max |A - A^dag| = " + std::to_string(asym) + ")");
    }
    CMatrix sym = (m_ + m_.adjoint()) * 0.5;
    m_ = std::move(sym);
  }

  static HermitianOperator identity(std::size_t d) {
    return HermitianOperator(CMatrix::Identity(static_cast<Eigen::Index>(d),
                                               static_cast<Eigen::Index>(d)));
  }

  static HermitianOperator zero(std::size_t d) {
    return HermitianOperator(CMatrix::Zero(static_cast<Eigen::Index>(d),
                                           static_cast<Eigen::Index>(d)));
  }

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const CMatrix& matrix() const { return m_; }
  cplx operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }

  HermitianOperator operator+(const HermitianOperator& o) const {
    require_same_dim(o);
    return HermitianOperator(m_ + o.m_);
  }
  HermitianOperator operator-(const HermitianOperator& o) const {
    require_same_dim(o);
    return HermitianOperator(m_ - o.m_);
  }
  HermitianOperator operator*(double s) const { return HermitianOperator(m_ * s); }
  friend HermitianOperator operator*(double s, const HermitianOperator& a) { return a * s; }

 private:
  void require_same_dim(const HermitianOperator& o) const {
    if (o.dim() != dim()) fail(ErrorKind::Shape, "operator dimension mismatch");
  }

  CMatrix m_;
};

// tr(A B) for Hermitian A, B; real up to roundoff.
inline double trace_product(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::Shape, "operator dimension mismatch");
  // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
  return a.matrix().cwiseProduct(b.matrix().conjugate()).sum().real();
}

inline double max_abs_diff(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() != b.dim()) fail(ErrorKind::Shape, "operator dimension mismatch");
  return max_abs(a.matrix() - b.matrix());
}

inline double frobenius_norm(const HermitianOperator& a) { return a.matrix().norm(); }

// sigma_0 = I, sigma_1..3 the Pauli matrices.
inline HermitianOperator pauli(int k) {
  const cplx i{0.0, 1.0};
  CMatrix m(2, 2);
  switch (k) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -i, i, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: fail(ErrorKind::Argument, "Pauli index must be 0..3");
  }
  return HermitianOperator(std::move(m));
}

struct SubsystemShape {
  SubsystemShape(std::size_t local_dim, std::size_t count)
      : local_dim(local_dim), count(count) {
    if (local_dim < 2) fail(ErrorKind::Argument, "local dimension must be >= 2");
    if (count < 1) fail(ErrorKind::Argument, "subsystem count must be >= 1");
    total = checked_pow(local_dim, count);
  }

  std::size_t total_dim() const { return total; }

  std::size_t local_dim;
  std::size_t count;

 private:
  std::size_t total;
};

// Kronecker product of dense matrices.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  checked_mul(static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows()));
  checked_mul(static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(b.cols()));
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline HermitianOperator tensor(const HermitianOperator& a, const HermitianOperator& b) {
  return HermitianOperator(kron(a.matrix(), b.matrix()));
}

inline HermitianOperator tensor_power(const HermitianOperator& a, std::size_t n) {
  if (n < 1) fail(ErrorKind::Argument, "tensor power must be >= 1");
  checked_pow(a.dim(), n);
  HermitianOperator out = a;
  for (std::size_t k = 1; k < n; ++k) out = tensor(out, a);
  return out;
}

namespace detail {

inline void require_shape(const HermitianOperator& op, const SubsystemShape& shape) {
  if (op.dim() != shape.total_dim()) {
    fail(ErrorKind::Shape, "operator dimension " + std::to_string(op.dim()) +
                               " does not match d^N = " +
                               std::to_string(shape.total_dim()));
  }
}

// digits[k] of a flat index, subsystem 0 most significant.
inline void to_digits(std::size_t flat, std::size_t d, std::vector<std::size_t>& digits) {
  for (std::size_t k = digits.size(); k-- > 0;) {
    digits[k] = flat % d;
    flat /= d;
  }
}

}  // namespace detail

// Traces out every subsystem not listed in `keep`; kept factors retain their
// relative order.
inline HermitianOperator partial_trace(const HermitianOperator& op,
                                       const SubsystemShape& shape,
                                       std::vector<std::size_t> keep) {
  detail::require_shape(op, shape);
  if (keep.empty()) fail(ErrorKind::Shape, "keep set must be nonempty");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end() ||
      keep.back() >= shape.count) {
    fail(ErrorKind::Shape, "keep set must hold distinct subsystem indices < N");
  }
  const std::size_t d = shape.local_dim;
  const std::size_t n_sys = shape.count;
  std::vector<bool> kept(n_sys, false);
  for (auto k : keep) kept[k] = true;

  const std::size_t out_dim = checked_pow(d, keep.size());
  const std::size_t total = shape.total_dim();

  // Split every flat index into (kept part, traced part) once.
  std::vector<std::size_t> kept_idx(total), traced_idx(total), digits(n_sys);
  for (std::size_t f = 0; f < total; ++f) {
    detail::to_digits(f, d, digits);
    std::size_t ki = 0, ti = 0;
    for (std::size_t k = 0; k < n_sys; ++k) {
      if (kept[k]) ki = ki * d + digits[k];
      else ti = ti * d + digits[k];
    }
    kept_idx[f] = ki;
    traced_idx[f] = ti;
  }

  const auto od = static_cast<Eigen::Index>(out_dim);
  CMatrix out = CMatrix::Zero(od, od);
  const CMatrix& m = op.matrix();
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t c = 0; c < total; ++c) {
      if (traced_idx[r] == traced_idx[c]) {
        out(static_cast<Eigen::Index>(kept_idx[r]), static_cast<Eigen::Index>(kept_idx[c])) +=
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  return HermitianOperator(std::move(out));
}

inline bool is_permutation_of_range(const std::vector<std::size_t>& perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

inline std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

// Moves tensor factor k to position perm[k], on both bra and ket sides:
// permute(A (x) B, {1, 0}) = B (x) A.
inline HermitianOperator permute_subsystems(const HermitianOperator& op,
                                            const SubsystemShape& shape,
                                            const std::vector<std::size_t>& perm) {
  detail::require_shape(op, shape);
  if (!is_permutation_of_range(perm, shape.count)) {
    fail(ErrorKind::Argument, "invalid permutation of subsystems");
  }
  const std::size_t d = shape.local_dim;
  const std::size_t n_sys = shape.count;
  const std::size_t total = shape.total_dim();

  std::vector<std::size_t> target(total), digits(n_sys), moved(n_sys);
  for (std::size_t f = 0; f < total; ++f) {
    detail::to_digits(f, d, digits);
    for (std::size_t k = 0; k < n_sys; ++k) moved[perm[k]] = digits[k];
    std::size_t t = 0;
    for (std::size_t k = 0; k < n_sys; ++k) t = t * d + moved[k];
    target[f] = t;
  }
  const auto n = static_cast<Eigen::Index>(total);
  CMatrix out(n, n);
  const CMatrix& m = op.matrix();
  for (std::size_t r = 0; r < total; ++r) {
    for (std::size_t c = 0; c < total; ++c) {
      out(static_cast<Eigen::Index>(target[r]), static_cast<Eigen::Index>(target[c])) =
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    }
  }
  return HermitianOperator(std::move(out));
}

struct EigenDecomposition {
  RVector values;   // descending
  CMatrix vectors;  // orthonormal columns, values(k) <-> vectors.col(k)
};

// Eigenvalues sorted descending. Each eigenvector is rephased so that its
// largest-magnitude component (first one on ties) is real and nonnegative.
inline EigenDecomposition eig_hermitian(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix());
  if (solver.info() != Eigen::Success) {
    fail(ErrorKind::Invariant, "Hermitian eigensolver did not converge");
  }
  const Eigen::Index n = op.matrix().rows();
  EigenDecomposition out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = n - 1 - k;
    out.values(k) = solver.eigenvalues()(src);
    auto col = solver.eigenvectors().col(src);
    Eigen::Index best = 0;
    double best_mag = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mag = std::abs(col(i));
      if (mag > best_mag + 1e-12) {
        best_mag = mag;
        best = i;
      }
    }
    const cplx phase = best_mag > 0.0 ? std::conj(col(best)) / best_mag : cplx{1.0, 0.0};
    out.vectors.col(k) = col * phase;
  }
  return out;
}

inline double min_eigenvalue(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

inline double max_eigenvalue(const HermitianOperator& op) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.matrix(), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(solver.eigenvalues().size() - 1);
}

// V f(diag) V^dag for a real spectral function f.
template <typename F>
HermitianOperator spectral_map(const EigenDecomposition& e, F&& f) {
  RVector mapped = e.values.unaryExpr(f);
  CMatrix m = e.vectors * mapped.cast<cplx>().asDiagonal() * e.vectors.adjoint();
  return HermitianOperator(std::move(m));
}

inline HermitianOperator inv_sqrt(const HermitianOperator& op) {
  const auto e = eig_hermitian(op);
  const double lo = e.values.minCoeff();
  if (lo <= kPdTol) {
    fail(ErrorKind::NotPositiveDefinite,
         "operator is not positive definite (min eigenvalue " + std::to_string(lo) + ")");
  }
  return spectral_map(e, [](double v) { return 1.0 / std::sqrt(v); });
}

// Half the sum of absolute eigenvalues of a - b.
inline double trace_distance(const HermitianOperator& a, const HermitianOperator& b) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver((a - b).matrix(), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

// |v><v| for a (not necessarily normalized) column vector.
inline HermitianOperator outer(const Eigen::VectorXcd& v) {
  CMatrix m = v * v.adjoint();
  return HermitianOperator(std::move(m));
}

}  // namespace qdf
