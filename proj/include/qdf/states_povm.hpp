#pragma once

// Density operators, POVMs, the Born rule, the minimal informationally
// complete POVM construction and dual-frame reconstruction.

#include <array>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qdf/opalg.hpp"

namespace qdf {

inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kPovmSumTol = 1e-9;
inline constexpr double kGramSingularTol = 1e-8;
inline constexpr double kDualCheckTol = 1e-8;
inline constexpr double kProbSumTol = 1e-9;

class DensityOperator {
 public:
  // Eigenvalues in [-kPsdTol, 0) are clipped to zero (and the trace restored);
  // anything more negative is rejected.
  explicit DensityOperator(HermitianOperator op) : op_(std::move(op)) {
    const double tr = op_.trace();
    if (std::abs(tr - 1.0) > kTraceTol) {
      fail(ErrorKind::Invariant, "density operator trace is " + std::to_string(tr));
    }
    const double lo = min_eigenvalue(op_);
    if (lo < -kPsdTol) {
      fail(ErrorKind::Invariant,
           "density operator has negative eigenvalue " + std::to_string(lo));
    }
    if (lo < 0.0) {
      auto clipped = spectral_map(eig_hermitian(op_), [](double v) { return v < 0.0 ? 0.0 : v; });
      op_ = clipped * (1.0 / clipped.trace());
    }
  }

  const HermitianOperator& op() const { return op_; }
  std::size_t dim() const { return op_.dim(); }
  const CMatrix& matrix() const { return op_.matrix(); }

  double purity() const { return trace_product(op_, op_); }

 private:
  HermitianOperator op_;
};

inline double trace_distance(const DensityOperator& a, const DensityOperator& b) {
  return trace_distance(a.op(), b.op());
}

struct BlochVector {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;

  double norm() const { return std::sqrt(s1 * s1 + s2 * s2 + s3 * s3); }
};

// rho = (I + S.sigma) / 2
inline DensityOperator density_from_bloch(const BlochVector& s) {
  if (!(s.norm() <= 1.0 + 1e-12)) {
    fail(ErrorKind::Invariant, "Bloch vector length " + std::to_string(s.norm()) + " exceeds 1");
  }
  auto op = 0.5 * (pauli(0) + s.s1 * pauli(1) + s.s2 * pauli(2) + s.s3 * pauli(3));
  return DensityOperator(std::move(op));
}

inline BlochVector bloch_of(const DensityOperator& rho) {
  if (rho.dim() != 2) fail(ErrorKind::Shape, "Bloch vector requires a qubit state");
  return {trace_product(rho.op(), pauli(1)), trace_product(rho.op(), pauli(2)),
          trace_product(rho.op(), pauli(3))};
}

inline DensityOperator pure_state(const Eigen::VectorXcd& v) {
  const double n = v.norm();
  if (n == 0.0) fail(ErrorKind::Argument, "zero state vector");
  return DensityOperator(outer(v / n));
}

// Haar-ish random state: normalized G G^dag for a complex Ginibre G with
// `rank` columns (rank = d gives a full-rank mixed state, 1 a pure state).
inline DensityOperator random_density(std::size_t d, std::mt19937_64& rng, std::size_t rank = 0) {
  if (rank == 0) rank = d;
  std::normal_distribution<double> normal;
  CMatrix g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(rank));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = cplx{normal(rng), normal(rng)};
  CMatrix m = g * g.adjoint();
  m /= m.trace().real();
  return DensityOperator(HermitianOperator(std::move(m)));
}

namespace detail {

inline void require_probabilities(std::span<const double> w, const char* what) {
  if (w.empty()) fail(ErrorKind::Argument, std::string(what) + " is empty");
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) fail(ErrorKind::Argument, std::string(what) + " has a negative entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    fail(ErrorKind::Normalization, std::string(what) + " sums to " + std::to_string(sum));
  }
}

}  // namespace detail

struct Ensemble {
  Ensemble(std::vector<double> weights, std::vector<DensityOperator> states)
      : weights(std::move(weights)), states(std::move(states)) {
    if (this->weights.size() != this->states.size()) {
      fail(ErrorKind::Shape, "ensemble weights and states differ in length");
    }
    detail::require_probabilities(this->weights, "ensemble weights");
  }

  std::vector<double> weights;
  std::vector<DensityOperator> states;
};

inline DensityOperator ensemble_to_density(const Ensemble& e) {
  const std::size_t d = e.states.front().dim();
  HermitianOperator acc = HermitianOperator::zero(d);
  for (std::size_t i = 0; i < e.states.size(); ++i) {
    if (e.states[i].dim() != d) fail(ErrorKind::Shape, "ensemble states differ in dimension");
    acc = acc + e.weights[i] * e.states[i].op();
  }
  return DensityOperator(std::move(acc));
}

class Povm {
 public:
  explicit Povm(std::vector<HermitianOperator> elements) : elements_(std::move(elements)) {
    if (elements_.empty()) fail(ErrorKind::Argument, "POVM has no elements");
    const std::size_t d = elements_.front().dim();
    HermitianOperator sum = HermitianOperator::zero(d);
    for (const auto& e : elements_) {
      if (e.dim() != d) fail(ErrorKind::Shape, "POVM elements differ in dimension");
      const double lo = min_eigenvalue(e);
      if (lo < -kPsdTol) {
        fail(ErrorKind::Invariant, "POVM element has negative eigenvalue " + std::to_string(lo));
      }
      sum = sum + e;
    }
    residual_ = max_abs_diff(sum, HermitianOperator::identity(d));
    if (residual_ > kPovmSumTol) {
      fail(ErrorKind::Invariant,
           "POVM elements do not sum to identity (residual " + std::to_string(residual_) + ")");
    }
  }

  std::size_t dim() const { return elements_.front().dim(); }
  std::size_t size() const { return elements_.size(); }
  const HermitianOperator& operator[](std::size_t i) const { return elements_[i]; }
  const std::vector<HermitianOperator>& elements() const { return elements_; }

  // max-entry distance between the element sum and the identity
  double identity_residual() const { return residual_; }

 private:
  std::vector<HermitianOperator> elements_;
  double residual_ = 0.0;
};

// p_a = tr(rho E_a); roundoff negatives clipped, then renormalized.
inline std::vector<double> born(const DensityOperator& rho, const Povm& povm) {
  if (rho.dim() != povm.dim()) fail(ErrorKind::Shape, "state and POVM dimensions differ");
  std::vector<double> p(povm.size());
  double sum = 0.0;
  for (std::size_t a = 0; a < povm.size(); ++a) {
    double v = trace_product(rho.op(), povm[a]);
    if (v < -kPsdTol) fail(ErrorKind::Invariant, "negative Born probability");
    if (v < 0.0) v = 0.0;
    p[a] = v;
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

enum class IcStep { Diagonal, RealSuperposition, ImaginarySuperposition };

struct IcProjectors {
  std::vector<HermitianOperator> projectors;
  std::vector<IcStep> steps;
};

// The d^2 rank-1 projectors over the computational basis:
//   |j><j|;  (|j>+|k>)(<j|+<k|)/2;  (|j>+i|k>)(<j|-i<k|)/2   for j < k.
inline IcProjectors minimal_ic_projectors(std::size_t d) {
  if (d < 2) fail(ErrorKind::Argument, "dimension must be >= 2");
  const auto n = static_cast<Eigen::Index>(d);
  IcProjectors out;
  auto push = [&](const Eigen::VectorXcd& v, IcStep s) {
    out.projectors.push_back(outer(v));
    out.steps.push_back(s);
  };
  for (Eigen::Index j = 0; j < n; ++j) {
    push(Eigen::VectorXcd::Unit(n, j), IcStep::Diagonal);
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k)
      push(r * (Eigen::VectorXcd::Unit(n, j) + Eigen::VectorXcd::Unit(n, k)),
           IcStep::RealSuperposition);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k)
      push(r * (Eigen::VectorXcd::Unit(n, j) + cplx{0.0, 1.0} * Eigen::VectorXcd::Unit(n, k)),
           IcStep::ImaginarySuperposition);
  return out;
}

// E_a = G^{-1/2} Pi_a G^{-1/2} with G = sum_a Pi_a.
inline Povm build_minimal_ic_povm(std::size_t d) {
  const auto proj = minimal_ic_projectors(d);
  HermitianOperator g = HermitianOperator::zero(d);
  for (const auto& p : proj.projectors) g = g + p;
  const CMatrix r = inv_sqrt(g).matrix();
  std::vector<HermitianOperator> elems;
  elems.reserve(proj.projectors.size());
  for (const auto& p : proj.projectors) elems.emplace_back(CMatrix(r * p.matrix() * r));
  return Povm(std::move(elems));
}

inline std::array<std::array<double, 3>, 4> tetrahedron_vertices() {
  const double s = 1.0 / std::sqrt(3.0);
  return {{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}}};
}

// E_a = |n_a><n_a| / 2 with n_a the vertices of a regular tetrahedron.
inline Povm tetrahedron_povm() {
  std::vector<HermitianOperator> elems;
  for (const auto& n : tetrahedron_vertices()) {
    elems.push_back(0.5 * density_from_bloch({n[0], n[1], n[2]}).op());
  }
  return Povm(std::move(elems));
}

// G_ab = tr(E_a E_b)
inline Eigen::MatrixXd gram_matrix(const std::vector<HermitianOperator>& ops) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b)
      g(a, b) = g(b, a) = trace_product(ops[static_cast<std::size_t>(a)],
                                        ops[static_cast<std::size_t>(b)]);
  return g;
}

struct GramSummary {
  std::size_t rank = 0;
  double min_singular = 0.0;
};

inline GramSummary gram_summary(const std::vector<HermitianOperator>& ops) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram_matrix(ops));
  const auto& sv = svd.singularValues();
  GramSummary s;
  s.min_singular = sv.minCoeff();
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kGramSingularTol) ++s.rank;
  return s;
}

// A spanning set of Hermitian d x d operators (matrix units and their
// symmetric / antisymmetric combinations).
inline std::vector<HermitianOperator> hermitian_basis(std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  std::vector<HermitianOperator> out;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j; k < n; ++k) {
      CMatrix m = CMatrix::Zero(n, n);
      m(j, k) = 1.0;
      m(k, j) = 1.0;
      out.emplace_back(std::move(m));
      if (j != k) {
        CMatrix a = CMatrix::Zero(n, n);
        a(j, k) = cplx{0.0, -1.0};
        a(k, j) = cplx{0.0, 1.0};
        out.emplace_back(std::move(a));
      }
    }
  return out;
}

// Duals D_a with A = sum_a tr(A E_a) D_a for every Hermitian A, obtained by
// inverting the Gram matrix of the POVM elements.
class DualFrame {
 public:
  explicit DualFrame(Povm povm) : povm_(std::move(povm)) {
    const std::size_t d = povm_.dim();
    const auto summary = gram_summary(povm_.elements());
    gram_min_singular_ = summary.min_singular;
    if (povm_.size() != d * d || summary.rank != d * d) {
      fail(ErrorKind::NotInformationallyComplete,
           "POVM is not minimal informationally complete: " + std::to_string(povm_.size()) +
               " elements, Gram rank " + std::to_string(summary.rank) + ", need " +
               std::to_string(d * d));
    }
    const Eigen::MatrixXd ginv = gram_matrix(povm_.elements()).inverse();
    const auto n = static_cast<Eigen::Index>(povm_.size());
    for (Eigen::Index a = 0; a < n; ++a) {
      CMatrix acc = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (Eigen::Index b = 0; b < n; ++b) acc += ginv(a, b) * povm_[static_cast<std::size_t>(b)].matrix();
      duals_.emplace_back(std::move(acc));
    }
    for (const auto& a : hermitian_basis(d)) {
      HermitianOperator rec = HermitianOperator::zero(d);
      for (std::size_t k = 0; k < duals_.size(); ++k)
        rec = rec + trace_product(a, povm_[k]) * duals_[k];
      if (max_abs_diff(rec, a) > kDualCheckTol) {
        fail(ErrorKind::NotInformationallyComplete, "dual frame fails reconstruction check");
      }
    }
  }

  const Povm& povm() const { return povm_; }
  const std::vector<HermitianOperator>& duals() const { return duals_; }
  std::size_t dim() const { return povm_.dim(); }
  std::size_t size() const { return duals_.size(); }
  double gram_min_singular() const { return gram_min_singular_; }

 private:
  Povm povm_;
  std::vector<HermitianOperator> duals_;
  double gram_min_singular_ = 0.0;
};

inline DualFrame dual_frame(const Povm& povm) { return DualFrame(povm); }

// The unique Hermitian A with tr(A E_a) = p_a. Not necessarily PSD.
inline HermitianOperator reconstruct_operator(std::span<const double> p, const DualFrame& frame) {
  if (p.size() != frame.size()) {
    fail(ErrorKind::Shape, "probability list length " + std::to_string(p.size()) +
                               " does not match frame size " + std::to_string(frame.size()));
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  if (std::abs(sum - 1.0) > kProbSumTol) {
    fail(ErrorKind::Normalization, "probabilities sum to " + std::to_string(sum));
  }
  HermitianOperator acc = HermitianOperator::zero(frame.dim());
  for (std::size_t a = 0; a < p.size(); ++a) acc = acc + p[a] * frame.duals()[a];
  return acc;
}

}  // namespace qdf
