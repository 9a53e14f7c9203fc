#pragma once

// Multi-system states: permutation symmetry, marginals and symmetric
// extendibility.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdf/states_povm.hpp"

namespace qdf {

inline constexpr std::size_t kMaxSymmetrizeSystems = 8;
inline constexpr std::size_t kDeskScaleDim = 4096;

struct MultiSystemState {
  MultiSystemState(SubsystemShape shape, DensityOperator state)
      : shape(shape), state(std::move(state)) {
    if (this->state.dim() != shape.total_dim()) {
      fail(ErrorKind::Shape, "state dimension does not match d^N");
    }
  }

  std::size_t local_dim() const { return shape.local_dim; }
  std::size_t count() const { return shape.count; }
  const HermitianOperator& op() const { return state.op(); }

  SubsystemShape shape;
  DensityOperator state;
};

namespace detail {

inline std::vector<std::size_t> adjacent_swap(std::size_t n, std::size_t k) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::swap(p[k], p[k + 1]);
  return p;
}

inline double symmetry_defect(const HermitianOperator& op, const SubsystemShape& shape) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < shape.count; ++k) {
    worst = std::max(worst,
                     max_abs_diff(permute_subsystems(op, shape, adjacent_swap(shape.count, k)), op));
  }
  return worst;
}

inline HermitianOperator symmetrize_operator(const HermitianOperator& op, const SubsystemShape& shape) {
  if (shape.count > kMaxSymmetrizeSystems) {
    fail(ErrorKind::Resource, "symmetrization over " + std::to_string(shape.count) +
                                  "! permutations is out of reach");
  }
  std::vector<std::size_t> perm(shape.count);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  CMatrix acc = CMatrix::Zero(op.matrix().rows(), op.matrix().cols());
  std::size_t n_perm = 0;
  do {
    acc += permute_subsystems(op, shape, perm).matrix();
    ++n_perm;
  } while (std::next_permutation(perm.begin(), perm.end()));
  acc /= static_cast<double>(n_perm);
  return HermitianOperator(std::move(acc));
}

inline std::vector<std::size_t> first_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace detail

// Invariance under the adjacent transpositions, which generate S_N.
inline bool is_symmetric(const MultiSystemState& s, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::Argument, "tolerance must be positive");
  return detail::symmetry_defect(s.op(), s.shape) <= tol;
}

inline MultiSystemState symmetrize(const MultiSystemState& s) {
  return {s.shape, DensityOperator(detail::symmetrize_operator(s.op(), s.shape))};
}

// Keeps the first keep_n subsystems.
inline MultiSystemState marginal(const MultiSystemState& s, std::size_t keep_n) {
  if (keep_n < 1 || keep_n > s.count()) {
    fail(ErrorKind::Argument, "marginal size must lie in 1..N");
  }
  if (keep_n == s.count()) return s;
  return {SubsystemShape(s.local_dim(), keep_n),
          DensityOperator(partial_trace(s.op(), s.shape, detail::first_n(keep_n)))};
}

// (|000> + |111>) / sqrt(2)
inline MultiSystemState ghz_state() {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
  v(0) = v(7) = 1.0 / std::sqrt(2.0);
  return {SubsystemShape(2, 3), pure_state(v)};
}

enum class ExtensionVerdict { Feasible, Infeasible, Undetermined };

inline const char* to_string(ExtensionVerdict v) {
  switch (v) {
    case ExtensionVerdict::Feasible: return "feasible";
    case ExtensionVerdict::Infeasible: return "infeasible";
    case ExtensionVerdict::Undetermined: return "undetermined";
  }
  return "?";
}

struct ExtensionReport {
  ExtensionVerdict verdict = ExtensionVerdict::Undetermined;
  double residual = 0.0;
  int iterations = 0;
  std::optional<MultiSystemState> certificate;
  std::string reason;
};

struct ExtensionOptions {
  int max_iter = 5000;
  double tol = 1e-7;
  int stall_window = 200;
};

// A pure N-system state can only extend as state (x) tau, which is symmetric
// only when state = sigma^{(x)N} for a pure sigma. Returns Infeasible when
// that is ruled out, nothing when the shortcut does not decide.
inline std::optional<ExtensionVerdict> pure_marginal_shortcut(const MultiSystemState& s,
                                                              std::size_t extra_m) {
  if (extra_m < 1) fail(ErrorKind::Argument, "extension size must be >= 1");
  if (max_eigenvalue(s.op()) < 1.0 - 1e-9) return std::nullopt;
  if (s.count() == 1) return std::nullopt;
  const auto single = partial_trace(s.op(), s.shape, {0});
  if (trace_product(single, single) >= 1.0 - 1e-9 &&
      max_abs_diff(tensor_power(single, s.count()), s.op()) <= 1e-8) {
    return std::nullopt;
  }
  return ExtensionVerdict::Infeasible;
}

namespace detail {

// Orthonormal basis of the operators on (C^d)^{(x)n} that commute with every
// subsystem permutation: B_o is the normalized indicator of an orbit of
// matrix positions (r, c) under simultaneous relabelling of bra and ket.
class SymmetricOperatorBasis {
 public:
  explicit SymmetricOperatorBasis(const SubsystemShape& shape) : total_(shape.total_dim()) {
    const std::size_t d = shape.local_dim;
    std::vector<std::size_t> rd(shape.count), cd(shape.count), key(shape.count);
    std::map<std::vector<std::size_t>, std::size_t> ids;
    for (std::size_t r = 0; r < total_; ++r) {
      to_digits(r, d, rd);
      for (std::size_t c = 0; c < total_; ++c) {
        to_digits(c, d, cd);
        for (std::size_t k = 0; k < shape.count; ++k) key[k] = rd[k] * d + cd[k];
        std::sort(key.begin(), key.end());
        auto [it, inserted] = ids.try_emplace(key, ids.size());
        if (inserted) members_.emplace_back();
        members_[it->second].push_back(r * total_ + c);
      }
    }
  }

  std::size_t size() const { return members_.size(); }
  std::size_t total_dim() const { return total_; }
  const std::vector<std::size_t>& members(std::size_t o) const { return members_[o]; }

  Eigen::VectorXcd coordinates(const CMatrix& x) const {
    Eigen::VectorXcd c(static_cast<Eigen::Index>(size()));
    for (std::size_t o = 0; o < size(); ++o) {
      cplx s = 0.0;
      for (auto f : members_[o]) s += x.data()[f];
      c(static_cast<Eigen::Index>(o)) = s / std::sqrt(static_cast<double>(members_[o].size()));
    }
    return c;
  }

  CMatrix assemble(const Eigen::VectorXcd& c) const {
    const auto n = static_cast<Eigen::Index>(total_);
    CMatrix x(n, n);
    for (std::size_t o = 0; o < size(); ++o) {
      const cplx v = c(static_cast<Eigen::Index>(o)) / std::sqrt(static_cast<double>(members_[o].size()));
      for (auto f : members_[o]) x.data()[f] = v;
    }
    return x;
  }

 private:
  std::size_t total_;
  std::vector<std::vector<std::size_t>> members_;
};

inline HermitianOperator project_psd(const HermitianOperator& y) {
  return spectral_map(eig_hermitian(y), [](double v) { return v < 0.0 ? 0.0 : v; });
}

// Orthonormal basis (columns) of the only subspace a PSD operator on N+M
// systems can live in if every N-subset marginal equals `small`: for v in
// ker(small) placed on any N positions, X (v (x) I) = 0.
inline CMatrix extension_support(const HermitianOperator& small, std::size_t n,
                                 const SubsystemShape& big) {
  const auto e = eig_hermitian(small);
  const Eigen::Index dim_small = e.values.size();
  CMatrix ker_proj = CMatrix::Zero(dim_small, dim_small);
  for (Eigen::Index k = 0; k < dim_small; ++k)
    if (e.values(k) <= 1e-10) ker_proj += e.vectors.col(k) * e.vectors.col(k).adjoint();
  const auto total = static_cast<Eigen::Index>(big.total_dim());
  if (max_abs(ker_proj) == 0.0) return CMatrix::Identity(total, total);

  const std::size_t rest = big.total_dim() / static_cast<std::size_t>(dim_small);
  const HermitianOperator placed(kron(ker_proj, CMatrix::Identity(static_cast<Eigen::Index>(rest),
                                                                  static_cast<Eigen::Index>(rest))));
  // Sum over all N-subsets S of the kernel projector moved onto S.
  CMatrix forbidden = CMatrix::Zero(total, total);
  std::vector<bool> chosen(big.count, false);
  std::fill(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(n), true);
  do {
    std::vector<std::size_t> perm(big.count);
    std::size_t in = 0, out = n;
    for (std::size_t pos = 0; pos < big.count; ++pos) {
      if (chosen[pos]) perm[in++] = pos;
      else perm[out++] = pos;
    }
    forbidden += permute_subsystems(placed, big, perm).matrix();
  } while (std::prev_permutation(chosen.begin(), chosen.end()));

  const auto f = eig_hermitian(HermitianOperator(std::move(forbidden)));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < f.values.size(); ++k)
    if (f.values(k) <= 1e-9) keep.push_back(k);
  CMatrix basis(total, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) basis.col(static_cast<Eigen::Index>(i)) = f.vectors.col(keep[i]);
  return basis;
}

}  // namespace detail

// Alternating projections between the PSD cone and the affine set of
// symmetric operators on N+M systems whose N-system marginal is the input.
inline ExtensionReport extension_feasible(const MultiSystemState& s, std::size_t extra_m,
                                          const ExtensionOptions& opt = {}) {
  if (extra_m < 1) fail(ErrorKind::Argument, "extension size must be >= 1");
  const std::size_t n = s.count();
  const std::size_t d = s.local_dim();
  const SubsystemShape big(d, n + extra_m);
  if (big.total_dim() > kDeskScaleDim) {
    fail(ErrorKind::Resource, "extension dimension " + std::to_string(big.total_dim()) +
                                  " exceeds " + std::to_string(kDeskScaleDim));
  }

  ExtensionReport report;
  if (auto v = pure_marginal_shortcut(s, extra_m)) {
    report.verdict = *v;
    report.reason = "pure-marginal shortcut: a pure state that is not a tensor power has "
                    "only product extensions, none of which is symmetric";
    return report;
  }
  const double defect = detail::symmetry_defect(s.op(), s.shape);
  if (defect > opt.tol) {
    report.verdict = ExtensionVerdict::Infeasible;
    report.residual = defect;
    report.reason = "input is not permutation symmetric";
    return report;
  }

  const detail::SymmetricOperatorBasis basis(big);
  const std::size_t small_dim = s.shape.total_dim();
  const std::size_t rest_dim = big.total_dim() / small_dim;

  // Column o of A: vec(tr_M B_o).
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(small_dim * small_dim),
                                              static_cast<Eigen::Index>(basis.size()));
  const std::size_t total = big.total_dim();
  for (std::size_t o = 0; o < basis.size(); ++o) {
    const double w = 1.0 / std::sqrt(static_cast<double>(basis.members(o).size()));
    for (auto f : basis.members(o)) {
      const std::size_t r = f / total, c = f % total;
      if (r % rest_dim == c % rest_dim) {
        a(static_cast<Eigen::Index>((r / rest_dim) * small_dim + c / rest_dim),
          static_cast<Eigen::Index>(o)) += w;
      }
    }
  }
  Eigen::VectorXcd b(static_cast<Eigen::Index>(small_dim * small_dim));
  for (std::size_t i = 0; i < small_dim * small_dim; ++i) b(static_cast<Eigen::Index>(i)) = s.op().matrix().data()[i];
  const Eigen::MatrixXcd a_pinv = a.completeOrthogonalDecomposition().pseudoInverse();

  auto project_affine = [&](const HermitianOperator& x) {
    Eigen::VectorXcd c = basis.coordinates(x.matrix());
    c -= a_pinv * (a * c - b);
    return HermitianOperator(basis.assemble(c));
  };
  auto marginal_residual = [&](const HermitianOperator& x) {
    return max_abs_diff(partial_trace(x, big, detail::first_n(n)), s.op());
  };

  // Projection onto PSD operators supported on the admissible subspace.
  const CMatrix support = detail::extension_support(s.op(), n, big);
  if (support.cols() == 0) {
    report.verdict = ExtensionVerdict::Infeasible;
    report.reason = "no nonzero PSD operator is compatible with the marginal's kernel";
    return report;
  }
  auto project_cone = [&](const HermitianOperator& y) {
    if (support.cols() == support.rows()) return detail::project_psd(y);
    const HermitianOperator compressed(CMatrix(support.adjoint() * y.matrix() * support));
    return HermitianOperator(
        CMatrix(support * detail::project_psd(compressed).matrix() * support.adjoint()));
  };

  HermitianOperator x = project_affine(
      tensor(s.op(), HermitianOperator::identity(rest_dim) * (1.0 / static_cast<double>(rest_dim))));
  if (marginal_residual(x) > opt.tol) {
    report.verdict = ExtensionVerdict::Infeasible;
    report.residual = marginal_residual(x);
    report.reason = "no symmetric operator has the requested marginal";
    return report;
  }

  std::vector<double> history;
  for (int it = 1; it <= opt.max_iter; ++it) {
    HermitianOperator z = project_cone(x);
    z = z * (1.0 / z.trace());
    const double res = marginal_residual(z);
    report.iterations = it;
    report.residual = res;
    if (res <= opt.tol && detail::symmetry_defect(z, big) <= opt.tol) {
      report.verdict = ExtensionVerdict::Feasible;
      report.certificate.emplace(big, DensityOperator(std::move(z)));
      report.reason = "alternating projections converged";
      return report;
    }
    history.push_back(res);
    const auto w = static_cast<std::size_t>(opt.stall_window);
    if (history.size() > w && res > 10.0 * opt.tol) {
      const double before = history[history.size() - 1 - w];
      if (before - res <= 1e-6 * before) {
        report.verdict = ExtensionVerdict::Infeasible;
        report.reason = "residual stalled above 10 tol for " + std::to_string(w) + " iterations";
        return report;
      }
    }
    x = project_affine(z);
  }
  report.reason = "iteration budget exhausted";
  return report;
}

}  // namespace qdf
