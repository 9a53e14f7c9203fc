#pragma once

// The de Finetti pipeline: discrete mixtures of product states, the outcome
// statistics they induce under a tensor-power IC-POVM, reconstruction of the
// joint state from those statistics, and the negative-eigenvalue witness.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "qdf/exchange.hpp"

namespace qdf {

inline constexpr std::size_t kMaxSequenceTable = std::size_t{1} << 20;

struct MixingEnsemble {
  MixingEnsemble(std::vector<double> weights, std::vector<DensityOperator> states)
      : weights(std::move(weights)), states(std::move(states)) {
    if (this->weights.size() != this->states.size()) {
      fail(ErrorKind::Shape, "mixing weights and states differ in length");
    }
    detail::require_probabilities(this->weights, "mixing weights");
    for (const auto& s : this->states) {
      if (s.dim() != this->states.front().dim()) {
        fail(ErrorKind::Shape, "mixing states differ in dimension");
      }
    }
  }

  std::size_t dim() const { return states.front().dim(); }

  std::vector<double> weights;
  std::vector<DensityOperator> states;
};

// sum_i w_i A_i^{(x)n}; the A_i need not be positive.
inline HermitianOperator mix_product_operators(std::span<const double> weights,
                                               const std::vector<HermitianOperator>& ops,
                                               std::size_t n) {
  if (weights.size() != ops.size() || ops.empty()) {
    fail(ErrorKind::Shape, "weights and operators differ in length");
  }
  const std::size_t d = ops.front().dim();
  if (d < 2) fail(ErrorKind::Argument, "local dimension must be >= 2");
  if (SubsystemShape(d, n).total_dim() > kDeskScaleDim) {
    fail(ErrorKind::Resource, "d^n exceeds " + std::to_string(kDeskScaleDim));
  }
  CMatrix acc = CMatrix::Zero(static_cast<Eigen::Index>(checked_pow(d, n)),
                              static_cast<Eigen::Index>(checked_pow(d, n)));
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].dim() != d) fail(ErrorKind::Shape, "operators differ in dimension");
    if (weights[i] == 0.0) continue;
    acc += weights[i] * tensor_power(ops[i], n).matrix();
  }
  return HermitianOperator(std::move(acc));
}

inline MultiSystemState mix_product_states(const MixingEnsemble& ens, std::size_t n) {
  std::vector<HermitianOperator> ops;
  for (const auto& s : ens.states) ops.push_back(s.op());
  return {SubsystemShape(ens.dim(), n),
          DensityOperator(mix_product_operators(ens.weights, ops, n))};
}

// Probabilities of every outcome sequence (a_1..a_N), lexicographic with
// trial 1 most significant.
struct SequenceDistribution {
  std::size_t d2 = 0;
  std::size_t n_trials = 0;
  std::vector<double> probs;

  std::size_t index(std::span<const std::size_t> seq) const {
    if (seq.size() != n_trials) fail(ErrorKind::Shape, "sequence length mismatch");
    std::size_t f = 0;
    for (auto a : seq) f = f * d2 + a;
    return f;
  }

  double operator()(std::span<const std::size_t> seq) const { return probs[index(seq)]; }
};

namespace detail {

// tr(op E_{a_1} (x) ... (x) E_{a_m}) for every sequence, by contracting one
// subsystem at a time: op -> tr_1[(E_a (x) I) op].
inline void contract_sequences(const CMatrix& op, std::size_t m, const Povm& povm,
                               std::vector<double>& out) {
  const Eigen::Index d = static_cast<Eigen::Index>(povm.dim());
  if (m == 0) {
    out.push_back(op(0, 0).real());
    return;
  }
  const Eigen::Index rest = op.rows() / d;
  for (std::size_t a = 0; a < povm.size(); ++a) {
    const CMatrix& e = povm[a].matrix();
    CMatrix sub = CMatrix::Zero(rest, rest);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (e(j, i) != cplx{0.0, 0.0}) sub += e(j, i) * op.block(i * rest, j * rest, rest, rest);
    contract_sequences(sub, m - 1, povm, out);
  }
}

inline std::size_t sequence_table_size(std::size_t d2, std::size_t n) {
  const std::size_t size = checked_pow(d2, n);
  if (size > kMaxSequenceTable) {
    fail(ErrorKind::Resource, "sequence table of " + std::to_string(size) + " entries is too large");
  }
  return size;
}

}  // namespace detail

// tr(op E_{a_1} (x) ... (x) E_{a_n}) for an arbitrary operator on d^n; entries
// may be negative or exceed one when op is not a state.
inline std::vector<double> sequence_table(const HermitianOperator& op, std::size_t n,
                                          const Povm& povm) {
  const SubsystemShape shape(povm.dim(), n);
  detail::require_shape(op, shape);
  std::vector<double> out;
  out.reserve(detail::sequence_table_size(povm.size(), n));
  detail::contract_sequences(op.matrix(), n, povm, out);
  return out;
}

inline SequenceDistribution induced_sequence_distribution(const MultiSystemState& s,
                                                          const Povm& povm) {
  if (povm.dim() != s.local_dim()) fail(ErrorKind::Shape, "POVM and subsystem dimensions differ");
  SequenceDistribution out{povm.size(), s.count(), sequence_table(s.op(), s.count(), povm)};
  for (double& p : out.probs) {
    if (p < -kPsdTol) fail(ErrorKind::Invariant, "negative sequence probability");
    if (p < 0.0) p = 0.0;
  }
  return out;
}

namespace detail {

inline CMatrix expand_duals(std::span<const double> table, std::size_t m, const DualFrame& frame) {
  const std::size_t d2 = frame.size();
  const std::size_t stride = table.size() / d2;
  CMatrix acc;
  for (std::size_t a = 0; a < d2; ++a) {
    const CMatrix& dual = frame.duals()[a].matrix();
    CMatrix term = m == 1 ? CMatrix(table[a] * dual)
                          : kron(dual, expand_duals(table.subspan(a * stride, stride), m - 1, frame));
    if (a == 0) acc = std::move(term);
    else acc += term;
  }
  return acc;
}

}  // namespace detail

// sum_a p(a) D_{a_1} (x) ... (x) D_{a_n}: the unique operator whose
// tensor-power POVM statistics are `table`.
inline HermitianOperator reconstruct_multisystem_operator(std::span<const double> table,
                                                          std::size_t n, const DualFrame& frame) {
  if (n < 1) fail(ErrorKind::Argument, "number of trials must be >= 1");
  if (table.size() != detail::sequence_table_size(frame.size(), n)) {
    fail(ErrorKind::Shape, "sequence table has " + std::to_string(table.size()) +
                               " entries, expected " + std::to_string(checked_pow(frame.size(), n)));
  }
  if (SubsystemShape(frame.dim(), n).total_dim() > kDeskScaleDim) {
    fail(ErrorKind::Resource, "d^n exceeds " + std::to_string(kDeskScaleDim));
  }
  return HermitianOperator(detail::expand_duals(table, n, frame));
}

inline MultiSystemState reconstruct_multisystem(const SequenceDistribution& seq,
                                                const DualFrame& frame) {
  if (seq.d2 != frame.size()) fail(ErrorKind::Shape, "outcome count does not match the frame");
  return {SubsystemShape(frame.dim(), seq.n_trials),
          DensityOperator(reconstruct_multisystem_operator(seq.probs, seq.n_trials, frame))};
}

struct Witness {
  HermitianOperator pi_tilde;  // |psi><psi| for the most negative eigenvalue
  HermitianOperator pi;        // I - pi_tilde
  double lambda;               // magnitude of that eigenvalue
};

// For a trace-one Hermitian A with eigenvalue -lambda < 0, the two-outcome
// measurement {pi_tilde, pi} has tr(A pi) = 1 + lambda.
inline Witness witness_from_operator(const HermitianOperator& a) {
  if (std::abs(a.trace() - 1.0) > kProbSumTol) {
    fail(ErrorKind::Normalization, "witness operator must have unit trace");
  }
  const auto e = eig_hermitian(a);
  const Eigen::Index n = e.values.size();
  const double lo = e.values(n - 1);
  if (lo >= -kPsdTol) {
    fail(ErrorKind::NotAWitness, "operator has no negative eigenvalue");
  }
  // first eigenvector (in descending order) attaining the minimum
  Eigen::Index pick = n - 1;
  while (pick > 0 && e.values(pick - 1) <= lo + 1e-12) --pick;
  auto pi_tilde = outer(e.vectors.col(pick));
  auto pi = HermitianOperator::identity(a.dim()) - pi_tilde;
  return {std::move(pi_tilde), std::move(pi), -lo};
}

struct GrowthPoint {
  std::size_t n;
  double value;
};

struct GrowthReport {
  std::vector<GrowthPoint> points;
  std::optional<std::size_t> first_exceeding;  // first N with value > 1
};

// value(N) = sum_i w_i [tr(A_i pi)]^N = tr(rho^(N) pi^{(x)N}), for even N.
inline GrowthReport illegal_probability_growth(std::span<const double> weights,
                                               const std::vector<HermitianOperator>& ops,
                                               const HermitianOperator& pi,
                                               std::span<const std::size_t> n_list) {
  if (weights.size() != ops.size()) fail(ErrorKind::Shape, "weights and operators differ in length");
  detail::require_probabilities(weights, "mixing weights");
  for (auto n : n_list) {
    if (n % 2 != 0 || n == 0) {
      fail(ErrorKind::Argument, "growth is only sign-definite for even N >= 2; got " + std::to_string(n));
    }
  }
  std::vector<double> t;
  for (const auto& a : ops) t.push_back(trace_product(a, pi));
  GrowthReport out;
  for (auto n : n_list) {
    double v = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) v += weights[i] * std::pow(t[i], static_cast<double>(n));
    out.points.push_back({n, v});
    if (!out.first_exceeding && v > 1.0) out.first_exceeding = n;
  }
  return out;
}

struct WitnessReport {
  double lambda;
  HermitianOperator pi_op;
  std::vector<GrowthPoint> growth;
  std::optional<std::size_t> first_exceeding;
};

// Builds the witness from component `q` and tabulates the growth of the
// all-pi outcome probability for the whole mixture.
inline WitnessReport witness_report(std::span<const double> weights,
                                    const std::vector<HermitianOperator>& ops, std::size_t q,
                                    std::span<const std::size_t> n_list) {
  if (q >= ops.size()) fail(ErrorKind::Argument, "component index out of range");
  auto w = witness_from_operator(ops[q]);
  auto g = illegal_probability_growth(weights, ops, w.pi, n_list);
  return {w.lambda, std::move(w.pi), std::move(g.points), g.first_exceeding};
}

inline std::vector<std::size_t> even_range(std::size_t max_n) {
  std::vector<std::size_t> v;
  for (std::size_t n = 2; n <= max_n; n += 2) v.push_back(n);
  return v;
}

}  // namespace qdf
