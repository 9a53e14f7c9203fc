#pragma once

// Classical exchangeability: i.i.d. and symmetric joint distributions, exact
// symmetric-extension feasibility, and the urn-model finite representation
// of binary exchangeable sequences.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdf/errors.hpp"
#include "qdf/opalg.hpp"

namespace qdf {

inline constexpr std::size_t kMaxJointTable = std::size_t{1} << 20;

struct JointDistribution {
  JointDistribution(std::size_t n_vars, std::size_t arity, std::vector<double> probs)
      : n_vars(n_vars), arity(arity), probs(std::move(probs)) {
    if (n_vars < 1 || arity < 2) fail(ErrorKind::Argument, "need n_vars >= 1 and arity >= 2");
    if (this->probs.size() != checked_pow(arity, n_vars)) {
      fail(ErrorKind::Shape, "joint table size does not match arity^n_vars");
    }
    double sum = 0.0;
    for (double p : this->probs) {
      if (!(p >= 0.0)) fail(ErrorKind::Argument, "joint table has a negative entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) fail(ErrorKind::Normalization, "joint table does not sum to 1");
  }

  std::size_t index(std::span<const std::size_t> seq) const {
    std::size_t f = 0;
    for (auto x : seq) f = f * arity + x;
    return f;
  }

  std::vector<std::size_t> assignment(std::size_t flat) const {
    std::vector<std::size_t> seq(n_vars);
    for (std::size_t k = n_vars; k-- > 0;) {
      seq[k] = flat % arity;
      flat /= arity;
    }
    return seq;
  }

  std::size_t n_vars;
  std::size_t arity;
  std::vector<double> probs;
};

struct SimplexPoint {
  explicit SimplexPoint(std::vector<double> p) : p(std::move(p)) {
    if (this->p.size() < 2) fail(ErrorKind::Argument, "simplex point needs at least two outcomes");
    double s = 0.0;
    for (double x : this->p) {
      if (!(x >= 0.0)) fail(ErrorKind::Argument, "simplex point has a negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) fail(ErrorKind::Normalization, "simplex point does not sum to 1");
  }

  std::vector<double> p;
};

// p(m, M): probability of m ones among M binary trials.
struct CountDistribution {
  explicit CountDistribution(std::vector<double> probs) : probs(std::move(probs)) {
    if (this->probs.empty()) fail(ErrorKind::Argument, "empty count distribution");
    double s = 0.0;
    for (double x : this->probs) {
      if (!(x >= 0.0)) fail(ErrorKind::Argument, "count distribution has a negative entry");
      s += x;
    }
    if (std::abs(s - 1.0) > 1e-12) fail(ErrorKind::Normalization, "count distribution does not sum to 1");
  }

  std::size_t max_m() const { return probs.size() - 1; }

  std::vector<double> probs;
};

inline std::size_t joint_table_size(std::size_t arity, std::size_t n) {
  const std::size_t size = checked_pow(arity, n);
  if (size > kMaxJointTable) fail(ErrorKind::Resource, "joint table too large to enumerate");
  return size;
}

// p(x_1..x_n) = p_{x_1} ... p_{x_n}
inline JointDistribution iid_joint(const SimplexPoint& p, std::size_t n) {
  const std::size_t k = p.p.size();
  std::vector<double> probs(joint_table_size(k, n));
  std::vector<std::size_t> occ(k);
  for (std::size_t f = 0; f < probs.size(); ++f) {
    std::fill(occ.begin(), occ.end(), 0);
    for (std::size_t r = f, i = 0; i < n; ++i, r /= k) ++occ[r % k];
    // Occupation-number form keeps permuted assignments bit-identical.
    double v = 1.0;
    for (std::size_t j = 0; j < k; ++j) v *= std::pow(p.p[j], static_cast<double>(occ[j]));
    probs[f] = v;
  }
  double s = 0.0;
  for (double v : probs) s += v;
  for (double& v : probs) v /= s;
  return {n, k, std::move(probs)};
}

inline bool is_symmetric_dist(const JointDistribution& j, double tol) {
  for (std::size_t f = 0; f < j.probs.size(); ++f) {
    auto seq = j.assignment(f);
    for (std::size_t k = 0; k + 1 < j.n_vars; ++k) {
      std::swap(seq[k], seq[k + 1]);
      if (std::abs(j.probs[j.index(seq)] - j.probs[f]) > tol) return false;
      std::swap(seq[k], seq[k + 1]);
    }
  }
  return true;
}

// Marginal on the first n variables.
inline JointDistribution marginal_first(const JointDistribution& j, std::size_t n) {
  if (n < 1 || n > j.n_vars) fail(ErrorKind::Argument, "marginal size must lie in 1..n_vars");
  const std::size_t rest = checked_pow(j.arity, j.n_vars - n);
  std::vector<double> out(checked_pow(j.arity, n), 0.0);
  for (std::size_t f = 0; f < j.probs.size(); ++f) out[f / rest] += j.probs[f];
  return {n, j.arity, std::move(out)};
}

enum class ClassicalVerdict { Feasible, Infeasible };

inline const char* to_string(ClassicalVerdict v) {
  return v == ClassicalVerdict::Feasible ? "feasible" : "infeasible";
}

// Why no symmetric extension exists. Variables q<seq> are the common
// probability of every rearrangement of seq (named by the sorted sequence).
struct ContradictionCertificate {
  std::vector<std::string> forced;  // e.g. "q011 = 1/2", in derivation order
  std::string violated;             // the marginal equation that cannot hold
  std::vector<mpq_class> farkas;    // y with y^T A <= 0, y^T b > 0
  std::vector<std::string> rows;    // marginal equations y is indexed by
};

struct ClassicalExtensionReport {
  ClassicalVerdict verdict = ClassicalVerdict::Infeasible;
  std::optional<JointDistribution> certificate;
  std::optional<ContradictionCertificate> contradiction;
  std::string reason;
};

namespace detail {

// Orbits of arity^n sequences under permutation, keyed by occupation vector.
struct SequenceOrbits {
  SequenceOrbits(std::size_t arity, std::size_t n) : arity(arity), n(n) {
    const std::size_t size = joint_table_size(arity, n);
    std::map<std::vector<std::size_t>, std::size_t> ids;
    orbit_of.resize(size);
    std::vector<std::size_t> occ(arity);
    for (std::size_t f = 0; f < size; ++f) {
      std::fill(occ.begin(), occ.end(), 0);
      for (std::size_t r = f, i = 0; i < n; ++i, r /= arity) ++occ[r % arity];
      auto [it, inserted] = ids.try_emplace(occ, ids.size());
      if (inserted) {
        occupations.push_back(occ);
        sizes.push_back(0);
      }
      orbit_of[f] = it->second;
      ++sizes[it->second];
    }
  }

  std::string name(std::size_t o) const {
    std::string s = "q";
    for (std::size_t x = 0; x < arity; ++x)
      for (std::size_t c = 0; c < occupations[o][x]; ++c)
        s += arity <= 10 ? std::string(1, static_cast<char>('0' + x)) : "(" + std::to_string(x) + ")";
    return s;
  }

  std::size_t count() const { return occupations.size(); }

  std::size_t arity, n;
  std::vector<std::size_t> orbit_of;
  std::vector<std::vector<std::size_t>> occupations;
  std::vector<std::size_t> sizes;
};

// Phase-I simplex over the rationals (Bland's rule): is {A q = b, q >= 0}
// nonempty? On failure returns y with y^T A <= 0 and y^T b > 0.
struct ExactLpResult {
  bool feasible = false;
  std::vector<mpq_class> solution;
  std::vector<mpq_class> farkas;
};

inline ExactLpResult exact_feasibility(std::vector<std::vector<mpq_class>> a, std::vector<mpq_class> b) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a.front().size() : 0;
  std::vector<int> sign(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0) {
      sign[i] = -1;
      b[i] = -b[i];
      for (auto& v : a[i]) v = -v;
    }
  }
  // tableau columns: n structural, m artificial
  std::vector<std::vector<mpq_class>> t(m, std::vector<mpq_class>(n + m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
  }
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;
  std::vector<mpq_class> cost(n + m, 0);
  for (std::size_t i = 0; i < m; ++i) cost[n + i] = 1;

  auto reduced = [&](std::size_t j) {
    mpq_class r = cost[j];
    for (std::size_t i = 0; i < m; ++i) r -= cost[basis[i]] * t[i][j];
    return r;
  };

  while (true) {
    std::optional<std::size_t> enter;
    for (std::size_t j = 0; j < n + m; ++j) {
      if (reduced(j) < 0) {
        enter = j;
        break;
      }
    }
    if (!enter) break;
    std::optional<std::size_t> leave;
    mpq_class best;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][*enter] > 0) {
        mpq_class ratio = b[i] / t[i][*enter];
        if (!leave || ratio < best || (ratio == best && basis[i] < basis[*leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (!leave) break;  // unbounded cannot happen in phase I
    const std::size_t r = *leave;
    const mpq_class piv = t[r][*enter];
    for (auto& v : t[r]) v /= piv;
    b[r] /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r || t[i][*enter] == 0) continue;
      const mpq_class f = t[i][*enter];
      for (std::size_t j = 0; j < n + m; ++j) t[i][j] -= f * t[r][j];
      b[i] -= f * b[r];
    }
    basis[r] = *enter;
  }

  mpq_class objective = 0;
  for (std::size_t i = 0; i < m; ++i) objective += cost[basis[i]] * b[i];

  ExactLpResult res;
  if (objective == 0) {
    res.feasible = true;
    res.solution.assign(n, 0);
    for (std::size_t i = 0; i < m; ++i)
      if (basis[i] < n) res.solution[basis[i]] = b[i];
    return res;
  }
  // y_i = c_art_i - reduced cost of artificial column i, mapped back through
  // the row sign flips.
  res.farkas.resize(m);
  for (std::size_t i = 0; i < m; ++i) res.farkas[i] = (1 - reduced(n + i)) * sign[i];
  return res;
}

inline std::string rational_string(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_str();
}

}  // namespace detail

// Exact linear feasibility: is j the marginal of a symmetric distribution of
// n_vars + extra_m variables? Unknowns are orbit probabilities; input
// probabilities enter as exact rationals.
inline ClassicalExtensionReport extension_feasible_classical(const JointDistribution& j,
                                                             std::size_t extra_m) {
  ClassicalExtensionReport report;
  if (!is_symmetric_dist(j, 1e-12)) {
    report.verdict = ClassicalVerdict::Infeasible;
    report.reason = "input is not symmetric";
    return report;
  }
  const std::size_t k = j.arity;
  const std::size_t n = j.n_vars;
  const detail::SequenceOrbits big(k, n + extra_m);
  const detail::SequenceOrbits small(k, n);
  const std::size_t rest = checked_pow(k, extra_m);

  // One row per orbit of the observed n variables, using the orbit's first
  // (lexicographically smallest) member as the representative prefix.
  std::vector<std::size_t> rep(small.count(), SIZE_MAX);
  std::vector<double> orbit_mass(small.count(), 0.0);
  for (std::size_t f = 0; f < small.orbit_of.size(); ++f) {
    auto o = small.orbit_of[f];
    if (rep[o] == SIZE_MAX) rep[o] = f;
    orbit_mass[o] += j.probs[f];
  }
  std::vector<std::vector<mpq_class>> a(small.count(), std::vector<mpq_class>(big.count(), 0));
  std::vector<mpq_class> b(small.count());
  std::vector<std::string> row_names(small.count());
  for (std::size_t o = 0; o < small.count(); ++o) {
    for (std::size_t y = 0; y < rest; ++y) a[o][big.orbit_of[rep[o] * rest + y]] += 1;
    b[o] = mpq_class(orbit_mass[o]) / static_cast<unsigned long>(small.sizes[o]);
    std::string lhs;
    for (std::size_t v = 0; v < big.count(); ++v) {
      if (a[o][v] == 0) continue;
      if (!lhs.empty()) lhs += " + ";
      if (a[o][v] != 1) lhs += detail::rational_string(a[o][v]) + "*";
      lhs += big.name(v);
    }
    row_names[o] = lhs + " = " + detail::rational_string(b[o]);
  }

  const auto lp = detail::exact_feasibility(a, b);
  if (lp.feasible) {
    report.verdict = ClassicalVerdict::Feasible;
    std::vector<double> probs(big.orbit_of.size());
    for (std::size_t f = 0; f < probs.size(); ++f) probs[f] = lp.solution[big.orbit_of[f]].get_d();
    double s = 0.0;
    for (double v : probs) s += v;
    for (double& v : probs) v /= s;
    report.certificate.emplace(n + extra_m, k, std::move(probs));
    report.reason = "exact phase-I simplex found a symmetric extension";
    return report;
  }

  report.verdict = ClassicalVerdict::Infeasible;
  report.reason = "exact phase-I simplex: no nonnegative symmetric extension";
  ContradictionCertificate cert;
  cert.farkas = lp.farkas;
  cert.rows = row_names;

  // Derivation by propagation: rows with zero right-hand side force their
  // variables to zero, rows with one unknown fix it, until a row fails.
  std::vector<std::optional<mpq_class>> value(big.count());
  bool changed = true;
  while (changed && cert.violated.empty()) {
    changed = false;
    for (std::size_t o = 0; o < a.size() && cert.violated.empty(); ++o) {
      mpq_class known = 0;
      std::vector<std::size_t> unknown;
      for (std::size_t v = 0; v < big.count(); ++v) {
        if (a[o][v] == 0) continue;
        if (value[v]) known += a[o][v] * *value[v];
        else unknown.push_back(v);
      }
      const mpq_class slack = b[o] - known;
      if (slack < 0 || (unknown.empty() && slack != 0)) {
        cert.violated = row_names[o];
      } else if (slack == 0 && !unknown.empty()) {
        for (auto v : unknown) {
          value[v] = mpq_class(0);
          cert.forced.push_back(big.name(v) + " = 0");
        }
        changed = true;
      } else if (unknown.size() == 1) {
        value[unknown[0]] = mpq_class(slack / a[o][unknown[0]]);
        cert.forced.push_back(big.name(unknown[0]) + " = " + detail::rational_string(*value[unknown[0]]));
        changed = true;
      }
    }
  }
  report.contradiction = std::move(cert);
  return report;
}

// (r)_q = r (r-1) ... (r-q+1)
inline double log_falling_factorial(std::size_t r, std::size_t q) {
  if (q > r) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(r) + 1.0) - std::lgamma(static_cast<double>(r - q) + 1.0);
}

inline double falling_factorial(std::size_t r, std::size_t q) {
  if (q > r) return 0.0;
  double v = 1.0;
  for (std::size_t j = 0; j < q; ++j) v *= static_cast<double>(r - j);
  return v;
}

inline constexpr std::size_t kLogSpaceThreshold = 30;

// Probability that the first N draws (without replacement) from an urn of M
// balls with m ones show ones exactly at the first n draws:
// (m)_n (M-m)_{N-n} / (M)_N.
inline double urn_conditional(std::size_t n, std::size_t big_n, std::size_t m, std::size_t big_m) {
  if (n > big_n || big_n > big_m || m > big_m) {
    fail(ErrorKind::Argument, "urn arguments must satisfy n <= N <= M and m <= M");
  }
  if (n > m || big_n - n > big_m - m) return 0.0;
  if (big_m > kLogSpaceThreshold) {
    return std::exp(log_falling_factorial(m, n) + log_falling_factorial(big_m - m, big_n - n) -
                    log_falling_factorial(big_m, big_n));
  }
  return falling_factorial(m, n) * falling_factorial(big_m - m, big_n - n) /
         falling_factorial(big_m, big_n);
}

inline double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double v = 1.0;
  for (std::size_t j = 1; j <= k; ++j) v = v * static_cast<double>(n - k + j) / static_cast<double>(j);
  return v;
}

// p(n, N) = C(N, n) sum_m (m)_n (M-m)_{N-n} / (M)_N p(m, M)
inline std::vector<double> finite_representation(const CountDistribution& counts, std::size_t big_n) {
  const std::size_t big_m = counts.max_m();
  if (big_n > big_m) fail(ErrorKind::Argument, "N must not exceed M");
  std::vector<double> out(big_n + 1, 0.0);
  for (std::size_t n = 0; n <= big_n; ++n) {
    double acc = 0.0;
    for (std::size_t m = 0; m <= big_m; ++m) {
      if (counts.probs[m] == 0.0 || n > m || big_n - n > big_m - m) continue;
      if (big_m > kLogSpaceThreshold) {
        acc += std::exp(log_binomial(big_n, n) + log_falling_factorial(m, n) +
                        log_falling_factorial(big_m - m, big_n - n) -
                        log_falling_factorial(big_m, big_n)) *
               counts.probs[m];
      } else {
        acc += binomial(big_n, n) * urn_conditional(n, big_n, m, big_m) * counts.probs[m];
      }
    }
    out[n] = acc;
  }
  return out;
}

// The exchangeable table on M binary variables with count law p(m, M): every
// arrangement of m ones has probability p(m, M) / C(M, m).
inline JointDistribution exchangeable_table(const CountDistribution& counts) {
  const std::size_t big_m = counts.max_m();
  std::vector<double> probs(joint_table_size(2, big_m));
  for (std::size_t f = 0; f < probs.size(); ++f) {
    const auto m = static_cast<std::size_t>(__builtin_popcountll(f));
    probs[f] = counts.probs[m] / binomial(big_m, m);
  }
  double s = 0.0;
  for (double v : probs) s += v;
  for (double& v : probs) v /= s;
  return {big_m, 2, std::move(probs)};
}

// Distribution of the number of ones among the first N variables, by
// enumerating the table.
inline std::vector<double> count_ones_first(const JointDistribution& j, std::size_t big_n) {
  if (j.arity != 2) fail(ErrorKind::Argument, "count of ones needs binary variables");
  const auto marg = marginal_first(j, big_n);
  std::vector<double> out(big_n + 1, 0.0);
  for (std::size_t f = 0; f < marg.probs.size(); ++f) {
    out[static_cast<std::size_t>(__builtin_popcountll(f))] += marg.probs[f];
  }
  return out;
}

using CountFamily = std::function<CountDistribution(std::size_t)>;

// p(m, M) = 1 / (M + 1): the finite shadow of a uniform P(z) on [0, 1].
inline CountDistribution uniform_counts(std::size_t big_m) {
  return CountDistribution(std::vector<double>(big_m + 1, 1.0 / static_cast<double>(big_m + 1)));
}

// All mass on m = round(z M).
inline CountFamily point_mass_family(double z) {
  if (!(z >= 0.0 && z <= 1.0)) fail(ErrorKind::Argument, "point mass location must lie in [0, 1]");
  return [z](std::size_t big_m) {
    std::vector<double> p(big_m + 1, 0.0);
    p[static_cast<std::size_t>(std::lround(z * static_cast<double>(big_m)))] = 1.0;
    return CountDistribution(std::move(p));
  };
}

struct LimitRow {
  std::size_t big_m;
  std::vector<double> values;  // p(n, N), n = 0..N
};

inline std::vector<LimitRow> limit_convergence_demo(const CountFamily& family, std::size_t big_n,
                                                    std::span<const std::size_t> m_list) {
  for (std::size_t i = 1; i < m_list.size(); ++i) {
    if (m_list[i] <= m_list[i - 1]) fail(ErrorKind::Argument, "M list must be increasing");
  }
  std::vector<LimitRow> rows;
  for (auto big_m : m_list) rows.push_back({big_m, finite_representation(family(big_m), big_n)});
  return rows;
}

}  // namespace qdf
