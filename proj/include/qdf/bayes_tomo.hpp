#pragma once

// Bayesian state tomography over a discrete prior on density operators.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qdf/definetti.hpp"

namespace qdf {

// Child seed for stream `stream` of a parent seed (SplitMix64 finalizer), so
// independent experiments can share one user-facing seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// i.i.d. outcomes by inverse CDF over a fixed distribution. Uniforms are taken
// from the top 53 bits of mt19937_64 so records are bit-reproducible.
class OutcomeSampler {
 public:
  OutcomeSampler(std::vector<double> probs, std::uint64_t seed) : rng_(seed) {
    double acc = 0.0;
    for (double p : probs) {
      acc += p;
      cdf_.push_back(acc);
    }
  }

  std::size_t next() {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53 * cdf_.back();
    for (std::size_t a = 0; a + 1 < cdf_.size(); ++a)
      if (u < cdf_[a]) return a;
    return cdf_.size() - 1;
  }

 private:
  std::mt19937_64 rng_;
  std::vector<double> cdf_;
};

struct MeasurementRecord {
  std::string povm_id;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t seed = 0;
};

inline MeasurementRecord merge(const MeasurementRecord& a, const MeasurementRecord& b) {
  if (a.counts.size() != b.counts.size()) fail(ErrorKind::Shape, "records have different outcome counts");
  MeasurementRecord out = a;
  for (std::size_t i = 0; i < b.counts.size(); ++i) out.counts[i] += b.counts[i];
  out.total += b.total;
  return out;
}

// Counts of the first k outcomes of the sampler stream for `seed`.
inline MeasurementRecord simulate_record(const DensityOperator& rho_true, const Povm& povm,
                                         std::uint64_t k, std::uint64_t seed,
                                         std::string povm_id = {}) {
  OutcomeSampler sampler(born(rho_true, povm), seed);
  MeasurementRecord rec{std::move(povm_id), std::vector<std::uint64_t>(povm.size(), 0), k, seed};
  for (std::uint64_t i = 0; i < k; ++i) ++rec.counts[sampler.next()];
  return rec;
}

// sum_a counts_a log p_a(rho), without the multinomial coefficient.
inline double log_likelihood(const MeasurementRecord& rec, const DensityOperator& rho,
                             const Povm& povm) {
  if (rec.counts.size() != povm.size()) fail(ErrorKind::Shape, "record does not match POVM");
  const auto p = born(rho, povm);
  double ll = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (rec.counts[a] == 0) continue;
    if (p[a] <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(rec.counts[a]) * std::log(p[a]);
  }
  return ll;
}

struct PriorGrid {
  PriorGrid(std::vector<DensityOperator> points, std::vector<double> weights)
      : points(std::move(points)), weights(std::move(weights)) {
    if (this->points.empty() || this->points.size() != this->weights.size()) {
      fail(ErrorKind::Shape, "prior grid points and weights differ in length");
    }
    detail::require_probabilities(this->weights, "prior weights");
    for (const auto& p : this->points)
      if (p.dim() != this->points.front().dim()) fail(ErrorKind::Shape, "grid points differ in dimension");
  }

  std::size_t dim() const { return points.front().dim(); }

  DensityOperator mean() const {
    HermitianOperator acc = HermitianOperator::zero(dim());
    for (std::size_t i = 0; i < points.size(); ++i) acc = acc + weights[i] * points[i].op();
    return DensityOperator(std::move(acc));
  }

  std::vector<DensityOperator> points;
  std::vector<double> weights;
};

// Normalizes arbitrary nonnegative weights onto the grid.
inline PriorGrid make_prior(std::vector<DensityOperator> points, std::vector<double> raw) {
  double s = 0.0;
  for (double w : raw) s += w;
  for (double& w : raw) w /= s;
  return {std::move(points), std::move(raw)};
}

// Fibonacci-sphere directions with both poles included.
inline std::vector<BlochVector> fibonacci_directions(std::size_t n) {
  std::vector<BlochVector> out;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = n == 1 ? 1.0 : 1.0 - 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    out.push_back({r * std::cos(phi), r * std::sin(phi), z});
  }
  return out;
}

struct GridSpec {
  std::size_t directions = 50;
  std::vector<double> radii{0.25, 0.5, 0.75, 1.0};
};

inline std::vector<DensityOperator> bloch_ball_points(const GridSpec& spec = {}) {
  std::vector<DensityOperator> pts;
  for (double r : spec.radii)
    for (const auto& n : fibonacci_directions(spec.directions))
      pts.push_back(density_from_bloch({r * n.s1, r * n.s2, r * n.s3}));
  return pts;
}

// Uniform weights on the default 200-point Bloch-ball grid.
inline PriorGrid uniform_qubit_prior(const GridSpec& spec = {}) {
  auto pts = bloch_ball_points(spec);
  std::vector<double> w(pts.size(), 1.0);
  return make_prior(std::move(pts), std::move(w));
}

// Same grid, weights proportional to exp(-3 |S|^2): favours mixed states but
// never vanishes.
inline PriorGrid mixed_leaning_qubit_prior(const GridSpec& spec = {}) {
  auto pts = bloch_ball_points(spec);
  std::vector<double> w;
  for (const auto& p : pts) {
    const double r = bloch_of(p).norm();
    w.push_back(std::exp(-3.0 * r * r));
  }
  return make_prior(std::move(pts), std::move(w));
}

// Bayes rule in log space; points that cannot produce the record get weight 0.
inline PriorGrid posterior_update(const PriorGrid& prior, const MeasurementRecord& rec,
                                  const Povm& povm) {
  const std::size_t n = prior.points.size();
  std::vector<double> logw(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    logw[i] = prior.weights[i] > 0.0
                  ? std::log(prior.weights[i]) + log_likelihood(rec, prior.points[i], povm)
                  : -std::numeric_limits<double>::infinity();
    top = std::max(top, logw[i]);
  }
  if (!std::isfinite(top)) {
    fail(ErrorKind::DegeneratePosterior, "every grid point has zero posterior weight");
  }
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::isfinite(logw[i]) ? std::exp(logw[i] - top) : 0.0;
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return {prior.points, std::move(w)};
}

inline MultiSystemState predictive_state(const PriorGrid& posterior, std::size_t n) {
  return mix_product_states(MixingEnsemble(posterior.weights, posterior.points), n);
}

struct ConvergencePoint {
  std::uint64_t k;
  double dist_ab;
  double dist_a_true;
  double dist_b_true;
};

inline constexpr double kSupportRadius = 0.05;
inline constexpr double kSupportWeight = 1e-6;

// Requires weight >= 1e-6 on some point within trace distance 0.05 of rho.
inline bool prior_supports(const PriorGrid& prior, const DensityOperator& rho) {
  for (std::size_t i = 0; i < prior.points.size(); ++i) {
    if (prior.weights[i] >= kSupportWeight &&
        trace_distance(prior.points[i], rho) <= kSupportRadius + 1e-12) {
      return true;
    }
  }
  return false;
}

// Both priors see the same outcome stream; the row for K uses its first K
// outcomes, so it equals simulate_record(rho_true, povm, K, seed).
inline std::vector<ConvergencePoint> convergence_experiment(
    const PriorGrid& prior_a, const PriorGrid& prior_b, const DensityOperator& rho_true,
    const Povm& povm, std::span<const std::uint64_t> k_schedule, std::uint64_t seed) {
  if (!prior_supports(prior_a, rho_true) || !prior_supports(prior_b, rho_true)) {
    fail(ErrorKind::PriorSupport, "a prior puts no weight near the true state");
  }
  for (std::size_t i = 1; i < k_schedule.size(); ++i) {
    if (k_schedule[i] < k_schedule[i - 1]) fail(ErrorKind::Argument, "K schedule must be nondecreasing");
  }
  OutcomeSampler sampler(born(rho_true, povm), seed);
  MeasurementRecord rec{"", std::vector<std::uint64_t>(povm.size(), 0), 0, seed};
  std::vector<ConvergencePoint> trace;
  for (auto k : k_schedule) {
    while (rec.total < k) {
      ++rec.counts[sampler.next()];
      ++rec.total;
    }
    const auto mean_a = posterior_update(prior_a, rec, povm).mean();
    const auto mean_b = posterior_update(prior_b, rec, povm).mean();
    trace.push_back({k, trace_distance(mean_a, mean_b), trace_distance(mean_a, rho_true),
                     trace_distance(mean_b, rho_true)});
  }
  return trace;
}

}  // namespace qdf
