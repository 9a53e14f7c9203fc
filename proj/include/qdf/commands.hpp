#pragma once

// Command layer behind the `qdf` CLI: every command turns an
// ExperimentConfig into a JSON payload (and optionally a CSV table), wrapped
// in a versioned result envelope.

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdf/bayes_tomo.hpp"
#include "qdf/classical.hpp"
#include "qdf/realhilbert.hpp"

#ifndef QDF_VERSION
#define QDF_VERSION "1.0.0"
#endif

namespace qdf::cli {

using nlohmann::json;

inline constexpr const char* kSchemaVersion = "qdf/1";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitResource = 3,
  kExitPrecondition = 4,
  kExitNumerical = 5,
};

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument:
    case ErrorKind::Shape:
    case ErrorKind::Normalization:
      return kExitConfig;
    case ErrorKind::Overflow:
    case ErrorKind::Resource:
      return kExitResource;
    case ErrorKind::PriorSupport:
    case ErrorKind::DegeneratePosterior:
      return kExitPrecondition;
    default:
      return kExitNumerical;
  }
}

struct ExperimentConfig {
  std::string command;  // "povm build", "definetti roundtrip", "tomo run",
                        // "counterexample", "classical urn", "classical limit"
  std::size_t d = 2;
  std::size_t n = 2;
  std::uint64_t seed = 42;
  bool tetrahedron = false;
  std::string ensemble = "random";  // random | real | nonphysical
  std::size_t components = 3;
  std::string variant;  // counterexample: ghz | real | anticorrelation
  std::vector<std::uint64_t> k_schedule{100, 1000, 10000};
  std::string prior_b = "mixed";  // mixed | uniform
  std::array<double, 3> true_bloch{0.0, 0.0, 0.5};
  GridSpec grid;
  std::size_t big_m = 4;
  std::size_t big_n = 2;
  std::vector<std::size_t> m_list{8, 64, 512};
  std::string family = "uniform";  // uniform | point
  double z = 1.0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// '.' decimal point, 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const CsvTable& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << "\n";
  }
  return os.str();
}

struct CommandResult {
  json payload;
  std::optional<CsvTable> csv;
};

// Complex entries as [re, im], row-major nested arrays.
inline json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  const auto n_rows = static_cast<Eigen::Index>(j.size());
  const auto n_cols = n_rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  CMatrix m(n_rows, n_cols);
  for (Eigen::Index i = 0; i < n_rows; ++i)
    for (Eigen::Index c = 0; c < n_cols; ++c)
      m(i, c) = cplx{j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)][0].get<double>(),
                     j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)][1].get<double>()};
  return m;
}

inline json bloch_json(const DensityOperator& rho) {
  const auto s = bloch_of(rho);
  return json::array({s.s1, s.s2, s.s3});
}

inline CommandResult cmd_povm_build(const ExperimentConfig& cfg) {
  if (!cfg.tetrahedron && (cfg.d < 2 || cfg.d > 5)) {
    fail(ErrorKind::Argument, "povm build needs --d in [2, 5]");
  }
  const Povm povm = cfg.tetrahedron ? tetrahedron_povm() : build_minimal_ic_povm(cfg.d);
  const auto gram = gram_summary(povm.elements());
  json elems = json::array();
  double bound = 0.0;
  for (const auto& e : povm.elements()) {
    elems.push_back(matrix_json(e.matrix()));
    bound = std::max(bound, max_eigenvalue(e));
  }
  json payload = {
      {"kind", cfg.tetrahedron ? "tetrahedron" : "minimal_ic"},
      {"d", povm.dim()},
      {"n_elements", povm.size()},
      {"identity_residual", povm.identity_residual()},
      {"gram_rank", gram.rank},
      {"gram_min_singular", gram.min_singular},
      // sup over states of any outcome probability = largest element eigenvalue
      {"max_probability_bound", bound},
      {"elements", std::move(elems)},
  };
  return {std::move(payload), std::nullopt};
}

namespace detail {

inline double table_exchangeability_residual(const std::vector<double>& table, std::size_t d2,
                                             std::size_t n) {
  double worst = 0.0;
  std::vector<std::size_t> seq(n);
  for (std::size_t f = 0; f < table.size(); ++f) {
    for (std::size_t r = f, k = n; k-- > 0; r /= d2) seq[k] = r % d2;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      std::swap(seq[k], seq[k + 1]);
      std::size_t g = 0;
      for (auto a : seq) g = g * d2 + a;
      worst = std::max(worst, std::abs(table[g] - table[f]));
      std::swap(seq[k], seq[k + 1]);
    }
  }
  return worst;
}

// The canonical nonphysical mixture: weight 0.1 on diag(1.25, -0.25)
// (lambda = 0.25) and 0.9 on I/2.
inline std::pair<std::vector<double>, std::vector<HermitianOperator>> nonphysical_mixture() {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.25;
  a(1, 1) = -0.25;
  return {{0.1, 0.9}, {HermitianOperator(std::move(a)), HermitianOperator::identity(2) * 0.5}};
}

}  // namespace detail

inline CommandResult cmd_definetti_roundtrip(const ExperimentConfig& cfg) {
  if (cfg.d != 2) fail(ErrorKind::Argument, "definetti roundtrip runs on qubits (d = 2)");
  if (cfg.n < 1 || cfg.n > 3) fail(ErrorKind::Argument, "definetti roundtrip needs --n in [1, 3]");
  const Povm povm = tetrahedron_povm();
  const DualFrame frame(povm);

  std::vector<double> weights;
  std::vector<HermitianOperator> ops;
  json components = json::array();
  if (cfg.ensemble == "random") {
    if (cfg.components < 1 || cfg.components > 16) fail(ErrorKind::Argument, "--components must lie in [1, 16]");
    std::mt19937_64 rng(derive_seed(cfg.seed, 1));
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < cfg.components; ++i) {
      ops.push_back(random_density(2, rng).op());
      weights.push_back(unif(rng));
      total += weights.back();
    }
    for (double& w : weights) w /= total;
  } else if (cfg.ensemble == "real") {
    weights = {0.5, 0.5};
    ops = {density_from_bloch({0, 1, 0}).op(), density_from_bloch({0, -1, 0}).op()};
  } else if (cfg.ensemble == "nonphysical") {
    std::tie(weights, ops) = detail::nonphysical_mixture();
  } else {
    fail(ErrorKind::Argument, "unknown ensemble '" + cfg.ensemble + "'");
  }
  for (std::size_t i = 0; i < ops.size(); ++i) {
    components.push_back({{"weight", weights[i]},
                          {"bloch", {trace_product(ops[i], pauli(1)), trace_product(ops[i], pauli(2)),
                                     trace_product(ops[i], pauli(3))}},
                          {"min_eigenvalue", min_eigenvalue(ops[i])}});
  }

  const auto mixed = mix_product_operators(weights, ops, cfg.n);
  const auto table = sequence_table(mixed, cfg.n, povm);
  const auto rebuilt = reconstruct_multisystem_operator(table, cfg.n, frame);
  json payload = {
      {"ensemble", cfg.ensemble},
      {"n", cfg.n},
      {"povm", "tetrahedron"},
      {"components", std::move(components)},
      {"roundtrip_residual", max_abs_diff(rebuilt, mixed)},
      {"state_symmetry_defect", qdf::detail::symmetry_defect(mixed, SubsystemShape(2, cfg.n))},
      {"table_exchangeability_residual",
       detail::table_exchangeability_residual(table, povm.size(), cfg.n)},
      {"state_min_eigenvalue", min_eigenvalue(mixed)},
  };
  json witness = nullptr;
  for (std::size_t q = 0; q < ops.size(); ++q) {
    if (weights[q] > 0.0 && min_eigenvalue(ops[q]) < -kPsdTol) {
      const auto n_list = even_range(22);
      const auto rep = witness_report(weights, ops, q, n_list);
      json growth = json::array();
      for (const auto& g : rep.growth) growth.push_back({{"n", g.n}, {"value", g.value}});
      witness = {{"component", q},
                 {"lambda", rep.lambda},
                 {"pi", matrix_json(rep.pi_op.matrix())},
                 {"trace_a_pi", trace_product(ops[q], rep.pi_op)},
                 {"growth", std::move(growth)},
                 {"first_n_exceeding_one", rep.first_exceeding ? json(*rep.first_exceeding) : json(nullptr)}};
      break;
    }
  }
  payload["witness"] = std::move(witness);
  return {std::move(payload), std::nullopt};
}

inline CommandResult cmd_tomo_run(const ExperimentConfig& cfg) {
  if (cfg.k_schedule.empty()) fail(ErrorKind::Argument, "empty K schedule");
  if (cfg.grid.directions < 1 || cfg.grid.radii.empty()) fail(ErrorKind::Argument, "empty prior grid");
  const auto truth = density_from_bloch({cfg.true_bloch[0], cfg.true_bloch[1], cfg.true_bloch[2]});
  const PriorGrid prior_a = uniform_qubit_prior(cfg.grid);
  PriorGrid prior_b = prior_a;
  if (cfg.prior_b == "mixed") prior_b = mixed_leaning_qubit_prior(cfg.grid);
  else if (cfg.prior_b != "uniform") fail(ErrorKind::Argument, "unknown prior '" + cfg.prior_b + "'");

  const auto trace = convergence_experiment(prior_a, prior_b, truth, tetrahedron_povm(),
                                            cfg.k_schedule, cfg.seed);
  CsvTable csv{{"K", "dist_ab", "dist_a_true", "dist_b_true"}, {}};
  json rows = json::array();
  for (const auto& p : trace) {
    csv.rows.push_back({static_cast<double>(p.k), p.dist_ab, p.dist_a_true, p.dist_b_true});
    rows.push_back({{"K", p.k}, {"dist_ab", p.dist_ab}, {"dist_a_true", p.dist_a_true},
                    {"dist_b_true", p.dist_b_true}});
  }
  json payload = {{"grid_points", prior_a.points.size()},
                  {"prior_a", "uniform"},
                  {"prior_b", cfg.prior_b},
                  {"povm", "tetrahedron"},
                  {"true_bloch", cfg.true_bloch},
                  {"seed", cfg.seed},
                  {"rows", std::move(rows)}};
  return {std::move(payload), std::move(csv)};
}

inline json certificate_json(const ContradictionCertificate& c) {
  json farkas = json::array();
  for (const auto& y : c.farkas) farkas.push_back(qdf::detail::rational_string(y));
  return {{"forced", c.forced}, {"violated", c.violated}, {"rows", c.rows}, {"farkas", farkas}};
}

inline CommandResult cmd_counterexample(const ExperimentConfig& cfg) {
  json payload = {{"variant", cfg.variant}};
  if (cfg.variant == "ghz") {
    const auto ghz = ghz_state();
    const auto rep = extension_feasible(ghz, 1);
    payload["symmetric"] = is_symmetric(ghz, 1e-12);
    payload["purity"] = ghz.state.purity();
    payload["extension_m"] = 1;
    payload["extension_verdict"] = to_string(rep.verdict);
    payload["reason"] = rep.reason;
    payload["single_marginal"] = matrix_json(marginal(ghz, 1).op().matrix());
  } else if (cfg.variant == "real") {
    const auto state = mix_product_states(
        MixingEnsemble({0.5, 0.5}, {density_from_bloch({0, 1, 0}), density_from_bloch({0, -1, 0})}), 2);
    const auto real = to_real(state.op());
    const auto verdict = validate_real_state(real);
    const auto span = real_product_span_residual(real, 2);
    const auto gap = dimension_gap(2, 2);
    const DualFrame frame(tetrahedron_povm());
    const auto rebuilt = reconstruct_multisystem(induced_sequence_distribution(state, frame.povm()), frame);
    payload["valid"] = verdict.valid;
    payload["trace"] = verdict.trace;
    payload["min_eigenvalue"] = verdict.min_eigenvalue;
    payload["span_residual"] = span.residual_norm;
    payload["dimension_gap"] = {{"lhs", gap.lhs}, {"rhs", gap.rhs}, {"gap_positive", gap.gap_positive}};
    payload["real_basis_count"] = real_basis_count(2);
    payload["complex_roundtrip_residual"] = max_abs_diff(rebuilt.op(), state.op());
  } else if (cfg.variant == "anticorrelation") {
    const JointDistribution anti(2, 2, {0.0, 0.5, 0.5, 0.0});
    const auto rep = extension_feasible_classical(anti, 1);
    payload["symmetric"] = is_symmetric_dist(anti, 1e-12);
    payload["extension_m"] = 1;
    payload["extension_verdict"] = to_string(rep.verdict);
    payload["reason"] = rep.reason;
    payload["certificate"] = rep.contradiction ? certificate_json(*rep.contradiction) : json(nullptr);
  } else {
    fail(ErrorKind::Argument, "unknown counterexample '" + cfg.variant + "'");
  }
  return {std::move(payload), std::nullopt};
}

inline constexpr std::size_t kMaxUrnM = 512;
inline constexpr std::size_t kMaxEnumerationM = 20;

inline CountFamily family_for(const ExperimentConfig& cfg) {
  if (cfg.family == "uniform") return uniform_counts;
  if (cfg.family == "point") return point_mass_family(cfg.z);
  fail(ErrorKind::Argument, "unknown family '" + cfg.family + "'");
}

// Limit p(n, N) of the family as M -> infinity.
inline std::vector<double> family_limit(const ExperimentConfig& cfg, std::size_t big_n) {
  std::vector<double> out(big_n + 1);
  for (std::size_t n = 0; n <= big_n; ++n) {
    out[n] = cfg.family == "uniform"
                 ? 1.0 / static_cast<double>(big_n + 1)
                 : binomial(big_n, n) * std::pow(cfg.z, static_cast<double>(n)) *
                       std::pow(1.0 - cfg.z, static_cast<double>(big_n - n));
  }
  return out;
}

inline CommandResult cmd_classical(const ExperimentConfig& cfg) {
  const auto family = family_for(cfg);
  if (cfg.variant == "urn") {
    if (cfg.big_m < 1 || cfg.big_m > kMaxUrnM) fail(ErrorKind::Argument, "--M must lie in [1, 512]");
    if (cfg.big_n > cfg.big_m) fail(ErrorKind::Argument, "--N must not exceed --M");
    const auto counts = family(cfg.big_m);
    const auto urn = finite_representation(counts, cfg.big_n);
    json payload = {{"M", cfg.big_m}, {"N", cfg.big_n}, {"family", cfg.family}, {"urn", urn}};
    CsvTable csv{{"n", "urn"}, {}};
    if (cfg.big_m <= kMaxEnumerationM) {
      const auto brute = count_ones_first(exchangeable_table(counts), cfg.big_n);
      double worst = 0.0;
      for (std::size_t n = 0; n <= cfg.big_n; ++n) worst = std::max(worst, std::abs(urn[n] - brute[n]));
      payload["enumeration"] = brute;
      payload["max_residual"] = worst;
      csv.header.push_back("enumeration");
      for (std::size_t n = 0; n <= cfg.big_n; ++n) csv.rows.push_back({static_cast<double>(n), urn[n], brute[n]});
    } else {
      payload["enumeration"] = nullptr;
      payload["max_residual"] = nullptr;
      for (std::size_t n = 0; n <= cfg.big_n; ++n) csv.rows.push_back({static_cast<double>(n), urn[n]});
    }
    return {std::move(payload), std::move(csv)};
  }
  if (cfg.variant == "limit") {
    for (auto m : cfg.m_list) {
      if (m > kMaxUrnM || m < cfg.big_n) fail(ErrorKind::Argument, "every M must lie in [N, 512]");
    }
    const auto rows = limit_convergence_demo(family, cfg.big_n, cfg.m_list);
    const auto limit = family_limit(cfg, cfg.big_n);
    CsvTable csv{{"M", "n", "value", "limit", "gap"}, {}};
    json jrows = json::array();
    for (const auto& r : rows) {
      double worst = 0.0;
      for (std::size_t n = 0; n <= cfg.big_n; ++n) {
        const double gap = r.values[n] - limit[n];
        worst = std::max(worst, std::abs(gap));
        csv.rows.push_back({static_cast<double>(r.big_m), static_cast<double>(n), r.values[n], limit[n], gap});
      }
      jrows.push_back({{"M", r.big_m}, {"values", r.values}, {"max_abs_gap", worst}});
    }
    json payload = {{"N", cfg.big_n}, {"family", cfg.family}, {"limit", limit}, {"rows", std::move(jrows)}};
    if (cfg.family == "point") payload["z"] = cfg.z;
    return {std::move(payload), std::move(csv)};
  }
  fail(ErrorKind::Argument, "unknown classical variant '" + cfg.variant + "'");
}

// Only the fields a command reads are echoed.
inline json config_json(const ExperimentConfig& cfg) {
  json j = {{"command", cfg.command}};
  if (cfg.command == "povm build") {
    j["tetrahedron"] = cfg.tetrahedron;
    if (!cfg.tetrahedron) j["d"] = cfg.d;
  } else if (cfg.command == "definetti roundtrip") {
    j["d"] = cfg.d;
    j["n"] = cfg.n;
    j["ensemble"] = cfg.ensemble;
    j["components"] = cfg.components;
    j["seed"] = cfg.seed;
  } else if (cfg.command == "tomo run") {
    j["k_schedule"] = cfg.k_schedule;
    j["seed"] = cfg.seed;
    j["prior_b"] = cfg.prior_b;
    j["true_bloch"] = cfg.true_bloch;
    j["grid"] = {{"directions", cfg.grid.directions}, {"radii", cfg.grid.radii}};
  } else if (cfg.command == "counterexample") {
    j["variant"] = cfg.variant;
  } else if (cfg.command == "classical urn" || cfg.command == "classical limit") {
    j["family"] = cfg.family;
    if (cfg.family == "point") j["z"] = cfg.z;
    j["N"] = cfg.big_n;
    if (cfg.command == "classical urn") j["M"] = cfg.big_m;
    else j["M_list"] = cfg.m_list;
  }
  return j;
}

inline CommandResult run_command(const ExperimentConfig& cfg) {
  if (cfg.command == "povm build") return cmd_povm_build(cfg);
  if (cfg.command == "definetti roundtrip") return cmd_definetti_roundtrip(cfg);
  if (cfg.command == "tomo run") return cmd_tomo_run(cfg);
  if (cfg.command == "counterexample") return cmd_counterexample(cfg);
  if (cfg.command == "classical urn") {
    auto c = cfg;
    c.variant = "urn";
    return cmd_classical(c);
  }
  if (cfg.command == "classical limit") {
    auto c = cfg;
    c.variant = "limit";
    return cmd_classical(c);
  }
  fail(ErrorKind::Argument, "unknown command '" + cfg.command + "'");
}

inline json make_envelope(const ExperimentConfig& cfg, json payload, double wall_time_ms) {
  return {{"schema", kSchemaVersion},
          {"version", QDF_VERSION},
          {"command", cfg.command},
          {"config", config_json(cfg)},
          {"payload", std::move(payload)},
          {"wall_time_ms", wall_time_ms}};
}

struct Timed {
  json envelope;
  std::optional<CsvTable> csv;
};

inline Timed run_with_envelope(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto res = run_command(cfg);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {make_envelope(cfg, std::move(res.payload), ms), std::move(res.csv)};
}

// Required payload keys per command; the published envelope contract.
inline const std::map<std::string, std::vector<std::string>>& payload_schema() {
  static const std::map<std::string, std::vector<std::string>> schema = {
      {"povm build", {"kind", "d", "n_elements", "identity_residual", "gram_rank",
                      "gram_min_singular", "max_probability_bound", "elements"}},
      {"definetti roundtrip", {"ensemble", "n", "povm", "components", "roundtrip_residual",
                               "state_symmetry_defect", "table_exchangeability_residual",
                               "state_min_eigenvalue", "witness"}},
      {"tomo run", {"grid_points", "prior_a", "prior_b", "povm", "true_bloch", "seed", "rows"}},
      {"counterexample", {"variant"}},
      {"classical urn", {"M", "N", "family", "urn", "enumeration", "max_residual"}},
      {"classical limit", {"N", "family", "limit", "rows"}},
  };
  return schema;
}

// Empty when the envelope conforms.
inline std::vector<std::string> validate_envelope(const json& env) {
  std::vector<std::string> problems;
  auto need = [&](const json& obj, const std::string& key, json::value_t type, const std::string& where) {
    if (!obj.contains(key)) {
      problems.push_back(where + ": missing '" + key + "'");
    } else if (type != json::value_t::discarded && obj[key].type() != type &&
               !(type == json::value_t::number_float && obj[key].is_number())) {
      problems.push_back(where + ": '" + key + "' has the wrong type");
    }
  };
  if (!env.is_object()) return {"envelope is not an object"};
  need(env, "schema", json::value_t::string, "envelope");
  need(env, "version", json::value_t::string, "envelope");
  need(env, "command", json::value_t::string, "envelope");
  need(env, "config", json::value_t::object, "envelope");
  need(env, "payload", json::value_t::object, "envelope");
  need(env, "wall_time_ms", json::value_t::number_float, "envelope");
  if (!problems.empty()) return problems;
  if (env["schema"] != kSchemaVersion) problems.push_back("envelope: unknown schema version");
  const auto& schema = payload_schema();
  const auto it = schema.find(env["command"].get<std::string>());
  if (it == schema.end()) {
    problems.push_back("envelope: unknown command");
    return problems;
  }
  for (const auto& key : it->second) need(env["payload"], key, json::value_t::discarded, "payload");
  if (env["command"] == "counterexample") {
    const auto variant = env["payload"].value("variant", "");
    const std::map<std::string, std::vector<std::string>> extra = {
        {"ghz", {"symmetric", "purity", "extension_verdict", "reason", "single_marginal"}},
        {"real", {"valid", "trace", "min_eigenvalue", "span_residual", "dimension_gap",
                  "complex_roundtrip_residual"}},
        {"anticorrelation", {"symmetric", "extension_verdict", "certificate"}},
    };
    const auto e = extra.find(variant);
    if (e == extra.end()) problems.push_back("payload: unknown counterexample variant");
    else
      for (const auto& key : e->second) need(env["payload"], key, json::value_t::discarded, "payload");
  }
  return problems;
}

}  // namespace qdf::cli
