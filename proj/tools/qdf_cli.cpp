// qdf: command-line driver. Every command prints (or writes) a JSON result
// envelope; table-producing commands can also emit CSV.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "qdf/commands.hpp"

namespace {

using qdf::cli::ExperimentConfig;

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("QDF_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || *end != '\0' || s[0] == '-') {
    throw CLI::ValidationError("QDF_SEED", "must be an unsigned 64-bit integer");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum de Finetti toolkit"};
  app.set_version_flag("--version", std::string(QDF_VERSION));
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string output_path;
  std::string csv_path;
  std::string format = "json";
  std::optional<std::uint64_t> seed_flag;

  app.add_option("-o,--output", output_path, "write the result here instead of stdout");
  app.add_option("--csv", csv_path, "also write the CSV table here (tomo, classical)");
  app.add_option("--format", format, "stdout/output format")->check(CLI::IsMember({"json", "csv"}));

  auto* povm = app.add_subcommand("povm", "POVM construction")->require_subcommand(1);
  auto* povm_build = povm->add_subcommand("build", "minimal IC-POVM or the qubit tetrahedron");
  povm_build->add_option("--d", cfg.d, "Hilbert-space dimension (2..5)");
  povm_build->add_flag("--tetrahedron", cfg.tetrahedron, "qubit tetrahedron POVM");

  auto* def = app.add_subcommand("definetti", "representation pipeline")->require_subcommand(1);
  auto* def_rt = def->add_subcommand("roundtrip", "mix -> statistics -> reconstruct");
  def_rt->add_option("--ensemble", cfg.ensemble)->check(CLI::IsMember({"random", "real", "nonphysical"}));
  def_rt->add_option("--n", cfg.n, "number of systems (1..3)");
  def_rt->add_option("--d", cfg.d, "local dimension (must be 2)");
  def_rt->add_option("--components", cfg.components, "random ensemble size");
  def_rt->add_option("--seed", seed_flag);

  auto* tomo = app.add_subcommand("tomo", "Bayesian tomography")->require_subcommand(1);
  auto* tomo_run = tomo->add_subcommand("run", "posterior convergence of two priors");
  tomo_run->add_option("--k-schedule", cfg.k_schedule, "comma-separated measurement counts")->delimiter(',');
  tomo_run->add_option("--seed", seed_flag);
  tomo_run->add_option("--prior-b", cfg.prior_b)->check(CLI::IsMember({"mixed", "uniform"}));
  tomo_run->add_option("--bloch", cfg.true_bloch, "true Bloch vector x,y,z")->delimiter(',');
  tomo_run->add_option("--directions", cfg.grid.directions, "grid directions");
  tomo_run->add_option("--radii", cfg.grid.radii, "grid radii")->delimiter(',');

  auto* ce = app.add_subcommand("counterexample", "non-extendible symmetric states");
  ce->add_option("variant", cfg.variant)->required()->check(CLI::IsMember({"ghz", "real", "anticorrelation"}));

  auto* cl = app.add_subcommand("classical", "finite exchangeable sequences")->require_subcommand(1);
  auto* cl_urn = cl->add_subcommand("urn", "urn representation vs enumeration");
  auto* cl_lim = cl->add_subcommand("limit", "convergence as M grows");
  for (auto* sc : {cl_urn, cl_lim}) {
    sc->add_option("--N", cfg.big_n, "observed prefix length");
    sc->add_option("--family", cfg.family)->check(CLI::IsMember({"uniform", "point"}));
    sc->add_option("--z", cfg.z, "point-mass location in [0, 1]");
  }
  cl_urn->add_option("--M", cfg.big_m, "total sequence length");
  cl_lim->add_option("--M-list", cfg.m_list, "increasing sequence lengths")->delimiter(',');

  try {
    app.parse(argc, argv);
    if (!seed_flag) seed_flag = env_seed();
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : qdf::cli::kExitConfig;
  }
  if (seed_flag) cfg.seed = *seed_flag;

  if (povm_build->parsed()) cfg.command = "povm build";
  else if (def_rt->parsed()) cfg.command = "definetti roundtrip";
  else if (tomo_run->parsed()) cfg.command = "tomo run";
  else if (ce->parsed()) cfg.command = "counterexample";
  else if (cl_urn->parsed()) cfg.command = "classical urn";
  else if (cl_lim->parsed()) cfg.command = "classical limit";

  try {
    auto result = qdf::cli::run_with_envelope(cfg);
    std::string csv_text = result.csv ? qdf::cli::to_csv(*result.csv) : std::string{};
    if (format == "csv" && !result.csv) {
      std::cerr << "error: command '" << cfg.command << "' has no CSV output\n";
      return qdf::cli::kExitConfig;
    }
    const std::string main_text = format == "csv" ? csv_text : result.envelope.dump(2) + "\n";
    if (!csv_path.empty() && result.csv && !write_file(csv_path, csv_text)) {
      std::cerr << "error: cannot write " << csv_path << "\n";
      return qdf::cli::kExitResource;
    }
    if (output_path.empty()) {
      std::cout << main_text;
    } else if (!write_file(output_path, main_text)) {
      std::cerr << "error: cannot write " << output_path << "\n";
      return qdf::cli::kExitResource;
    }
    return qdf::cli::kExitOk;
  } catch (const qdf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qdf::cli::exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return qdf::cli::kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return qdf::cli::kExitNumerical;
  }
}
