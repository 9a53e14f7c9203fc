#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + QDF_CLI_PATH + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string payload(const std::string& out) { return nlohmann::json::parse(out)["payload"].dump(); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("povm build --d 2").code, 0);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("povm build --d 7").code, 2);
  EXPECT_EQ(run("povm build --d two").code, 2);
  EXPECT_EQ(run("no-such-command").code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("counterexample bogus").code, 2);
  EXPECT_EQ(run("tomo run --radii 1.0 --bloch 0,0,0").code, 4);
  EXPECT_EQ(run("classical urn --M 600 --N 2").code, 2);
  EXPECT_EQ(run("--format csv povm build").code, 2);
  EXPECT_EQ(run("--output /nonexistent-dir/x.json povm build").code, 3);
}

TEST(Cli, EnvelopeShape) {
  const auto r = run("povm build --tetrahedron");
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["schema"], "qdf/1");
  EXPECT_EQ(j["command"], "povm build");
  EXPECT_EQ(j["config"]["tetrahedron"], true);
  EXPECT_TRUE(j["wall_time_ms"].is_number());
  EXPECT_DOUBLE_EQ(j["payload"]["max_probability_bound"].get<double>(), 0.5);
}

TEST(Cli, RepeatedRunsGiveIdenticalPayloads) {
  for (const char* args : {"povm build --d 3", "povm build --tetrahedron", "definetti roundtrip --seed 5",
                           "definetti roundtrip --ensemble nonphysical", "tomo run --seed 42",
                           "counterexample ghz", "counterexample real", "counterexample anticorrelation",
                           "classical urn --M 4 --N 2", "classical limit --family uniform --N 2 --M-list 8,64,512"}) {
    const auto a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0) << args;
    EXPECT_EQ(payload(a.out), payload(b.out)) << args;
  }
}

TEST(Cli, SeedFromEnvironment) {
  const auto flag = run("tomo run --seed 7 --k-schedule 50");
  const auto env = run("tomo run --k-schedule 50", "QDF_SEED=7");
  const auto other = run("tomo run --k-schedule 50", "QDF_SEED=8");
  ASSERT_EQ(flag.code, 0);
  ASSERT_EQ(env.code, 0);
  EXPECT_EQ(payload(flag.out), payload(env.out));
  EXPECT_NE(payload(flag.out), payload(other.out));
  // the flag wins over the environment
  EXPECT_EQ(payload(run("tomo run --seed 7 --k-schedule 50", "QDF_SEED=8").out), payload(flag.out));
  EXPECT_EQ(run("tomo run", "QDF_SEED=abc").code, 2);
}

TEST(Cli, OutputFilesAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / ("qdf_cli_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto json_path = dir / "tomo.json";
  const auto csv_path = dir / "tomo.csv";
  const auto r = run("--output " + json_path.string() + " --csv " + csv_path.string() + " tomo run");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  const auto j = nlohmann::json::parse(slurp(json_path));
  EXPECT_EQ(j["command"], "tomo run");
  const auto csv = slurp(csv_path);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,dist_ab,dist_a_true,dist_b_true");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto stdout_csv = run("--format csv tomo run");
  EXPECT_EQ(stdout_csv.out, csv);
  std::filesystem::remove_all(dir);
}

TEST(Cli, ClassicalCsv) {
  const auto r = run("--format csv classical urn --M 4 --N 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "n,urn,enumeration");
}
