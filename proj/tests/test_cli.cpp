#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "speckle/ingest/pgm.hpp"
#include "speckle/montecarlo/report.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " --grid.width=128 --grid.height=128 --gabor.w_over_M=2 --scan.w_over_M=1.7 --scan.wk=1 --scan.max_side=160";

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("speckle_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(SPECKLE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json manifest(const fs::path& root, const std::string& command) {
  return nlohmann::json::parse(slurp(root / command / "manifest.json"));
}

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("theory fig9"), 2);
  EXPECT_EQ(run("simulate --grid.depth=3 -o " + scratch("usage").string()), 2);
  EXPECT_EQ(run("simulate --grid.width=abc -o " + scratch("usage").string()), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, SimulateSameSeedGivesSameHashes) {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  ASSERT_EQ(run("simulate -o " + a.string() + kSmall), 0);
  ASSERT_EQ(run("simulate --threads 1 -o " + b.string() + kSmall), 0);
  EXPECT_EQ(manifest(a, "simulate"), manifest(b, "simulate"));
  const auto c = scratch("sim_c");
  ASSERT_EQ(run("simulate -o " + c.string() + kSmall + " --ensemble.seed=2"), 0);
  EXPECT_NE(manifest(a, "simulate")["artifacts"], manifest(c, "simulate")["artifacts"]);
}

TEST(Cli, SnapshotReproducesOutputs) {
  const auto a = scratch("snap_a");
  const auto b = scratch("snap_b");
  ASSERT_EQ(run("simulate -o " + a.string() + kSmall + " --ensemble.seed=9"), 0);
  ASSERT_EQ(run("simulate -c " + (a / "simulate" / "config.ini").string() + " -o " + b.string()), 0);
  EXPECT_EQ(manifest(a, "simulate"), manifest(b, "simulate"));
}

TEST(Cli, QSweepWritesOneSetPerQ) {
  const auto a = scratch("sweep");
  ASSERT_EQ(run("simulate --q-sweep --ensemble.q=0.5,1,2 --ensemble.T=0 -o " + a.string() + kSmall), 0);
  for (const char* q : {"q_0.5", "q_1", "q_2"}) {
    EXPECT_TRUE(fs::exists(a / "simulate" / q / "intensity.spk")) << q;
    EXPECT_TRUE(fs::exists(a / "simulate" / q / "bits_T_0.bin")) << q;
  }
  EXPECT_FALSE(fs::exists(a / "simulate" / "q_0"));
  const auto csv = slurp(a / "simulate" / "bit_errors.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Cli, TheoryWritesNamedColumns) {
  const auto a = scratch("theory");
  ASSERT_EQ(run("theory fig4 --theory.points=9 -o " + a.string()), 0);
  const auto csv = slurp(a / "theory" / "fig4.csv");
  EXPECT_EQ(csv.rfind("q,Q,bit_error_probability_T=0,bit_error_probability_T=1,bit_error_probability_T=2\r\n", 0), 0u);
  ASSERT_EQ(run("theory custom --theory.c1=0 --theory.points=3 -o " + a.string()), 0);
  EXPECT_NE(slurp(a / "theory" / "custom.csv").find("3.1415926535897931,0,0,0"), std::string::npos);
}

TEST(Cli, ValidateExitCodesAndReportSchema) {
  const auto a = scratch("validate");
  const std::string args = "validate perturbation --ensemble.trials=4 --ensemble.q=0,pi --ensemble.T=0 -o " + a.string() + kSmall;
  ASSERT_EQ(run(args), 0);
  const auto j = nlohmann::json::parse(slurp(a / "validate" / "report_perturbation.json"));
  EXPECT_EQ(speckle::mc::validate_report_json(j), "");
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_TRUE(fs::exists(a / "validate" / "report_perturbation.csv"));
  EXPECT_EQ(run(args + " --inject-failure"), 1);
}

TEST(Cli, AnalyzeImages) {
  const auto a = scratch("analyze");
  ASSERT_EQ(run("simulate --q-sweep --ensemble.q=0.5,1 --ensemble.T=0 -o " + a.string() + kSmall), 0);
  const auto s = a / "simulate";
  const std::string imgs =
      (s / "enrolled" / "intensity.pgm").string() + " " + (s / "q_0.5" / "intensity.pgm").string() + " " +
      (s / "q_1" / "intensity.pgm").string();
  ASSERT_EQ(run("analyze-images " + (s / "enrolled" / "intensity.pgm").string() + " --w 8 --k 0.19 -o " + a.string()), 0);
  EXPECT_FALSE(fs::exists(a / "analyze-images" / "scatter.csv"));
  ASSERT_EQ(run("analyze-images " + imgs + " --w 8 --k 0.19 -o " + a.string()), 0);
  const auto csv = slurp(a / "analyze-images" / "scatter.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(a / "analyze-images" / "histogram_0_intensity.csv"));
  EXPECT_EQ(run("analyze-images " + (a / "missing.pgm").string() + " --w 8 --k 0.19 -o " + a.string()), 3);
  EXPECT_EQ(run("analyze-images " + imgs), 2);  // --w and --k are required
}

TEST(Cli, OutputRootFromEnvironment) {
  const auto a = scratch("env");
  const std::string cmd = "SPECKLE_OUTPUT_ROOT=" + a.string() + " " + SPECKLE_CLI + " theory fig4 --theory.points=3 > /dev/null";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(a / "theory" / "fig4.csv"));
}
