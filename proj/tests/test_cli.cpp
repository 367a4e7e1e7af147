#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(HMM_SPDE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("hmm_spde_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}
}  // namespace

TEST(Cli, HmmRunWritesTrajectoryAndCost) {
  const auto dir = fresh_dir("hmm");
  ASSERT_EQ(run_cli("hmm run --problem p2 --K 7 --T 0.1 --dt 0.05 --ddt 2e-5 --epsilon 1e-3 --N 2 --M 3 --nT 4 --out-dir " +
                    dir.string()),
            0);
  EXPECT_EQ(first_line(dir / "hmm_trajectory.csv"), "n,t,mode_1,mode_2,mode_3,mode_4,mode_5,mode_6,mode_7");
  const auto cost = nlohmann::json::parse(read_file(dir / "hmm_cost.json"));
  EXPECT_EQ(cost["total_micro_steps"].get<int>(), 2 * 3 * 5);
  EXPECT_EQ(cost["params"]["m_0"].get<int>(), 5);
  EXPECT_DOUBLE_EQ(cost["cost_per_unit_time"].get<double>(), 300.0);
}

TEST(Cli, HmmRunIsReproducible) {
  const auto a = fresh_dir("rep_a"), b = fresh_dir("rep_b");
  const std::string args = "hmm run --K 7 --T 0.1 --dt 0.05 --ddt 2e-5 --epsilon 1e-3 --N 2 --M 2 --nT 4 --seed 9 --out-dir ";
  ASSERT_EQ(run_cli(args + a.string()), 0);
  ASSERT_EQ(run_cli(args + b.string()), 0);
  EXPECT_EQ(read_file(a / "hmm_trajectory.csv"), read_file(b / "hmm_trajectory.csv"));
}

TEST(Cli, HmmRunFromTolerance) {
  const auto dir = fresh_dir("tol");
  ASSERT_EQ(run_cli("hmm run --tol 0.3 --regime weak --epsilon 0.01 --K 7 --T 0.6 --out-dir " + dir.string()), 0);
  const auto cost = nlohmann::json::parse(read_file(dir / "hmm_cost.json"));
  EXPECT_EQ(cost["params"]["N"].get<int>(), 1);
  EXPECT_EQ(cost["params"]["M"].get<int>(), 1);
  EXPECT_NEAR(cost["params"]["macro_dt"].get<double>(), 0.3, 1e-12);
  EXPECT_EQ(cost["total_micro_steps"].get<int>(), cost["expected_micro_steps"].get<int>());
}

TEST(Cli, DirectRunWritesCost) {
  const auto dir = fresh_dir("direct");
  ASSERT_EQ(run_cli("direct run --K 7 --T 0.01 --epsilon 0.1 --ddt 1e-4 --out-dir " + dir.string()), 0);
  EXPECT_EQ(first_line(dir / "direct_trajectory.csv").rfind("n,t,mode_1", 0), 0u);
  const auto cost = nlohmann::json::parse(read_file(dir / "direct_cost.json"));
  EXPECT_EQ(cost["total_micro_steps"].get<int>(), 100);
}

TEST(Cli, FbarWritesGridCsv) {
  const auto dir = fresh_dir("fbar");
  ASSERT_EQ(run_cli("fbar --K 7 --out-dir " + dir.string()), 0);
  EXPECT_EQ(first_line(dir / "fbar.csv"), "xi,fbar_value,stderr_or_zero");
  const auto sampled = fresh_dir("fbar_s");
  ASSERT_EQ(run_cli("fbar --K 7 --problem p2 --window 2000 --warmup 100 --out-dir " + sampled.string()), 0);
  std::ifstream in(sampled / "fbar.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_NE(line.substr(line.rfind(',') + 1), "0");
}

TEST(Cli, RatesWritesCsvAndJson) {
  const auto dir = fresh_dir("rates");
  ASSERT_EQ(run_cli("rates --experiment invariant_tau --out-dir " + dir.string()), 0);
  EXPECT_EQ(first_line(dir / "invariant_tau.csv"), "experiment,metric,value,error,mc_stderr,n_samples");
  const auto j = nlohmann::json::parse(read_file(dir / "invariant_tau.json"));
  EXPECT_EQ(j["experiment"], "invariant_tau");
  EXPECT_NEAR(j["fits"][0]["slope"].get<double>(), 0.5, 0.05);
  EXPECT_TRUE(j["fits"][0].contains("ci95_low"));
}

TEST(Cli, RejectsBadInput) {
  EXPECT_NE(run_cli("rates --experiment nope"), 0);
  EXPECT_NE(run_cli("hmm run --problem p7"), 0);
  EXPECT_NE(run_cli("hmm run --K 7 --dt 0.05 --ddt 2e-5 --epsilon 1e-3 --N 1 --M 1 --nT 0 --out-dir /tmp/x"), 0);
}
