#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bohmstab/csv.hpp"

namespace fs = std::filesystem;
using namespace bohmstab;

namespace {

const fs::path kCli = BOHMSTAB_CLI_PATH;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bohmstab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + " " + kCli.string() + " " + args + " > " + (dir_ / "stdout").string() + " 2> " +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  CsvTable table(const fs::path& p) const {
    std::ifstream in(p);
    return read_csv(in);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TrajectoryCsvHasSchemaAndColumns) {
  ASSERT_EQ(run("--out-dir " + dir_.string() + " trajectory --t-end 1 --dt 0.01 --stride 10"), 0);
  const std::string text = slurp(dir_ / "trajectory.csv");
  EXPECT_EQ(text.rfind("# bohmstab-csv v1\nt,x,p\n", 0), 0u);
  const CsvTable t = table(dir_ / "trajectory.csv");
  EXPECT_TRUE(t.has_schema_line);
  ASSERT_EQ(t.rows.size(), 11u);
  EXPECT_EQ(t.column("x").front(), 1.0);
  EXPECT_EQ(t.column("p").front(), 0.25);
  EXPECT_TRUE(fs::exists(dir_ / "trajectory.json"));
}

TEST_F(CliTest, StabilityZeroDurationGivesOneRowPerTrajectory) {
  ASSERT_EQ(run("--out-dir " + dir_.string() + " stability --t-end 0"), 0);
  const CsvTable t = table(dir_ / "stability.csv");
  ASSERT_EQ(t.rows.size(), 4u);  // {modified, bohm} x {+0.25, -0.25}
  for (double x : t.column("x")) EXPECT_EQ(x, 1.0);
  for (double w : t.column("width")) EXPECT_DOUBLE_EQ(w, std::sqrt(0.5));
  const auto laws = t.text_column("law");
  EXPECT_EQ(std::count(laws.begin(), laws.end(), "bohm"), 2);
}

TEST_F(CliTest, StabilityDefaultsSeparateTheLaws) {
  ASSERT_EQ(run("--out-dir " + dir_.string() + " stability --dt 0.005"), 0);
  const CsvTable t = table(dir_ / "stability.csv");
  const auto laws = t.text_column("law");
  const auto x = t.column("x"), center = t.column("center"), time = t.column("t");
  double modified = 0.0, bohm_end = 1e9;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (laws[i] == "modified") modified = std::max(modified, std::abs(x[i] - center[i]));
    if (laws[i] == "bohm" && time[i] == 20.0) bohm_end = std::min(bohm_end, std::abs(x[i] - center[i]));
  }
  EXPECT_LE(modified, 0.2501);
  EXPECT_GE(bohm_end, 4.9);
}

TEST_F(CliTest, EnsembleIsByteIdenticalAcrossThreadCounts) {
  const std::string common = " ensemble --model superposition:3 --n 3000 --t-end 0.5 --neq offset:0.5 --seed 7";
  ASSERT_EQ(run("--threads 1 --out-dir " + (dir_ / "a").string() + common), 0);
  ASSERT_EQ(run("--threads 3 --out-dir " + (dir_ / "b").string() + common), 0);
  const std::string a = slurp(dir_ / "a" / "ensemble.csv");
  EXPECT_GT(a.size(), 3000u * 10u);
  EXPECT_EQ(a, slurp(dir_ / "b" / "ensemble.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "ensemble.json"), slurp(dir_ / "b" / "ensemble.json"));
  const auto side = nlohmann::json::parse(slurp(dir_ / "a" / "ensemble.json"));
  EXPECT_EQ(side["seed"], 7);
  EXPECT_TRUE(side.contains("truncation_count"));
  EXPECT_NE(side["law"].get<std::string>().find("modified"), std::string::npos);
}

TEST_F(CliTest, EnsembleCustomPositionsFromCsv) {
  {
    std::ofstream out(dir_ / "density.csv");
    out << "# bohmstab-csv v1\nx,density\n";
    for (int i = 0; i <= 400; ++i) {
      const double x = -4.0 + 0.02 * i;
      out << x << ',' << std::exp(-x * x) << '\n';
    }
  }
  ASSERT_EQ(run("--out-dir " + dir_.string() + " ensemble --n 4000 --t-end 0 --neq custom:" +
                (dir_ / "density.csv").string()),
            0)
      << slurp(dir_ / "stderr");
  const auto xs = table(dir_ / "ensemble.csv").column("x");
  ASSERT_EQ(xs.size(), 4000u);
  double mean = 0.0;
  for (double x : xs) mean += x / 4000.0;
  EXPECT_NEAR(mean, 0.0, 0.05);  // the coherent state at t = 0 would centre at 1
}

TEST_F(CliTest, RelaxWritesHSeries) {
  ASSERT_EQ(run("--out-dir " + dir_.string() +
                " relax --model coherent --n 4000 --times 0:1:2 --dt 0.05 --bootstrap 10 --grid -6,6,12,-6,6,12"),
            0)
      << slurp(dir_ / "stderr");
  const CsvTable t = table(dir_ / "relax.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"t", "hbar", "hbar_floor", "out_of_range_mass"}));
  ASSERT_EQ(t.rows.size(), 3u);
  for (double h : t.column("hbar")) EXPECT_GT(h, 0.0);
}

TEST_F(CliTest, ConfigFileEnvironmentAndFlagPrecedence) {
  {
    std::ofstream out(dir_ / "run.ini");
    out << "[trajectory]\nt_end = 0.5\nx0 = 2\n[integrator]\ndt = 0.1\n";
  }
  ASSERT_EQ(run("--config " + (dir_ / "run.ini").string() + " --out-dir " + dir_.string() + " trajectory --x0 3",
                "BOHMSTAB_TRAJECTORY_V0=0"),
            0);
  const CsvTable t = table(dir_ / "trajectory.csv");
  ASSERT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.column("x").front(), 3.0);
  EXPECT_EQ(t.column("p").front(), 0.0);
  EXPECT_EQ(t.column("t").back(), 0.5);
}

TEST_F(CliTest, RejectsUnknownConfigKey) {
  {
    std::ofstream out(dir_ / "bad.ini");
    out << "[trajectory]\nspeed = 1\n";
  }
  EXPECT_EQ(run("--config " + (dir_ / "bad.ini").string() + " trajectory"), 2);
  EXPECT_NE(slurp(dir_ / "stderr").find("unknown key trajectory.speed"), std::string::npos);
}

TEST_F(CliTest, ConfigReferenceRoundTrips) {
  ASSERT_EQ(run("config --reference"), 0);
  const std::string text = slurp(dir_ / "stdout");
  EXPECT_NE(text.find("BOHMSTAB_KERNEL_MU"), std::string::npos);
  std::ofstream(dir_ / "ref.ini") << text;
  ASSERT_EQ(run("--config " + (dir_ / "ref.ini").string() + " config"), 0);
  EXPECT_EQ(slurp(dir_ / "stdout"), [&] {
    std::string plain;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      if (!line.starts_with("#")) plain += line + "\n";
    }
    return plain;
  }());
}

TEST_F(CliTest, VerifyQuickPassesAndTamperFailsOnlyLiouville) {
  ASSERT_EQ(run("verify --level quick --report " + (dir_ / "ok.json").string()), 0) << slurp(dir_ / "stderr");
  const auto ok = nlohmann::json::parse(slurp(dir_ / "ok.json"));
  EXPECT_TRUE(ok["passed"].get<bool>());
  EXPECT_GE(ok["checks"].size(), 12u);
  double total = 0.0;
  for (const auto& c : ok["checks"]) total += c["seconds"].get<double>();
  EXPECT_LT(total, 60.0);

  EXPECT_EQ(run("verify --tamper --report " + (dir_ / "bad.json").string()), 1);
  const auto bad = nlohmann::json::parse(slurp(dir_ / "bad.json"));
  std::vector<std::string> failed;
  for (const auto& c : bad["checks"]) {
    if (!c["passed"].get<bool>()) failed.push_back(c["name"]);
  }
  EXPECT_EQ(failed, std::vector<std::string>{"liouville.gaussian"});
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("stability --v0"), 2);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("--help"), 0);
}
