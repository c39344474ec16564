#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "burstqec_cli_test";

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + kWork.string() + "' && " + env + " '" BURSTQEC_CLI "' " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  void TearDown() override { fs::remove_all(kWork); }
};

const std::string kSweep = "sweep -d 3,5 -p 0.02 --p-burst 0.07,0.09 --shots 800 --seed 5";

}  // namespace

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("sweep -d 3 -p 0.02 --p-burst 0.07 --shots 0 -o a"), 1);
  EXPECT_EQ(run("sweep -d 4 -p 0.02 --p-burst 0.07 --shots 10 -o a"), 1);
  EXPECT_EQ(run("sweep --no-such-flag"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("sample -d 3 --p 0.7 --shots 10 -o s.bin"), 1);
  EXPECT_EQ(run("decode -d 3 --p 0.01 -i missing.bin"), 2);
  EXPECT_EQ(run("fit-threshold -i missing.csv"), 2);
}

TEST_F(Cli, SweepRerunLeavesFilesIdentical) {
  ASSERT_EQ(run(kSweep + " -o out"), 0);
  const std::string results = slurp(kWork / "out/results.csv");
  const std::string manifest = slurp(kWork / "out/manifest.json");
  const std::string timings = slurp(kWork / "out/timings.csv");
  ASSERT_EQ(run(kSweep + " -o out"), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(kWork / "stdout.txt"))["computed"], 0);
  EXPECT_EQ(slurp(kWork / "out/results.csv"), results);
  EXPECT_EQ(slurp(kWork / "out/manifest.json"), manifest);
  EXPECT_EQ(slurp(kWork / "out/timings.csv"), timings);
  EXPECT_EQ(first_line(kWork / "out/results.csv"),
            "config_hash,point_hash,model,d,p,p_B,T,burst_round,burst_aware,seed,shots,failures,rate,ci_low,ci_high,"
            "version");
}

TEST_F(Cli, SweepIdenticalAcrossWorkerCounts) {
  ASSERT_EQ(run(kSweep + " --workers 1 -o w1"), 0);
  ASSERT_EQ(run(kSweep + " --workers 4 -o w4"), 0);
  EXPECT_EQ(slurp(kWork / "w1/results.csv"), slurp(kWork / "w4/results.csv"));
  EXPECT_EQ(slurp(kWork / "w1/manifest.json"), slurp(kWork / "w4/manifest.json"));
}

TEST_F(Cli, OutputDirFromEnvironment) {
  ASSERT_EQ(run(kSweep, "BURSTQEC_OUTPUT_DIR=envdir"), 0);
  EXPECT_TRUE(fs::exists(kWork / "envdir/results.csv"));
  EXPECT_TRUE(fs::exists(kWork / "envdir/manifest.json"));
}

TEST_F(Cli, ConfigFileMatchesFlags) {
  {
    std::ofstream cfg(kWork / "cfg.json");
    cfg << R"({"seed": 5, "shots": 800, "p_B": [0.07, 0.09], "p": [0.02], "distances": [3, 5]})";
  }
  ASSERT_EQ(run("sweep --config cfg.json -o from_file"), 0);
  ASSERT_EQ(run(kSweep + " -o from_flags"), 0);
  EXPECT_EQ(slurp(kWork / "from_file/results.csv"), slurp(kWork / "from_flags/results.csv"));
}

TEST_F(Cli, SampleThenDecode) {
  ASSERT_EQ(run("sample -d 3 --p 0.03 --shots 500 --seed 2 -o s.bin"), 0);
  ASSERT_EQ(run("decode -d 3 --p 0.03 -i s.bin --per-shot per_shot.csv"), 0);
  const auto j = nlohmann::json::parse(slurp(kWork / "stdout.txt"));
  EXPECT_EQ(j["shots"], 500);
  EXPECT_GT(j["failures"].get<int>(), 0);
  EXPECT_TRUE(fs::exists(kWork / "per_shot.csv"));
  // Detector count mismatch.
  EXPECT_EQ(run("decode -d 5 --p 0.03 -i s.bin"), 1);
}

TEST_F(Cli, GenerateCircuitFormats) {
  ASSERT_EQ(run("generate-circuit -d 3 -T 4 --p 0.01 --p-burst 0.05 -o c.txt"), 0);
  EXPECT_EQ(first_line(kWork / "c.txt"), "BURSTQEC_CIRCUIT 1");
  ASSERT_EQ(run("generate-circuit -d 3 --format graph -o g.txt"), 0);
  EXPECT_EQ(first_line(kWork / "g.txt"), "BURSTQEC_GRAPH 1");
  ASSERT_EQ(run("generate-circuit -d 3 --format dem -o m.txt"), 0);
  EXPECT_FALSE(slurp(kWork / "m.txt").empty());
}

TEST_F(Cli, SweepFeedsFit) {
  ASSERT_EQ(run("sweep -d 3,5,7 -p 0.02 --p-burst 0.05,0.07,0.09,0.11,0.13 --shots 3000 -o fit"), 0);
  ASSERT_EQ(run("fit-threshold -i fit/results.csv --bootstrap 20 --window 0 -o fit.json"), 0)
      << slurp(kWork / "stderr.txt");
  const auto j = nlohmann::json::parse(slurp(kWork / "fit.json"));
  EXPECT_EQ(j["swept"], "p_B");
  EXPECT_EQ(j["points_used"], 15);
  EXPECT_EQ(j["covariance"]["matrix"].size(), 5u);
  EXPECT_GT(j["p_star"].get<double>(), 0.05);
  EXPECT_LT(j["p_star"].get<double>(), 0.13);
}

TEST_F(Cli, TeraquopCsv) {
  ASSERT_EQ(run("teraquop --background=-1.311,-0.1069 --burst=-1,-0.05 --tau 1,inf -o t.csv"), 0);
  std::ifstream in(kWork / "t.csv");
  std::string header, a, b;
  std::getline(in, header);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(header, "tau,d_min,footprint,p_l");
  EXPECT_EQ(a.rfind("1,", 0), 0u);
  EXPECT_EQ(b.rfind("inf,101,20402,", 0), 0u);
  EXPECT_EQ(run("teraquop --background=-1.311,-0.1069 --burst=-1,-0.05 --tau 0.5"), 1);
  EXPECT_EQ(run("teraquop --background=-1.311,0.1 --burst=-1,-0.05"), 2);
}

TEST_F(Cli, DensityAndDetectBurst) {
  ASSERT_EQ(run("density -d 3 -T 20 --burst-round 11 --p 0.001 --p-burst 0.01 --shots 5000 -o dens.csv"), 0);
  std::ifstream in(kWork / "dens.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "round,density");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 21);

  ASSERT_EQ(run("detect-burst -d 5 --p 0.01 --p-burst 0.1 --shots 100 -o scan.csv"), 0);
  const auto j = nlohmann::json::parse(slurp(kWork / "stdout.txt"));
  EXPECT_EQ(j["burst_round"], 5);
  double burst_fraction = 0.0, max_other = 0.0;
  for (const auto& r : j["rounds"]) {
    if (r["round"] == 5)
      burst_fraction = r["fraction"];
    else if (r["round"] != 6)
      max_other = std::max(max_other, r["fraction"].get<double>());
  }
  EXPECT_GT(burst_fraction, max_other);
  EXPECT_EQ(first_line(kWork / "scan.csv"), "shot,round,n,w,weight,llr,decision,bound_false_pos,bound_false_neg");
  EXPECT_EQ(run("detect-burst -d 5 --p 0.01 --p-burst 0.005 --shots 10"), 1);
}
