#include "burstqec/experiment.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace burstqec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("burstqec_experiment_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig c;
  c.distances = {3, 5};
  c.p = {0.02};
  c.p_burst = {0.07, 0.09};
  c.shots = 600;
  c.seed = 11;
  c.output_dir = dir.string();
  return c;
}

std::vector<std::string> keys(const nlohmann::json& j) {
  std::vector<std::string> out;
  for (const auto& [k, v] : j.items()) out.push_back(k);
  return out;
}

}  // namespace

TEST(ExperimentConfig, RejectsInvalid) {
  ExperimentConfig ok = small_config("unused");
  EXPECT_NO_THROW(ok.validate());

  auto bad = ok;
  bad.shots = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.distances.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.p.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.p_burst.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.distances = {4};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.p = {0.5};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = ok;
  bad.burst = BurstPlacement::Explicit;
  bad.burst_round = 6;  // T = 6 at d = 3
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad.burst_round = 5;
  EXPECT_NO_THROW(bad.validate());

  auto none = ok;
  none.burst = BurstPlacement::None;
  none.p_burst.clear();
  EXPECT_NO_THROW(none.validate());
}

TEST(ExperimentConfig, DefaultRoundsAndPlacement) {
  ExperimentConfig c = small_config("unused");
  const auto pts = expand_points(c);
  ASSERT_EQ(pts.size(), 4u);
  for (const auto& s : pts) {
    EXPECT_EQ(s.T, 2 * s.d);
    ASSERT_TRUE(s.burst_round.has_value());
    EXPECT_EQ(*s.burst_round, s.T / 2);
  }
  c.rounds = 7;
  for (const auto& s : expand_points(c)) EXPECT_EQ(*s.burst_round, 3);

  c.burst = BurstPlacement::None;
  const auto flat = expand_points(c);
  ASSERT_EQ(flat.size(), 2u);
  for (const auto& s : flat) {
    EXPECT_FALSE(s.burst_round.has_value());
    EXPECT_EQ(s.p_burst, s.p);
  }
}

TEST(ConfigHash, StableUnderFieldReordering) {
  nlohmann::json a, b;
  a["shots"] = 10;
  a["p"] = {0.01, 0.02};
  a["model"] = "phenomenological";
  b["model"] = "phenomenological";
  b["p"] = {0.01, 0.02};
  b["shots"] = 10;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b["shots"] = 11;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(ConfigHash, IgnoresWorkersAndOutputDir) {
  ExperimentConfig a = small_config("x");
  ExperimentConfig b = small_config("y");
  b.workers = 4;
  EXPECT_EQ(config_hash(config_to_json(a)), config_hash(config_to_json(b)));
  b.seed = 12;
  EXPECT_NE(config_hash(config_to_json(a)), config_hash(config_to_json(b)));
}

TEST(ConfigJson, RoundTrip) {
  ExperimentConfig c = small_config("x");
  c.model = NoiseModelKind::CircuitDepolarizing;
  c.rounds = 9;
  c.burst = BurstPlacement::Explicit;
  c.burst_round = 2;
  c.burst_aware = false;
  const auto j = config_to_json(c);
  const auto back = config_from_json(j);
  EXPECT_EQ(config_to_json(back), j);
  EXPECT_THROW(config_from_json(nlohmann::json{{"p", {0.01}}}), std::invalid_argument);
}

TEST(PointSpec, SeedsDifferPerPoint) {
  const auto pts = expand_points(small_config("x"));
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      EXPECT_NE(pts[i].hash(), pts[j].hash());
      EXPECT_NE(pts[i].sample_seed(), pts[j].sample_seed());
    }
}

TEST(OutputSchema, GoldenResultsHeader) {
  const std::vector<std::string> golden{"config_hash", "point_hash", "model", "d",        "p",    "p_B",
                                        "T",           "burst_round", "burst_aware", "seed", "shots", "failures",
                                        "rate",        "ci_low",      "ci_high",     "version"};
  EXPECT_EQ(results_columns(), golden);
}

TEST(OutputSchema, GoldenJsonKeys) {
  ThresholdFit fit;
  fit.distances = {5, 7};
  EXPECT_EQ(keys(threshold_fit_json(fit)),
            (std::vector<std::string>{"A", "B", "C", "bootstrap", "chi2", "chi2_per_dof", "covariance", "distances",
                                      "dof", "nu0", "nu0_se", "p_star", "p_star_se", "points_used", "range",
                                      "swept"}));
  EXPECT_EQ(keys(threshold_fit_json(fit)["bootstrap"]),
            (std::vector<std::string>{"p_star_high", "p_star_low", "p_star_se", "resamples"}));
  EXPECT_EQ(keys(log_linear_json(LogLinearFit{})),
            (std::vector<std::string>{"bootstrap", "c", "c_se", "chi2", "cov_cm", "excluded", "m", "m_se", "points"}));
  EXPECT_EQ(keys(config_to_json(small_config("x"))),
            (std::vector<std::string>{"T", "burst", "burst_aware", "distances", "model", "p", "p_B", "seed",
                                      "shots"}));

  std::ostringstream t, dsty, scan;
  write_teraquop_csv(t, {});
  write_density_csv(dsty, {});
  write_burst_scan_header(scan);
  EXPECT_EQ(t.str(), "tau,d_min,footprint,p_l\n");
  EXPECT_EQ(dsty.str(), "round,density\n");
  EXPECT_EQ(scan.str(), "shot,round,n,w,weight,llr,decision,bound_false_pos,bound_false_neg\n");
}

TEST(RunSweep, WritesFilesAndResumes) {
  const auto dir = fresh_dir("resume");
  const ExperimentConfig c = small_config(dir);
  const auto first = run_sweep(c);
  EXPECT_EQ(first.computed, 4u);
  EXPECT_EQ(first.resumed, 0u);
  ASSERT_TRUE(fs::exists(dir / "results.csv"));
  ASSERT_TRUE(fs::exists(dir / "manifest.json"));
  ASSERT_TRUE(fs::exists(dir / "timings.csv"));
  const std::string results = slurp(dir / "results.csv");
  const std::string manifest = slurp(dir / "manifest.json");

  const auto manifest_json = nlohmann::json::parse(manifest);
  EXPECT_EQ(keys(manifest_json),
            (std::vector<std::string>{"config", "config_hash", "points", "results", "timings", "version"}));
  EXPECT_EQ(manifest_json["points"].size(), 4u);

  // Rerun: nothing sampled, files unchanged.
  const auto again = run_sweep(c);
  EXPECT_EQ(again.computed, 0u);
  EXPECT_EQ(again.resumed, 4u);
  EXPECT_EQ(slurp(dir / "results.csv"), results);
  EXPECT_EQ(slurp(dir / "manifest.json"), manifest);

  // Interrupted sweep: keep the header and the first record only.
  {
    std::istringstream in(results);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::ofstream out(dir / "results.csv", std::ios::trunc);
    out << header << '\n' << row << '\n';
  }
  const auto resumed = run_sweep(c);
  EXPECT_EQ(resumed.computed, 3u);
  EXPECT_EQ(resumed.resumed, 1u);
  EXPECT_EQ(slurp(dir / "results.csv"), results);
  EXPECT_EQ(slurp(dir / "manifest.json"), manifest);
  fs::remove_all(dir);
}

TEST(RunSweep, ResultsIndependentOfWorkerCount) {
  const auto d1 = fresh_dir("w1");
  const auto d3 = fresh_dir("w3");
  ExperimentConfig a = small_config(d1);
  ExperimentConfig b = small_config(d3);
  b.workers = 3;
  run_sweep(a);
  run_sweep(b);
  EXPECT_EQ(slurp(d1 / "results.csv"), slurp(d3 / "results.csv"));
  EXPECT_EQ(slurp(d1 / "manifest.json"), slurp(d3 / "manifest.json"));
  fs::remove_all(d1);
  fs::remove_all(d3);
}

TEST(RunSweep, ResultsFeedThresholdReader) {
  const auto dir = fresh_dir("reader");
  const auto summary = run_sweep(small_config(dir));
  std::ifstream in(dir / "results.csv");
  const auto points = read_sweep_csv(in);
  ASSERT_EQ(points.size(), summary.records.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = summary.records[i];
    EXPECT_EQ(points[i].d, r.spec.d);
    EXPECT_EQ(points[i].p, r.spec.p);
    EXPECT_EQ(points[i].p_burst, r.spec.p_burst);
    EXPECT_EQ(points[i].T, r.spec.T);
    EXPECT_EQ(points[i].shots, r.estimate.shots);
    EXPECT_EQ(points[i].failures, r.estimate.failures);
  }
  const auto back = read_results(summary.results_path);
  ASSERT_EQ(back.size(), summary.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(result_row(back[i]), result_row(summary.records[i]));
  fs::remove_all(dir);
}

TEST(RunPoint, LowNoiseRarelyFails) {
  PointSpec s;
  s.d = 5;
  s.T = 10;
  s.p = 0.002;
  s.p_burst = 0.002;
  s.shots = 4000;
  s.seed = 3;
  const auto r = run_point(s, 1);
  EXPECT_EQ(r.estimate.shots, 4000u);
  EXPECT_LE(r.estimate.failures, 4u);
  EXPECT_EQ(r.point.failures, r.estimate.failures);
  EXPECT_EQ(r.point_hash, s.hash());
}

TEST(RunPoint, HighNoiseFailsOften) {
  PointSpec s;
  s.d = 3;
  s.T = 6;
  s.p = 0.2;
  s.p_burst = 0.2;
  s.shots = 2000;
  s.seed = 4;
  const auto r = run_point(s, 1);
  EXPECT_GT(r.estimate.rate, 0.3);
  EXPECT_LT(r.estimate.rate, 0.6);
}
