#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "burstqec/analysis.h"
#include "burstqec/burst_inference.h"
#include "burstqec/matching_decoder.h"
#include "burstqec/noise_model.h"

namespace burstqec {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr const char* kOutputDirEnv = "BURSTQEC_OUTPUT_DIR";

enum class BurstPlacement { Half, Explicit, None };

struct ExperimentConfig {
  NoiseModelKind model = NoiseModelKind::Phenomenological;
  std::vector<int> distances;
  std::vector<double> p;
  std::vector<double> p_burst;
  std::optional<int> rounds;  // explicit T for every distance; 2d otherwise
  BurstPlacement burst = BurstPlacement::Half;
  int burst_round = 0;       // used with BurstPlacement::Explicit
  bool burst_aware = true;   // decode with the burst round's true rates
  std::uint64_t shots = 0;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string output_dir;

  int rounds_for(int d) const { return rounds ? *rounds : 2 * d; }
  std::optional<int> burst_round_for(int T) const;
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Fields that determine results. Workers and output directory are left out.
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a (64 bit) of the compact dump of `j`; object keys are sorted by the
/// json type, so the hash does not depend on field order.
std::string config_hash(const nlohmann::json& j);

/// One (d, p, p_B) point of a sweep.
struct PointSpec {
  NoiseModelKind model = NoiseModelKind::Phenomenological;
  int d = 0;
  double p = 0.0;
  double p_burst = 0.0;
  int T = 0;
  std::optional<int> burst_round;
  bool burst_aware = true;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;

  NoiseConfig noise() const { return {model, p, p_burst, burst_round}; }
  nlohmann::json to_json() const;
  std::string hash() const { return config_hash(to_json()); }
  /// Sampler seed derived from the point's own fields.
  std::uint64_t sample_seed() const;
};

std::vector<PointSpec> expand_points(const ExperimentConfig& config);

struct ResultRecord {
  std::string config_hash;
  std::string point_hash;
  PointSpec spec;
  SweepPoint point;
  LogicalErrorEstimate estimate;
  double wall_seconds = 0.0;
  std::string version = kVersion;
};

/// Samples and decodes one point.
ResultRecord run_point(const PointSpec& spec, unsigned workers);

/// Header of results.csv.
const std::vector<std::string>& results_columns();
std::string result_row(const ResultRecord& r);

struct SweepSummary {
  std::vector<ResultRecord> records;  // every point of the config, resumed or new
  std::size_t resumed = 0;
  std::size_t computed = 0;
  std::string results_path;
  std::string manifest_path;
};

/// Writes <dir>/results.csv (append-only, deterministic content),
/// <dir>/timings.csv and <dir>/manifest.json. Points already present in
/// results.csv are not recomputed.
SweepSummary run_sweep(const ExperimentConfig& config,
                       const std::function<void(const ResultRecord&)>& on_point = nullptr);

/// Reads the records of a results.csv written by run_sweep.
std::vector<ResultRecord> read_results(const std::string& path);

nlohmann::json threshold_fit_json(const ThresholdFit& fit);
nlohmann::json log_linear_json(const LogLinearFit& fit);

/// CSV: tau,d_min,footprint,p_l
void write_teraquop_csv(std::ostream& out, const std::vector<TeraquopResult>& rows);
/// CSV: round,density
void write_density_csv(std::ostream& out, const std::vector<double>& density);
/// CSV: shot,round,n,w,weight,llr,decision,bound_false_pos,bound_false_neg
void write_burst_scan_header(std::ostream& out);
void write_burst_scan_rows(std::ostream& out, std::size_t shot, const std::vector<RoundStatistic>& rows);

}  // namespace burstqec
