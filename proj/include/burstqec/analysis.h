#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <vector>

namespace burstqec {

struct SweepPoint {
  int d = 0;
  double p = 0.0;
  double p_burst = 0.0;
  int T = 0;
  std::uint64_t shots = 0;
  std::uint64_t failures = 0;
  double rate() const { return shots ? static_cast<double>(failures) / static_cast<double>(shots) : 0.0; }
};

/// Columns are located by header name; extra columns are ignored.
std::vector<SweepPoint> read_sweep_csv(std::istream& in);
/// d,p,p_B,T,shots,failures
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

enum class SweptVariable { BurstRate, BackgroundRate };
const char* swept_name(SweptVariable v);

struct ThresholdFitOptions {
  std::size_t max_distances = 4;  // largest distances kept; 0 keeps all
  double window = 0.2;            // relative half-width around the first crossing estimate; 0 keeps all
  std::size_t bootstrap = 200;
  std::uint64_t seed = 1;
  int max_iterations = 500;
};

/// P_L = A + B x + C x^2 with x = (v - v*) d^(1/nu0).
struct ThresholdFit {
  SweptVariable swept = SweptVariable::BurstRate;
  double p_star = 0.0;
  double nu0 = 0.0;
  double A = 0.0, B = 0.0, C = 0.0;
  // Parameter order: A, B, C, p_star, nu0.
  std::array<std::array<double, 5>, 5> covariance{};
  double p_star_se = 0.0;
  double nu0_se = 0.0;
  double chi2 = 0.0;
  int dof = 0;
  double chi2_per_dof = 0.0;
  std::size_t bootstrap_resamples = 0;  // successful refits
  double p_star_boot_low = 0.0;         // 2.5% and 97.5% percentiles
  double p_star_boot_high = 0.0;
  double p_star_boot_se = 0.0;
  std::vector<int> distances;
  double range_low = 0.0, range_high = 0.0;
  std::size_t points_used = 0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws std::invalid_argument for fewer than 3 distances or 4 swept values,
/// FitError on non-convergence or a crossing outside the swept range.
ThresholdFit fit_threshold(const std::vector<SweepPoint>& points, SweptVariable swept,
                           const ThresholdFitOptions& options = {});

double scaling_model(const ThresholdFit& fit, double v, int d);

/// Memory failure 2 p = 1 - (1 - q)^D and its inverse.
double memory_failure(double q, int cycles);
double per_cycle_failure(double p_memory, int cycles);
/// 2 p_B = 1 - (1 - q_B)(1 - q)^(D - 1)
double burst_memory_failure(double q_burst, double q, int cycles);

struct CycleRates {
  double q_d = 0.0;
  double q_dB = 0.0;
  bool clamped = false;  // q_dB came out negative from noise and was set to 0
};

/// Throws std::invalid_argument if either rate is outside [0, 1/2) or D < 1.
CycleRates extract_cycle_rates(double p_a, double p_b, int cycles);

struct CycleRateEstimate {
  int cycles = 0;
  CycleRates rates;
  double se_d = 0.0;
  double se_dB = 0.0;
};

/// Rates plus delta-method standard errors from the two experiments' counts.
CycleRateEstimate estimate_cycle_rates(std::uint64_t shots_a, std::uint64_t failures_a, std::uint64_t shots_b,
                                       std::uint64_t failures_b, int cycles);

struct Plateau {
  double value = 0.0;
  double se = 0.0;
  int cycles = 0;
  bool settled = false;
};

/// Largest-D estimate; settled when it differs from the D - 5 estimate by less
/// than two combined standard errors. `use_burst` selects q_dB over q_d.
Plateau plateau(const std::vector<CycleRateEstimate>& estimates, bool use_burst);

struct RatePoint {
  int d = 0;
  double q = 0.0;
  double se = 0.0;  // 0 gives the point unit weight in log space
  // Optional counts for bootstrap resampling: q = per_cycle_failure(failures / shots, cycles).
  std::uint64_t shots = 0;
  std::uint64_t failures = 0;
  int cycles = 0;
};

/// log10 q = c + d m
struct LogLinearFit {
  double c = 0.0, m = 0.0;
  double c_se = 0.0, m_se = 0.0, cov_cm = 0.0;
  double chi2 = 0.0;
  std::size_t points = 0;
  std::size_t excluded = 0;  // zero-rate points
  std::size_t bootstrap_resamples = 0;
  double c_boot_low = 0.0, c_boot_high = 0.0;
  double m_boot_low = 0.0, m_boot_high = 0.0;
  double at(int d) const;
};

/// Throws std::invalid_argument with fewer than 3 distinct distances left.
LogLinearFit fit_log_linear(const std::vector<RatePoint>& points, std::size_t bootstrap = 0, std::uint64_t seed = 1);

inline constexpr double kInfiniteTau = std::numeric_limits<double>::infinity();

/// P_L = q_dB / tau + (1 - 1 / tau) q_d. Throws for tau < 1.
double failure_per_cycle_qubit(double tau, double q_d, double q_dB);

struct TeraquopResult {
  double tau = 0.0;
  int d_min = 0;
  long long footprint = 0;  // 2 d_min^2
  double p_l = 0.0;
};

class AboveThreshold : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First odd d >= 3 with P_L(d) <= target. Throws AboveThreshold if either
/// slope is non-negative and std::runtime_error if d_max is reached.
TeraquopResult teraquop_footprint(const LogLinearFit& background, const LogLinearFit& burst, double tau,
                                  double target = 1e-12, int d_max = 100001);

}  // namespace burstqec
