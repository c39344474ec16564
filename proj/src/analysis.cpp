#include "burstqec/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "burstqec/matching_decoder.h"

namespace burstqec {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double std_dev(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::vector<SweepPoint> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty sweep CSV");
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* name : {"d", "p", "p_B", "T", "shots", "failures"}) {
    if (!col.count(name)) throw std::invalid_argument(std::string("sweep CSV lacks column ") + name);
  }
  std::vector<SweepPoint> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    auto cell = [&](const char* name) -> const std::string& {
      const std::size_t k = col.at(name);
      if (k >= cells.size()) throw std::invalid_argument("short row " + std::to_string(row));
      return cells[k];
    };
    try {
      SweepPoint p;
      p.d = std::stoi(cell("d"));
      p.p = std::stod(cell("p"));
      p.p_burst = std::stod(cell("p_B"));
      p.T = std::stoi(cell("T"));
      p.shots = std::stoull(cell("shots"));
      p.failures = std::stoull(cell("failures"));
      if (p.failures > p.shots) throw std::invalid_argument("failures exceed shots");
      points.push_back(p);
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("bad sweep row " + std::to_string(row) + ": " + e.what());
    }
  }
  return points;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "d,p,p_B,T,shots,failures\n";
  char buf[64];
  for (const SweepPoint& p : points) {
    out << p.d << ",";
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", p.p, p.p_burst);
    out << buf << "," << p.T << "," << p.shots << "," << p.failures << "\n";
  }
}

const char* swept_name(SweptVariable v) { return v == SweptVariable::BurstRate ? "p_B" : "p"; }

namespace {

struct FitData {
  std::vector<double> v, y, w;
  std::vector<int> d;
  std::vector<double> log_d;
};

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

double sigma_of(std::uint64_t failures, std::uint64_t shots) {
  const LogicalErrorEstimate e = wilson_estimate(failures, shots);
  return std::max((e.ci_high - e.ci_low) / (2 * 1.959963984540054), 1e-12);
}

FitData make_data(const std::vector<SweepPoint>& points, SweptVariable swept) {
  FitData f;
  for (const SweepPoint& p : points) {
    f.v.push_back(swept == SweptVariable::BurstRate ? p.p_burst : p.p);
    f.y.push_back(p.rate());
    const double s = sigma_of(p.failures, p.shots);
    f.w.push_back(1.0 / (s * s));
    f.d.push_back(p.d);
    f.log_d.push_back(std::log(static_cast<double>(p.d)));
  }
  return f;
}

// theta = (A, B, C, v*, nu0)
double chi2_of(const FitData& f, const Vec5& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    const double x = (f.v[i] - t[3]) * std::exp(f.log_d[i] / t[4]);
    const double r = f.y[i] - (t[0] + t[1] * x + t[2] * x * x);
    s += f.w[i] * r * r;
  }
  return s;
}

// Best (A, B, C) for fixed v* and nu0 by weighted linear least squares.
double linear_part(const FitData& f, double vstar, double nu, Vec5& t) {
  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < f.v.size(); ++i) {
    const double x = (f.v[i] - vstar) * std::exp(f.log_d[i] / nu);
    const Eigen::Vector3d row(1.0, x, x * x);
    H += f.w[i] * row * row.transpose();
    g += f.w[i] * f.y[i] * row;
  }
  const Eigen::Vector3d abc = H.ldlt().solve(g);
  t << abc[0], abc[1], abc[2], vstar, nu;
  return chi2_of(f, t);
}

Vec5 grid_start(const FitData& f) {
  const double lo = *std::min_element(f.v.begin(), f.v.end());
  const double hi = *std::max_element(f.v.begin(), f.v.end());
  Vec5 best = Vec5::Zero();
  double best_chi2 = std::numeric_limits<double>::infinity();
  for (double nu : {0.6, 0.8, 1.0, 1.2, 1.5, 2.0}) {
    for (int k = 0; k <= 100; ++k) {
      Vec5 t;
      const double c = linear_part(f, lo + (hi - lo) * k / 100.0, nu, t);
      if (std::isfinite(c) && c < best_chi2) {
        best_chi2 = c;
        best = t;
      }
    }
  }
  return best;
}

struct LmResult {
  Vec5 theta;
  Mat5 normal;
  double chi2 = 0.0;
  bool converged = false;
};

LmResult levenberg_marquardt(const FitData& f, Vec5 theta, int max_iterations) {
  const std::size_t n = f.v.size();
  auto build = [&](const Vec5& t, Mat5& H, Vec5& g) {
    H.setZero();
    g.setZero();
    for (std::size_t i = 0; i < n; ++i) {
      const double scale = std::exp(f.log_d[i] / t[4]);
      const double dv = f.v[i] - t[3];
      const double x = dv * scale;
      const double r = f.y[i] - (t[0] + t[1] * x + t[2] * x * x);
      const double slope = t[1] + 2 * t[2] * x;
      Vec5 j;
      j << 1.0, x, x * x, -slope * scale, -slope * x * f.log_d[i] / (t[4] * t[4]);
      H += f.w[i] * j * j.transpose();
      g += f.w[i] * r * j;
    }
  };
  LmResult out;
  double chi2 = chi2_of(f, theta);
  double lambda = 1e-3;
  Mat5 H;
  Vec5 g;
  for (int it = 0; it < max_iterations; ++it) {
    build(theta, H, g);
    bool accepted = false;
    while (lambda < 1e14) {
      Mat5 A = H;
      for (int k = 0; k < 5; ++k) A(k, k) += lambda * std::max(H(k, k), 1e-30);
      const Vec5 step = A.ldlt().solve(g);
      const Vec5 trial = theta + step;
      const double c = (trial.allFinite() && trial[4] > 0.05) ? chi2_of(f, trial) : std::numeric_limits<double>::infinity();
      if (c <= chi2) {
        const double drop = chi2 - c;
        theta = trial;
        chi2 = c;
        lambda = std::max(lambda / 3, 1e-12);
        accepted = true;
        if (drop <= 1e-12 * std::max(chi2, 1e-300) || step.norm() <= 1e-14 * (1 + theta.norm())) {
          out.converged = true;
        }
        break;
      }
      lambda *= 4;
    }
    if (!accepted) {
      // No downhill step at any damping: a stationary point.
      out.converged = true;
    }
    if (out.converged) break;
  }
  build(theta, H, g);
  out.theta = theta;
  out.normal = H;
  out.chi2 = chi2;
  return out;
}

std::vector<SweepPoint> select_points(const std::vector<SweepPoint>& points, SweptVariable swept,
                                      const ThresholdFitOptions& options) {
  std::vector<SweepPoint> sorted = points;
  std::sort(sorted.begin(), sorted.end(), [&](const SweepPoint& a, const SweepPoint& b) {
    const double va = swept == SweptVariable::BurstRate ? a.p_burst : a.p;
    const double vb = swept == SweptVariable::BurstRate ? b.p_burst : b.p;
    if (a.d != b.d) return a.d < b.d;
    if (va != vb) return va < vb;
    if (a.failures != b.failures) return a.failures < b.failures;
    return a.shots < b.shots;
  });
  std::set<int> ds;
  for (const SweepPoint& p : sorted) {
    if (p.shots == 0) throw std::invalid_argument("sweep point without shots");
    ds.insert(p.d);
  }
  if (options.max_distances > 0 && ds.size() > options.max_distances) {
    std::vector<int> keep(ds.rbegin(), std::next(ds.rbegin(), static_cast<std::ptrdiff_t>(options.max_distances)));
    std::vector<SweepPoint> kept;
    for (const SweepPoint& p : sorted) {
      if (std::find(keep.begin(), keep.end(), p.d) != keep.end()) kept.push_back(p);
    }
    sorted.swap(kept);
  }
  return sorted;
}

void check_shape(const std::vector<SweepPoint>& points, SweptVariable swept) {
  std::set<int> ds;
  std::set<double> vs;
  for (const SweepPoint& p : points) {
    ds.insert(p.d);
    vs.insert(swept == SweptVariable::BurstRate ? p.p_burst : p.p);
  }
  if (ds.size() < 3) throw std::invalid_argument("threshold fit needs at least 3 distances");
  if (vs.size() < 4) throw std::invalid_argument("threshold fit needs at least 4 swept values");
}

}  // namespace

double scaling_model(const ThresholdFit& fit, double v, int d) {
  const double x = (v - fit.p_star) * std::pow(static_cast<double>(d), 1.0 / fit.nu0);
  return fit.A + fit.B * x + fit.C * x * x;
}

ThresholdFit fit_threshold(const std::vector<SweepPoint>& input, SweptVariable swept, const ThresholdFitOptions& options) {
  std::vector<SweepPoint> points = select_points(input, swept, options);
  check_shape(points, swept);
  if (options.window > 0) {
    const Vec5 first = grid_start(make_data(points, swept));
    const double centre = first[3];
    std::vector<SweepPoint> kept;
    for (const SweepPoint& p : points) {
      const double v = swept == SweptVariable::BurstRate ? p.p_burst : p.p;
      if (std::abs(v - centre) <= options.window * centre * (1 + 1e-12)) kept.push_back(p);
    }
    points.swap(kept);
    check_shape(points, swept);
  }

  const FitData data = make_data(points, swept);
  const LmResult lm = levenberg_marquardt(data, grid_start(data), options.max_iterations);
  if (!lm.converged) throw FitError("threshold fit did not converge");

  ThresholdFit fit;
  fit.swept = swept;
  fit.A = lm.theta[0];
  fit.B = lm.theta[1];
  fit.C = lm.theta[2];
  fit.p_star = lm.theta[3];
  fit.nu0 = lm.theta[4];
  fit.range_low = *std::min_element(data.v.begin(), data.v.end());
  fit.range_high = *std::max_element(data.v.begin(), data.v.end());
  if (fit.p_star < fit.range_low || fit.p_star > fit.range_high) {
    throw FitError("fitted crossing lies outside the swept range");
  }
  const Mat5 cov = lm.normal.completeOrthogonalDecomposition().pseudoInverse();
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) fit.covariance[a][b] = cov(a, b);
  }
  fit.p_star_se = std::sqrt(std::max(cov(3, 3), 0.0));
  fit.nu0_se = std::sqrt(std::max(cov(4, 4), 0.0));
  fit.chi2 = lm.chi2;
  fit.points_used = points.size();
  fit.dof = static_cast<int>(points.size()) - 5;
  fit.chi2_per_dof = fit.dof > 0 ? fit.chi2 / fit.dof : 0.0;
  for (const SweepPoint& p : points) {
    if (std::find(fit.distances.begin(), fit.distances.end(), p.d) == fit.distances.end()) fit.distances.push_back(p.d);
  }

  // Bootstrap over shots: each point's failure count is redrawn from its own
  // empirical rate.
  std::vector<double> stars;
  for (std::size_t b = 0; b < options.bootstrap; ++b) {
    std::mt19937_64 rng(options.seed * 0x9E3779B97F4A7C15ull + b);
    std::vector<SweepPoint> resampled = points;
    for (SweepPoint& p : resampled) {
      std::binomial_distribution<std::uint64_t> draw(p.shots, p.rate());
      p.failures = draw(rng);
    }
    const LmResult r = levenberg_marquardt(make_data(resampled, swept), lm.theta, options.max_iterations);
    if (r.converged && r.theta.allFinite()) stars.push_back(r.theta[3]);
  }
  fit.bootstrap_resamples = stars.size();
  if (!stars.empty()) {
    fit.p_star_boot_low = percentile(stars, 0.025);
    fit.p_star_boot_high = percentile(stars, 0.975);
    fit.p_star_boot_se = std_dev(stars);
  }
  return fit;
}

double memory_failure(double q, int cycles) {
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  if (!(q >= 0.0 && q < 1.0)) throw std::invalid_argument("per-cycle rate must lie in [0, 1)");
  return -std::expm1(cycles * std::log1p(-q)) / 2.0;
}

double per_cycle_failure(double p_memory, int cycles) {
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  if (!(p_memory >= 0.0 && p_memory < 0.5)) throw std::invalid_argument("memory failure must lie in [0, 1/2)");
  return -std::expm1(std::log1p(-2.0 * p_memory) / cycles);
}

double burst_memory_failure(double q_burst, double q, int cycles) {
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  return -std::expm1(std::log1p(-q_burst) + (cycles - 1) * std::log1p(-q)) / 2.0;
}

CycleRates extract_cycle_rates(double p_a, double p_b, int cycles) {
  if (!(p_b >= 0.0 && p_b < 0.5)) throw std::invalid_argument("burst memory failure must lie in [0, 1/2)");
  CycleRates r;
  r.q_d = per_cycle_failure(p_a, cycles);
  // 1 - q_dB = (1 - 2 p_B) / (1 - q_d)^(D - 1)
  r.q_dB = -std::expm1(std::log1p(-2.0 * p_b) - (cycles - 1) * std::log1p(-r.q_d));
  if (r.q_dB < 0.0) {
    r.q_dB = 0.0;
    r.clamped = true;
  }
  return r;
}

CycleRateEstimate estimate_cycle_rates(std::uint64_t shots_a, std::uint64_t failures_a, std::uint64_t shots_b,
                                       std::uint64_t failures_b, int cycles) {
  if (shots_a == 0 || shots_b == 0) throw std::invalid_argument("no shots");
  const double pa = static_cast<double>(failures_a) / static_cast<double>(shots_a);
  const double pb = static_cast<double>(failures_b) / static_cast<double>(shots_b);
  CycleRateEstimate e;
  e.cycles = cycles;
  e.rates = extract_cycle_rates(pa, pb, cycles);
  const double var_a = pa * (1 - pa) / static_cast<double>(shots_a);
  const double var_b = pb * (1 - pb) / static_cast<double>(shots_b);
  const double D = cycles;
  const double dq_dpa = (2.0 / D) * std::pow(1 - 2 * pa, 1.0 / D - 1.0);
  e.se_d = dq_dpa * std::sqrt(var_a);
  const double one_minus_qd = 1 - e.rates.q_d;
  const double dqb_dpb = 2.0 / std::pow(one_minus_qd, D - 1);
  const double dqb_dqd = -(1 - 2 * pb) * (D - 1) / std::pow(one_minus_qd, D);
  e.se_dB = std::sqrt(dqb_dpb * dqb_dpb * var_b + dqb_dqd * dqb_dqd * dq_dpa * dq_dpa * var_a);
  return e;
}

Plateau plateau(const std::vector<CycleRateEstimate>& estimates, bool use_burst) {
  if (estimates.empty()) throw std::invalid_argument("no estimates");
  auto last = std::max_element(estimates.begin(), estimates.end(),
                               [](const CycleRateEstimate& a, const CycleRateEstimate& b) { return a.cycles < b.cycles; });
  Plateau out;
  out.cycles = last->cycles;
  out.value = use_burst ? last->rates.q_dB : last->rates.q_d;
  out.se = use_burst ? last->se_dB : last->se_d;
  for (const CycleRateEstimate& e : estimates) {
    if (e.cycles != last->cycles - 5) continue;
    const double prev = use_burst ? e.rates.q_dB : e.rates.q_d;
    const double prev_se = use_burst ? e.se_dB : e.se_d;
    out.settled = std::abs(out.value - prev) < 2 * std::sqrt(out.se * out.se + prev_se * prev_se);
  }
  return out;
}

double LogLinearFit::at(int d) const { return std::pow(10.0, c + m * d); }

namespace {

struct LineFit {
  double c = 0.0, m = 0.0;
  Eigen::Matrix2d cov;
  double chi2 = 0.0;
};

LineFit weighted_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::Vector2d row(1.0, x[i]);
    H += w[i] * row * row.transpose();
    g += w[i] * y[i] * row;
  }
  LineFit f;
  const Eigen::Vector2d cm = H.ldlt().solve(g);
  f.c = cm[0];
  f.m = cm[1];
  f.cov = H.inverse();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - f.c - f.m * x[i];
    f.chi2 += w[i] * r * r;
  }
  return f;
}

}  // namespace

LogLinearFit fit_log_linear(const std::vector<RatePoint>& points, std::size_t bootstrap, std::uint64_t seed) {
  LogLinearFit out;
  std::vector<RatePoint> used;
  for (const RatePoint& p : points) {
    if (!(p.q >= 0.0) || p.q >= 1.0) throw std::invalid_argument("rate outside [0, 1)");
    if (p.q == 0.0) {
      ++out.excluded;
    } else {
      used.push_back(p);
    }
  }
  std::set<int> ds;
  for (const RatePoint& p : used) ds.insert(p.d);
  if (ds.size() < 3) throw std::invalid_argument("log-linear fit needs at least 3 distances with nonzero rates");

  const bool weighted = std::all_of(used.begin(), used.end(), [](const RatePoint& p) { return p.se > 0.0; });
  std::vector<double> x, y, w;
  for (const RatePoint& p : used) {
    x.push_back(p.d);
    y.push_back(std::log10(p.q));
    const double s = p.se / (p.q * std::log(10.0));
    w.push_back(weighted ? 1.0 / (s * s) : 1.0);
  }
  const LineFit f = weighted_line(x, y, w);
  out.c = f.c;
  out.m = f.m;
  out.chi2 = f.chi2;
  out.points = used.size();
  Eigen::Matrix2d cov = f.cov;
  if (!weighted && used.size() > 2) cov *= f.chi2 / static_cast<double>(used.size() - 2);
  out.c_se = std::sqrt(std::max(cov(0, 0), 0.0));
  out.m_se = std::sqrt(std::max(cov(1, 1), 0.0));
  out.cov_cm = cov(0, 1);

  const bool countable =
      std::all_of(used.begin(), used.end(), [](const RatePoint& p) { return p.shots > 0 && p.cycles > 0; });
  if (bootstrap > 0 && countable) {
    std::vector<double> cs, ms;
    for (std::size_t b = 0; b < bootstrap; ++b) {
      std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + b);
      std::vector<double> by;
      bool ok = true;
      for (const RatePoint& p : used) {
        const double rate = static_cast<double>(p.failures) / static_cast<double>(p.shots);
        std::binomial_distribution<std::uint64_t> draw(p.shots, rate);
        const double pm = static_cast<double>(draw(rng)) / static_cast<double>(p.shots);
        if (!(pm > 0.0 && pm < 0.5)) {
          ok = false;
          break;
        }
        by.push_back(std::log10(per_cycle_failure(pm, p.cycles)));
      }
      if (!ok) continue;
      const LineFit bf = weighted_line(x, by, w);
      cs.push_back(bf.c);
      ms.push_back(bf.m);
    }
    out.bootstrap_resamples = cs.size();
    if (!cs.empty()) {
      out.c_boot_low = percentile(cs, 0.025);
      out.c_boot_high = percentile(cs, 0.975);
      out.m_boot_low = percentile(ms, 0.025);
      out.m_boot_high = percentile(ms, 0.975);
    }
  }
  return out;
}

double failure_per_cycle_qubit(double tau, double q_d, double q_dB) {
  if (!(tau >= 1.0)) throw std::invalid_argument("tau must be >= 1");
  if (std::isinf(tau)) return q_d;
  return q_dB / tau + (1.0 - 1.0 / tau) * q_d;
}

TeraquopResult teraquop_footprint(const LogLinearFit& background, const LogLinearFit& burst, double tau, double target,
                                  int d_max) {
  if (background.m >= 0.0 || burst.m >= 0.0) throw AboveThreshold("above threshold: non-negative log-linear slope");
  if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
  TeraquopResult r;
  r.tau = tau;
  for (int d = 3; d <= d_max; d += 2) {
    const double pl = failure_per_cycle_qubit(tau, background.at(d), burst.at(d));
    if (pl <= target) {
      r.d_min = d;
      r.footprint = 2LL * d * d;
      r.p_l = pl;
      return r;
    }
  }
  throw std::runtime_error("no distance up to d_max reaches the target");
}

}  // namespace burstqec
