#include "burstqec/burst_inference.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "burstqec/rng.h"
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>

namespace burstqec {

DetectorPanel select_panel(const DecodingGraph& graph, int round, PanelFilter filter) {
  std::vector<std::uint32_t> slice;
  for (std::uint32_t v = 0; v < graph.detector_count(); ++v) {
    if (graph.detectors()[v].round == round) slice.push_back(v);
  }
  if (slice.empty()) throw std::invalid_argument("round " + std::to_string(round) + " has no detectors");

  DetectorPanel panel;
  panel.round = round;
  std::vector<std::uint32_t> eligible = slice;
  if (filter == PanelFilter::UniformDegree) {
    std::map<std::size_t, std::size_t> count;
    for (std::uint32_t v : slice) ++count[graph.degree(v)];
    std::size_t best = 0, best_count = 0;
    for (const auto& [deg, c] : count) {
      if (c >= best_count) {
        best = deg;
        best_count = c;
      }
    }
    eligible.clear();
    for (std::uint32_t v : slice) {
      if (graph.degree(v) == best) eligible.push_back(v);
    }
  }

  std::set<std::uint32_t> blocked;
  for (std::uint32_t v : eligible) {
    if (blocked.count(v)) continue;
    panel.vertices.push_back(v);
    for (const std::uint32_t* e = graph.incident_begin(v); e != graph.incident_end(v); ++e) {
      const std::uint32_t u = graph.other_end(*e, v);
      if (u != graph.boundary()) blocked.insert(u);
    }
  }
  if (panel.vertices.empty()) throw std::invalid_argument("empty panel");
  if (filter == PanelFilter::UniformDegree) {
    panel.w = static_cast<int>(graph.degree(panel.vertices.front()));
  } else {
    std::size_t lo = graph.degree(panel.vertices.front()), hi = lo;
    for (std::uint32_t v : panel.vertices) {
      lo = std::min(lo, graph.degree(v));
      hi = std::max(hi, graph.degree(v));
    }
    panel.w = lo == hi ? static_cast<int>(lo) : 0;
  }
  return panel;
}

std::vector<DetectorPanel> select_all_panels(const DecodingGraph& graph, PanelFilter filter) {
  std::set<int> rounds;
  for (const DetectorInfo& d : graph.detectors()) rounds.insert(d.round);
  std::vector<DetectorPanel> panels;
  for (int r : rounds) {
    try {
      panels.push_back(select_panel(graph, r, filter));
    } catch (const std::invalid_argument&) {
    }
  }
  return panels;
}

namespace {

void check_rate(double p) {
  if (!(p >= 0.0 && p < 0.5)) throw std::invalid_argument("rate must lie in [0, 1/2)");
}

}  // namespace

double odd_parity_prob(double p, int w) {
  check_rate(p);
  if (w < 1) throw std::invalid_argument("w must be >= 1");
  double sum = 0.0;
  double binom = 1.0;  // C(w, k)
  for (int k = 1; k <= w; ++k) {
    binom = binom * (w - k + 1) / k;
    if (k % 2 == 1) sum += binom * std::pow(p, k) * std::pow(1.0 - p, w - k);
  }
  return sum;
}

double odd_parity_closed_form(double p, int w) {
  check_rate(p);
  if (w < 1) throw std::invalid_argument("w must be >= 1");
  return -std::expm1(w * std::log1p(-2.0 * p)) / 2.0;
}

double kl_divergence(double a, double b) {
  if (!(b > 0.0 && b < 1.0) || !(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("bad KL arguments");
  double d = 0.0;
  if (a > 0.0) d += a * std::log(a / b);
  if (a < 1.0) d += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  return d;
}

double decision_point(double p1, double p2) {
  if (!(p1 > 0.0 && p1 < p2 && p2 < 1.0)) throw std::invalid_argument("decision point needs 0 < p1 < p2 < 1");
  // Both logs written as log1p of a small exact difference.
  const double num = std::log1p((p1 - p2) / (1.0 - p1));
  const double den = std::log1p((p1 - p2) / p2) + num;
  const double alpha = num / den;
  if (!(alpha > p1 && alpha < p2)) throw std::logic_error("decision point outside (p1, p2)");
  return alpha;
}

double log_likelihood_ratio(std::size_t weight, std::size_t n, double p1, double p2) {
  if (weight > n) throw std::invalid_argument("weight exceeds panel size");
  const double k = static_cast<double>(weight);
  return k * std::log(p1 / p2) + (static_cast<double>(n) - k) * std::log((1.0 - p1) / (1.0 - p2));
}

BurstDecision ml_estimate(std::size_t weight, std::size_t n, double p1, double p2) {
  return log_likelihood_ratio(weight, n, p1, p2) < 0.0 ? BurstDecision::Burst : BurstDecision::Background;
}

BurstDecision ml_estimate(const std::vector<std::uint8_t>& panel_bits, double p1, double p2) {
  std::size_t weight = 0;
  for (auto b : panel_bits) weight += b != 0;
  return ml_estimate(weight, panel_bits.size(), p1, p2);
}

std::pair<double, double> error_bounds(std::size_t n, double p1, double p2) {
  if (n == 0) throw std::invalid_argument("empty panel");
  const double alpha = decision_point(p1, p2);
  const double nn = static_cast<double>(n);
  return {std::exp(-nn * kl_divergence(alpha, p1)), std::exp(-nn * kl_divergence(alpha, p2))};
}

BurstTestModel make_test_model(double p, double p_burst, std::size_t n, int w) {
  if (!(p > 0.0 && p < p_burst && p_burst < 0.5)) throw std::invalid_argument("need 0 < p < p_B < 1/2");
  BurstTestModel m;
  m.p = p;
  m.p_burst = p_burst;
  m.n = n;
  m.w = w;
  m.p1 = odd_parity_prob(p, w);
  m.p2 = odd_parity_prob(p_burst, w);
  m.alpha = decision_point(m.p1, m.p2);
  std::tie(m.bound_false_pos, m.bound_false_neg) = error_bounds(n, m.p1, m.p2);
  return m;
}

namespace {

// Counts trials whose decision differs from `truth`.
std::uint64_t count_errors(double rate, std::size_t n, int w, std::uint64_t trials, const BurstTestModel& m,
                           BurstDecision truth, Rng& rng) {
  if (rate <= 0.0) return ml_estimate(0, n, m.p1, m.p2) == truth ? 0 : trials;
  const double log_q = std::log1p(-rate);
  const std::uint64_t per_trial = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(w);
  std::vector<std::uint8_t> parity(n, 0);
  std::vector<std::uint32_t> touched;
  std::uint64_t errors = 0;
  std::uint64_t next = rng.geometric_gap(log_q);
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::size_t weight = 0;
    while (next < per_trial) {
      const auto v = static_cast<std::uint32_t>(next / static_cast<std::uint64_t>(w));
      parity[v] ^= 1;
      if (parity[v]) {
        ++weight;
      } else {
        --weight;
      }
      touched.push_back(v);
      const std::uint64_t gap = rng.geometric_gap(log_q);
      next = gap >= UINT64_MAX - next ? UINT64_MAX : next + gap + 1;
    }
    next = next == UINT64_MAX ? next : next - per_trial;
    errors += ml_estimate(weight, n, m.p1, m.p2) != truth;
    for (std::uint32_t v : touched) parity[v] = 0;
    touched.clear();
  }
  return errors;
}

}  // namespace

DecisionErrorRates simulate_decision_errors(double p, double p_burst, std::size_t n, int w, std::uint64_t trials,
                                            std::uint64_t seed) {
  const BurstTestModel m = make_test_model(p, p_burst, n, w);
  DecisionErrorRates r;
  r.trials = trials;
  Rng background(seed, 0), burst(seed, 1);
  r.false_pos = count_errors(p, n, w, trials, m, BurstDecision::Background, background);
  r.false_neg = count_errors(p_burst, n, w, trials, m, BurstDecision::Burst, burst);
  return r;
}

std::vector<RoundStatistic> scan_rounds(const DecodingGraph& graph, const std::vector<DetectorPanel>& panels,
                                        const std::uint64_t* detector_bits, double p, double p_burst) {
  std::vector<RoundStatistic> out;
  for (const DetectorPanel& panel : panels) {
    if (panel.w < 1) continue;
    const BurstTestModel m = make_test_model(p, p_burst, panel.size(), panel.w);
    RoundStatistic s;
    s.round = panel.round;
    s.n = panel.size();
    s.w = panel.w;
    for (std::uint32_t v : panel.vertices) {
      if (v >= graph.detector_count()) throw std::invalid_argument("panel vertex outside graph");
      s.weight += (detector_bits[v / 64] >> (v % 64)) & 1;
    }
    s.llr = log_likelihood_ratio(s.weight, s.n, m.p1, m.p2);
    s.decision = s.llr < 0.0 ? BurstDecision::Burst : BurstDecision::Background;
    s.bound_false_pos = m.bound_false_pos;
    s.bound_false_neg = m.bound_false_neg;
    out.push_back(s);
  }
  return out;
}

}  // namespace burstqec
