#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "burstqec/decoding_graph.h"

namespace burstqec {

enum class PanelFilter { UniformDegree, None };

/// Pairwise non-adjacent detectors of one round. `w` counts incident
/// mechanisms per vertex, boundary edges included.
struct DetectorPanel {
  int round = 0;
  std::vector<std::uint32_t> vertices;
  int w = 0;
  std::size_t size() const { return vertices.size(); }
};

/// Greedy maximal independent set over the round's detectors in ascending
/// index order. With UniformDegree only vertices of the most common degree
/// (larger degree on ties) are eligible. Throws std::invalid_argument if the
/// round has no detectors or the panel comes out empty.
DetectorPanel select_panel(const DecodingGraph& graph, int round, PanelFilter filter = PanelFilter::UniformDegree);

/// Probability that an odd number of w independent rate-p faults fire, as the
/// explicit binomial sum.
double odd_parity_prob(double p, int w);
/// (1 - (1 - 2p)^w) / 2
double odd_parity_closed_form(double p, int w);

/// Bernoulli relative entropy D(a || b).
double kl_divergence(double a, double b);

/// Threshold on |x|/n between the two hypotheses. Requires 0 < p1 < p2 < 1.
double decision_point(double p1, double p2);

/// l(|x|) = |x| log(p1/p2) + (n - |x|) log((1-p1)/(1-p2))
double log_likelihood_ratio(std::size_t weight, std::size_t n, double p1, double p2);

enum class BurstDecision { Background, Burst };

/// Burst iff l(|x|) < 0.
BurstDecision ml_estimate(std::size_t weight, std::size_t n, double p1, double p2);
BurstDecision ml_estimate(const std::vector<std::uint8_t>& panel_bits, double p1, double p2);

/// Chernoff bounds exp(-n D(alpha||p1)) on false positives and
/// exp(-n D(alpha||p2)) on false negatives.
std::pair<double, double> error_bounds(std::size_t n, double p1, double p2);

struct BurstTestModel {
  double p = 0.0;
  double p_burst = 0.0;
  std::size_t n = 0;
  int w = 0;
  double p1 = 0.0;
  double p2 = 0.0;
  double alpha = 0.0;
  double bound_false_pos = 0.0;
  double bound_false_neg = 0.0;
};

/// Requires 0 < p < p_burst < 1/2.
BurstTestModel make_test_model(double p, double p_burst, std::size_t n, int w);

struct RoundStatistic {
  int round = 0;
  std::size_t n = 0;
  int w = 0;
  std::size_t weight = 0;
  double llr = 0.0;
  BurstDecision decision = BurstDecision::Background;
  double bound_false_pos = 0.0;
  double bound_false_neg = 0.0;
};

/// Runs the test on every round that yields a panel. `detector_bits` holds
/// one shot packed 64 per word. Rounds without a usable panel are skipped.
std::vector<RoundStatistic> scan_rounds(const DecodingGraph& graph, const std::vector<DetectorPanel>& panels,
                                        const std::uint64_t* detector_bits, double p, double p_burst);

struct DecisionErrorRates {
  std::uint64_t trials = 0;
  std::uint64_t false_pos = 0;  // burst declared on background draws
  std::uint64_t false_neg = 0;  // background declared on burst draws
};

/// Monte Carlo of the toy model: every panel vertex sees w independent fault
/// locations firing at p (background) or p_burst (burst).
DecisionErrorRates simulate_decision_errors(double p, double p_burst, std::size_t n, int w, std::uint64_t trials,
                                            std::uint64_t seed);

/// Panels for every round present in the graph that admits one.
std::vector<DetectorPanel> select_all_panels(const DecodingGraph& graph, PanelFilter filter = PanelFilter::UniformDegree);

}  // namespace burstqec
