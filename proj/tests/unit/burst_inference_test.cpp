#include "burstqec/burst_inference.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "burstqec/sampler.h"

using namespace burstqec;

namespace {

GraphEdge edge(std::uint32_t u, std::uint32_t v) {
  GraphEdge e;
  e.u = u;
  e.v = v;
  e.probability = 0.01;
  e.weight = edge_weight(0.01);
  e.sources.push_back({1.0, 0.01, 0});
  return e;
}

// Detectors 0..k-1 on a line, all in round 0.
DecodingGraph line_graph(std::uint32_t k, bool boundary_ends) {
  std::vector<DetectorInfo> dets(k);
  std::vector<GraphEdge> edges;
  for (std::uint32_t v = 0; v + 1 < k; ++v) edges.push_back(edge(v, v + 1));
  if (boundary_ends) {
    edges.push_back(edge(0, k));
    edges.push_back(edge(k - 1, k));
  }
  return DecodingGraph(dets, edges);
}

// Size of a maximum independent set by enumeration.
std::size_t exhaustive_mis(const DecodingGraph& g, const std::vector<std::uint32_t>& vs) {
  const std::size_t k = vs.size();
  std::vector<std::uint64_t> adj(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (const std::uint32_t* e = g.incident_begin(vs[a]); e != g.incident_end(vs[a]); ++e) {
      const std::uint32_t u = g.other_end(*e, vs[a]);
      for (std::size_t b = 0; b < k; ++b) {
        if (vs[b] == u) adj[a] |= 1ull << b;
      }
    }
  }
  std::size_t best = 0;
  for (std::uint64_t mask = 0; mask < (1ull << k); ++mask) {
    bool ok = true;
    for (std::size_t a = 0; a < k && ok; ++a) {
      if ((mask >> a & 1) && (adj[a] & mask)) ok = false;
    }
    if (ok) best = std::max<std::size_t>(best, __builtin_popcountll(mask));
  }
  return best;
}

}  // namespace

TEST(SelectPanel, SingleVertex) {
  const DecodingGraph g = line_graph(1, true);
  const DetectorPanel panel = select_panel(g, 0);
  EXPECT_EQ(panel.size(), 1u);
}

TEST(SelectPanel, PathTakesEveryOtherVertex) {
  const DecodingGraph closed = line_graph(5, true);
  EXPECT_EQ(select_panel(closed, 0).vertices, (std::vector<std::uint32_t>{0, 2, 4}));
  EXPECT_EQ(select_panel(closed, 0).w, 2);
  const DecodingGraph open = line_graph(5, false);
  EXPECT_EQ(select_panel(open, 0, PanelFilter::None).vertices, (std::vector<std::uint32_t>{0, 2, 4}));
  EXPECT_EQ(select_panel(open, 0, PanelFilter::None).w, 0);
  EXPECT_EQ(select_panel(open, 0).vertices, (std::vector<std::uint32_t>{1, 3}));
}

TEST(SelectPanel, RejectsMissingRound) {
  EXPECT_THROW(select_panel(line_graph(3, true), 4), std::invalid_argument);
}

TEST(SelectPanel, BulkSliceIsIndependentUniformAndNearMaximum) {
  for (auto model : {NoiseModelKind::Phenomenological, NoiseModelKind::CircuitDepolarizing}) {
    const CircuitSpec c = attach_noise(build_memory_circuit(build_layout(5), 6), {model, 0.01, 0.01, std::nullopt});
    const DecodingGraph g = build_graph(build_detector_error_model(c));
    const DetectorPanel panel = select_panel(g, 3);
    std::vector<std::uint32_t> eligible;
    for (std::uint32_t v = 0; v < g.detector_count(); ++v) {
      if (g.detectors()[v].round == 3 && static_cast<int>(g.degree(v)) == panel.w) eligible.push_back(v);
    }
    for (std::uint32_t v : panel.vertices) {
      EXPECT_EQ(static_cast<int>(g.degree(v)), panel.w);
      for (const std::uint32_t* e = g.incident_begin(v); e != g.incident_end(v); ++e) {
        const std::uint32_t u = g.other_end(*e, v);
        EXPECT_EQ(std::count(panel.vertices.begin(), panel.vertices.end(), u), 0);
      }
    }
    ASSERT_LE(eligible.size(), 30u);
    const std::size_t best = exhaustive_mis(g, eligible);
    std::size_t max_degree = 1;
    for (std::uint32_t v : eligible) max_degree = std::max(max_degree, g.degree(v));
    EXPECT_LE(panel.size(), best);
    EXPECT_GE(panel.size() * max_degree, best);
  }
}

TEST(OddParity, BinomialSumEqualsClosedFormOnGrid) {
  for (double p : {0.001, 0.005, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4}) {
    for (int w = 1; w <= 20; ++w) {
      EXPECT_NEAR(odd_parity_prob(p, w), odd_parity_closed_form(p, w), 1e-12) << p << " " << w;
    }
  }
}

TEST(OddParity, KnownValues) {
  EXPECT_DOUBLE_EQ(odd_parity_prob(0.137, 1), 0.137);
  EXPECT_NEAR(odd_parity_prob(0.01, 10), 0.0914636, 1e-6);
  EXPECT_NEAR(odd_parity_prob(0.1, 10), 0.4463129, 1e-6);
  EXPECT_EQ(odd_parity_prob(0.0, 5), 0.0);
  EXPECT_THROW(odd_parity_prob(0.5, 3), std::invalid_argument);
  EXPECT_THROW(odd_parity_prob(0.1, 0), std::invalid_argument);
}

TEST(DecisionPoint, DirectFormulaAndInterval) {
  const double p1 = 0.091464, p2 = 0.446313;
  const double alpha = decision_point(p1, p2);
  const double direct = std::log((1 - p2) / (1 - p1)) / std::log(p1 * (1 - p2) / (p2 * (1 - p1)));
  EXPECT_NEAR(alpha, direct, 1e-14);
  EXPECT_GT(alpha, p1);
  EXPECT_LT(alpha, p2);
}

TEST(DecisionPoint, SymmetricCaseIsOneHalf) {
  for (double p1 : {0.1, 0.25, 0.4, 0.49}) EXPECT_NEAR(decision_point(p1, 1 - p1), 0.5, 1e-12);
}

TEST(DecisionPoint, FiniteForCloseRates) {
  for (double p1 : {1e-4, 0.01, 0.3}) {
    const double p2 = p1 + 1e-9;
    const double alpha = decision_point(p1, p2);
    EXPECT_TRUE(std::isfinite(alpha));
    EXPECT_GT(alpha, p1);
    EXPECT_LT(alpha, p2);
  }
  EXPECT_THROW(decision_point(0.2, 0.2), std::invalid_argument);
}

TEST(MlEstimate, ExtremesAndThreshold) {
  const double p1 = 0.0914636, p2 = 0.4463129;
  EXPECT_EQ(ml_estimate(0, 100, p1, p2), BurstDecision::Background);
  EXPECT_EQ(ml_estimate(100, 100, p1, p2), BurstDecision::Burst);
  const double alpha = decision_point(p1, p2);
  const auto above = static_cast<std::size_t>(std::ceil(alpha * 100));
  const auto below = static_cast<std::size_t>(std::floor(alpha * 100));
  ASSERT_LT(below, above);
  EXPECT_EQ(ml_estimate(above, 100, p1, p2), BurstDecision::Burst);
  EXPECT_EQ(ml_estimate(below, 100, p1, p2), BurstDecision::Background);
  std::vector<std::uint8_t> bits(100, 0);
  std::fill(bits.begin(), bits.begin() + above, 1);
  EXPECT_EQ(ml_estimate(bits, p1, p2), BurstDecision::Burst);
}

TEST(MlEstimate, DecisionChangesExactlyOnce) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.001, 0.49);
  for (int trial = 0; trial < 200; ++trial) {
    double p1 = u(rng), p2 = u(rng);
    if (p1 == p2) continue;
    if (p1 > p2) std::swap(p1, p2);
    const std::size_t n = 1 + rng() % 300;
    int changes = 0;
    for (std::size_t k = 1; k <= n; ++k) changes += ml_estimate(k, n, p1, p2) != ml_estimate(k - 1, n, p1, p2);
    EXPECT_LE(changes, 1);
    EXPECT_EQ(ml_estimate(0, n, p1, p2), BurstDecision::Background);
  }
}

TEST(ErrorBounds, RepresentativeParameters) {
  const BurstTestModel m = make_test_model(0.01, 0.1, 100, 10);
  EXPECT_LE(m.bound_false_pos, 1e-4);
  EXPECT_LE(m.bound_false_neg, 1e-4);
  EXPECT_GT(m.bound_false_pos, 0.0);
  EXPECT_GT(m.alpha, m.p1);
  EXPECT_LT(m.alpha, m.p2);
}

TEST(ErrorBounds, ExponentIsLinearInN) {
  const auto [fp1, fn1] = error_bounds(37, 0.05, 0.2);
  const auto [fp2, fn2] = error_bounds(74, 0.05, 0.2);
  EXPECT_NEAR(fp2, fp1 * fp1, 1e-15);
  EXPECT_NEAR(fn2, fn1 * fn1, 1e-15);
}

TEST(ErrorBounds, KlDivergence) {
  EXPECT_EQ(kl_divergence(0.3, 0.3), 0.0);
  EXPECT_NEAR(kl_divergence(0.5, 0.25), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-15);
  EXPECT_NEAR(kl_divergence(0.0, 0.2), -std::log(0.8), 1e-15);
}

TEST(ErrorBounds, MonteCarloFrequenciesStayBelowBounds) {
  // Loose parameters so that errors actually occur.
  const std::uint64_t trials = 200000;
  const BurstTestModel m = make_test_model(0.02, 0.06, 40, 6);
  const DecisionErrorRates r = simulate_decision_errors(0.02, 0.06, 40, 6, trials, 11);
  const double fp = static_cast<double>(r.false_pos) / trials;
  const double fn = static_cast<double>(r.false_neg) / trials;
  EXPECT_GT(r.false_pos, 0u);
  EXPECT_GT(r.false_neg, 0u);
  EXPECT_LE(fp, m.bound_false_pos + 3 * std::sqrt(m.bound_false_pos / trials));
  EXPECT_LE(fn, m.bound_false_neg + 3 * std::sqrt(m.bound_false_neg / trials));
}

TEST(ErrorBounds, SimulatedBitsHaveOddParityMarginal) {
  // With n = 1 and a decision point below the burst marginal, false negatives
  // are exactly the zero-parity draws.
  const std::uint64_t trials = 400000;
  const BurstTestModel m = make_test_model(0.01, 0.1, 1, 10);
  ASSERT_LT(m.alpha, 1.0);
  const DecisionErrorRates r = simulate_decision_errors(0.01, 0.1, 1, 10, trials, 5);
  const double expected = 1 - m.p2;
  EXPECT_NEAR(static_cast<double>(r.false_neg) / trials, expected, 4 * std::sqrt(expected * (1 - expected) / trials));
  EXPECT_NEAR(static_cast<double>(r.false_pos) / trials, m.p1, 4 * std::sqrt(m.p1 * (1 - m.p1) / trials));
}

TEST(ScanRounds, FlagsTheBurstRound) {
  const CircuitSpec c =
      attach_noise(build_memory_circuit(build_layout(9), 10), {NoiseModelKind::Phenomenological, 0.005, 0.15, 5});
  const DecodingGraph g = build_graph(build_detector_error_model(c));
  const auto panels = select_all_panels(g);
  const ShotBatch batch = sample(c, 20, 8);
  int hits = 0, false_alarms = 0;
  for (std::size_t s = 0; s < batch.num_shots; ++s) {
    for (const RoundStatistic& r : scan_rounds(g, panels, batch.shot_words(s), 0.005, 0.15)) {
      if (r.decision != BurstDecision::Burst) continue;
      // Burst-round measurement flips also light up the following slice.
      if (r.round == 5) {
        ++hits;
      } else if (r.round != 6) {
        ++false_alarms;
      }
    }
  }
  EXPECT_GE(hits, 18);
  EXPECT_LE(false_alarms, 2);
}
