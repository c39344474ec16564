#include "burstqec/code_model.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "burstqec/fault_propagation.h"
#include "support/tableau.h"

using namespace burstqec;

namespace {

std::size_t overlap(const std::vector<QubitId>& a, const std::vector<QubitId>& b) {
  std::size_t n = 0;
  for (QubitId q : a) n += std::count(b.begin(), b.end(), q);
  return n;
}

std::size_t index_of_measure(const CircuitSpec& c, int round) {
  for (std::size_t i = 0; i < c.instructions.size(); ++i) {
    if (c.instructions[i].op == OpCode::Measure && c.instructions[i].round == round) return i;
  }
  return SIZE_MAX;
}

}  // namespace

TEST(BuildLayout, CountsMatchRotatedCode) {
  for (int d : {3, 5, 7, 9}) {
    const CodeLayout layout = build_layout(d);
    EXPECT_EQ(layout.data_qubits.size(), static_cast<std::size_t>(d * d));
    EXPECT_EQ(layout.x_checks.size(), static_cast<std::size_t>((d * d - 1) / 2));
    EXPECT_EQ(layout.z_checks.size(), static_cast<std::size_t>((d * d - 1) / 2));
    EXPECT_EQ(layout.num_qubits(), static_cast<std::size_t>(2 * d * d - 1));
    EXPECT_EQ(layout.footprint_qubits(), static_cast<std::size_t>(2 * d * d));
  }
}

TEST(BuildLayout, RejectsEvenOrSmallDistance) {
  EXPECT_THROW(build_layout(2), std::invalid_argument);
  EXPECT_THROW(build_layout(4), std::invalid_argument);
  EXPECT_THROW(build_layout(1), std::invalid_argument);
  EXPECT_THROW(build_layout(-3), std::invalid_argument);
}

TEST(BuildLayout, Deterministic) {
  const CodeLayout a = build_layout(5);
  const CodeLayout b = build_layout(5);
  ASSERT_EQ(a.x_checks.size(), b.x_checks.size());
  for (std::size_t i = 0; i < a.x_checks.size(); ++i) {
    EXPECT_EQ(a.x_checks[i].support, b.x_checks[i].support);
    EXPECT_EQ(a.x_checks[i].coord, b.x_checks[i].coord);
  }
  EXPECT_EQ(a.logical_z_support, b.logical_z_support);
}

TEST(BuildLayout, StabilizersCommuteAndLogicalIsValid) {
  for (int d : {3, 5, 7}) {
    const CodeLayout layout = build_layout(d);
    for (const Check& x : layout.x_checks) {
      for (const Check& z : layout.z_checks) EXPECT_EQ(overlap(x.support, z.support) % 2, 0u);
      EXPECT_EQ(overlap(x.support, layout.logical_z_support) % 2, 0u);
    }
    EXPECT_EQ(layout.logical_z_support.size(), static_cast<std::size_t>(d));
    for (QubitId q : layout.logical_z_support) EXPECT_EQ(layout.data_qubits[q].x, 1);

    std::vector<int> touches(layout.num_data(), 0);
    for (const auto* checks : {&layout.x_checks, &layout.z_checks}) {
      for (const Check& c : *checks) {
        EXPECT_TRUE(c.support.size() == 2 || c.support.size() == 4);
        for (QubitId q : c.support) ++touches[q];
      }
    }
    for (int t : touches) EXPECT_GE(t, 2);
  }
}

TEST(BuildMemoryCircuit, MeasurementCounts) {
  const CircuitSpec c = build_memory_circuit(build_layout(3), 6);
  EXPECT_EQ(c.num_measurements, 6u * 8u + 9u);
  int per_round[6] = {};
  for (const Instruction& inst : c.instructions) {
    if (inst.op == OpCode::Measure && inst.round < 6) per_round[inst.round] += static_cast<int>(inst.targets.size());
  }
  for (int r = 0; r < 6; ++r) EXPECT_EQ(per_round[r], 8);
}

TEST(BuildMemoryCircuit, SingleRoundDetectorSet) {
  // T=1: four round-0 Z detectors compared against +1, then four final
  // comparisons; X detectors need two rounds and do not appear.
  const CodeLayout layout = build_layout(3);
  const CircuitSpec c = build_memory_circuit(layout, 1);
  ASSERT_EQ(c.detectors.size(), 8u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c.detectors[i].type, CheckType::Z);
    EXPECT_EQ(c.detectors[i].round, 0);
    EXPECT_EQ(c.detectors[i].measurements.size(), 1u);
    EXPECT_EQ(c.detectors[i].coord, layout.z_checks[i].coord);
  }
  for (std::size_t i = 4; i < 8; ++i) {
    EXPECT_EQ(c.detectors[i].type, CheckType::Z);
    EXPECT_EQ(c.detectors[i].round, 1);
    EXPECT_EQ(c.detectors[i].measurements.size(), 1u + layout.z_checks[i - 4].support.size());
  }
}

TEST(BuildMemoryCircuit, DetectorRoundsSpanZeroToT) {
  const int T = 5;
  const CircuitSpec c = build_memory_circuit(build_layout(3), T);
  std::set<int> rounds;
  for (const DetectorDef& det : c.detectors) {
    rounds.insert(det.round);
    for (auto m : det.measurements) EXPECT_LT(m, c.num_measurements);
  }
  EXPECT_EQ(*rounds.begin(), 0);
  EXPECT_EQ(*rounds.rbegin(), T);
  EXPECT_EQ(rounds.size(), static_cast<std::size_t>(T + 1));
}

TEST(BuildMemoryCircuit, RejectsZeroRounds) {
  EXPECT_THROW(build_memory_circuit(build_layout(3), 0), std::invalid_argument);
}

TEST(BuildMemoryCircuit, NoiselessTableauFlipsNothing) {
  for (int d : {3, 5, 7}) {
    const CodeLayout layout = build_layout(d);
    for (int T : {1, 2 * d}) {
      const CircuitSpec c = build_memory_circuit(layout, T);
      for (std::uint64_t seed : {1u, 2u}) {
        const auto run = oracle::run_tableau(c, seed);
        EXPECT_EQ(std::count(run.detectors.begin(), run.detectors.end(), 1), 0) << "d=" << d << " T=" << T;
        EXPECT_FALSE(run.observable);
      }
    }
  }
}

TEST(BuildMemoryCircuit, DataXErrorBetweenRoundsFlipsAdjacentZDetectors) {
  for (int d : {3, 5}) {
    const CodeLayout layout = build_layout(d);
    const int T = 4;
    const CircuitSpec c = build_memory_circuit(layout, T);
    FaultPropagator prop(c);
    const std::size_t loc = index_of_measure(c, 1);
    for (QubitId q = 0; q < layout.num_data(); ++q) {
      std::size_t z_neighbours = 0;
      for (const Check& z : layout.z_checks) z_neighbours += std::count(z.support.begin(), z.support.end(), q);
      const Signature sig = prop.propagate_after(loc, {{q, true, false}});
      EXPECT_EQ(sig.detectors.size(), z_neighbours);
      EXPECT_TRUE(z_neighbours == 1 || z_neighbours == 2);
      for (auto det : sig.detectors) {
        EXPECT_EQ(c.detectors[det].type, CheckType::Z);
        EXPECT_EQ(c.detectors[det].round, 2);
      }
      // The tableau oracle agrees on the flipped set.
      const auto run = oracle::run_tableau(c, 7, loc, {{q, true, false}});
      std::vector<std::uint32_t> flipped;
      for (std::uint32_t i = 0; i < run.detectors.size(); ++i) {
        if (run.detectors[i]) flipped.push_back(i);
      }
      EXPECT_EQ(flipped, sig.detectors);
      const bool on_logical = std::count(layout.logical_z_support.begin(), layout.logical_z_support.end(), q) > 0;
      EXPECT_EQ(sig.flips_observable, on_logical);
      EXPECT_EQ(run.observable, on_logical);
    }
  }
}

TEST(BuildMemoryCircuit, LogicalXStringFlipsObservable) {
  const CodeLayout layout = build_layout(3);
  const CircuitSpec c = build_memory_circuit(layout, 3);
  FaultPropagator prop(c);
  const std::size_t loc = index_of_measure(c, 0);
  PauliString all;
  Signature expected;
  for (QubitId q : layout.logical_z_support) {
    all.push_back({q, true, false});
    expected = xor_signatures(expected, prop.propagate_after(loc, {{q, true, false}}));
  }
  const Signature sig = prop.propagate_after(loc, all);
  EXPECT_TRUE(sig.flips_observable);
  EXPECT_EQ(sig, expected);
}

TEST(CircuitText, RoundTrips) {
  const CircuitSpec c = build_memory_circuit(build_layout(3), 2);
  const std::string text = circuit_to_string(c);
  std::istringstream in(text);
  const CircuitSpec parsed = parse_circuit(in);
  EXPECT_EQ(circuit_to_string(parsed), text);
  EXPECT_EQ(parsed.num_measurements, c.num_measurements);
}

TEST(CircuitText, GoldenHeader) {
  const std::string text = circuit_to_string(build_memory_circuit(build_layout(3), 1));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "BURSTQEC_CIRCUIT 1");
  std::getline(in, line);
  EXPECT_EQ(line, "QUBITS 17");
  std::getline(in, line);
  EXPECT_EQ(line, "ROUNDS 1");
  std::getline(in, line);
  EXPECT_EQ(line, "R 0 1 2 3 4 5 6 7 8 @ 0 0");
}
