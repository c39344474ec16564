#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "burstqec/code_model.h"

namespace burstqec {

enum class NoiseModelKind : std::uint8_t { Phenomenological, CircuitDepolarizing };

std::string_view model_name(NoiseModelKind kind);
NoiseModelKind parse_model(std::string_view name);

struct NoiseConfig {
  NoiseModelKind model = NoiseModelKind::Phenomenological;
  double p = 0.0;
  double p_burst = 0.0;
  std::optional<int> burst_round;

  /// Throws std::invalid_argument unless 0 <= p, p_burst < 1/2 and the burst
  /// round (if any) addresses one of `rounds` rounds.
  void validate(int rounds) const;
  double rate_for_round(int round) const {
    return (burst_round && *burst_round == round) ? p_burst : p;
  }
};

/// Pauli acting on the targets of one channel. Bit i of `xs`/`zs` refers to
/// the i-th target.
struct LocalPauli {
  std::uint8_t xs = 0;
  std::uint8_t zs = 0;
  friend bool operator==(const LocalPauli&, const LocalPauli&) = default;
};

enum class ChannelKind : std::uint8_t { BitFlip, Depolarize1, Depolarize2, MeasureFlip };

struct NoiseChannel {
  ChannelKind kind = ChannelKind::BitFlip;
  double rate = 0.0;
  std::vector<QubitId> targets;
  // Includes the identity outcome; probabilities sum to one.
  std::vector<std::pair<LocalPauli, double>> outcomes;
};

/// Outcome table for a channel of the given kind acting on 1 or 2 qubits.
std::vector<std::pair<LocalPauli, double>> channel_outcomes(ChannelKind kind, double rate);

/// Channels described by one noise instruction (one per target group), or by
/// the flip rate of a measurement instruction.
std::vector<NoiseChannel> channels_of(const Instruction& inst);

CircuitSpec attach_phenomenological(const CircuitSpec& circuit, const NoiseConfig& cfg);
CircuitSpec attach_circuit_depolarizing(const CircuitSpec& circuit, const NoiseConfig& cfg);
CircuitSpec attach_noise(const CircuitSpec& circuit, const NoiseConfig& cfg);

}  // namespace burstqec
