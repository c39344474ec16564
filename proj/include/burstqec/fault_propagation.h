#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "burstqec/code_model.h"
#include "burstqec/noise_model.h"

namespace burstqec {

struct PauliTerm {
  QubitId qubit = 0;
  bool x = false;
  bool z = false;
};
using PauliString = std::vector<PauliTerm>;

/// Detectors (sorted, unique) and observable parity flipped by one fault.
struct Signature {
  std::vector<std::uint32_t> detectors;
  bool flips_observable = false;
  friend bool operator==(const Signature&, const Signature&) = default;
};

Signature xor_signatures(const Signature& a, const Signature& b);

/// Forward Pauli-frame propagation of single faults through a Clifford
/// circuit. Holds the measurement-to-detector index so repeated queries on
/// the same circuit stay cheap.
class FaultPropagator {
 public:
  explicit FaultPropagator(const CircuitSpec& circuit);

  /// Signature of `pauli` inserted immediately after instruction `location`.
  /// The Pauli must be supported on that instruction's targets.
  Signature propagate(std::size_t location, const PauliString& pauli) const;
  /// As propagate(), without the support check: the Pauli may act on any
  /// qubit at that point of the circuit.
  Signature propagate_after(std::size_t location, const PauliString& pauli) const;
  /// Signature of a classical flip of measurement record `record`.
  Signature measurement_flip(std::uint32_t record) const;

  const CircuitSpec& circuit() const { return circuit_; }

 private:
  Signature signature_from_records(const std::vector<std::uint32_t>& flipped) const;

  const CircuitSpec& circuit_;
  std::vector<std::uint32_t> offsets_;
  std::vector<std::vector<std::uint32_t>> record_detectors_;
  std::vector<std::uint8_t> record_in_observable_;
};

Signature propagate_pauli(const CircuitSpec& circuit, std::size_t location, const PauliString& pauli);

/// One independent channel outcome half (X part or Z part) feeding a
/// mechanism. Its probability is factor * rate, where rate is the noise
/// parameter of `round`.
struct FaultContribution {
  std::uint32_t instruction = 0;
  std::uint32_t qubits[2] = {kNoQubit, kNoQubit};
  LocalPauli pauli;
  int round = 0;
  double factor = 1.0;
  double rate = 0.0;
  double probability() const { return factor * rate; }
};

struct FaultMechanism {
  double probability = 0.0;
  std::vector<std::uint32_t> detectors;
  bool flips_observable = false;
  std::vector<FaultContribution> provenance;
};

struct DetectorInfo {
  Coord coord;
  int round = 0;
  CheckType type = CheckType::Z;
};

struct DetectorErrorModel {
  std::size_t detector_count = 0;
  std::size_t observable_count = 1;
  std::vector<FaultMechanism> mechanisms;
  std::vector<DetectorInfo> detectors;
};

/// Probability that exactly one of two independent events fires.
inline double xor_probability(double a, double b) { return a * (1.0 - b) + b * (1.0 - a); }

/// Splits every channel outcome into X and Z parts, propagates each, and
/// merges equal signatures. Throws std::runtime_error when a part flips more
/// than two detectors or flips the observable without touching any detector.
DetectorErrorModel build_detector_error_model(const CircuitSpec& noisy);

/// Re-merges mechanisms that share a signature; a no-op on a built model.
DetectorErrorModel merge_mechanisms(const DetectorErrorModel& dem);

void write_dem(std::ostream& out, const DetectorErrorModel& dem);
std::string dem_to_string(const DetectorErrorModel& dem);

}  // namespace burstqec
