#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace burstqec {

using QubitId = std::uint32_t;

struct Coord {
  int x = 0;
  int y = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

enum class CheckType : std::uint8_t { X, Z };

struct Check {
  CheckType type = CheckType::Z;
  Coord coord;
  QubitId ancilla = 0;
  // Data neighbours in schedule order. Boundary checks have weight 2, so the
  // slot for a missing neighbour holds kNoQubit.
  std::array<QubitId, 4> schedule{};
  std::vector<QubitId> support;
};

inline constexpr QubitId kNoQubit = 0xFFFFFFFFu;

// Offsets (dx, dy) from a check's centre to its data neighbours, one per CNOT
// layer. The last two X-check partners share a column and the last two Z-check
// partners share a row, so ancilla hook errors run perpendicular to the logical
// operator they could otherwise shorten.
inline constexpr std::array<std::pair<int, int>, 4> kXCheckOrder = {
    std::pair<int, int>{1, 1}, std::pair<int, int>{1, -1},
    std::pair<int, int>{-1, 1}, std::pair<int, int>{-1, -1}};
inline constexpr std::array<std::pair<int, int>, 4> kZCheckOrder = {
    std::pair<int, int>{1, 1}, std::pair<int, int>{-1, 1},
    std::pair<int, int>{1, -1}, std::pair<int, int>{-1, -1}};

/// Rotated surface code patch of odd distance d.
///
/// Data qubit (column i, row j) sits at (2i+1, 2j+1). Checks sit at even
/// coordinates. Weight-2 X checks lie on the left and right boundaries,
/// weight-2 Z checks on the top and bottom, and logical Z is the left data
/// column (x == 1).
struct CodeLayout {
  int distance = 0;
  std::vector<Coord> data_qubits;
  std::vector<Check> x_checks;
  std::vector<Check> z_checks;
  std::vector<QubitId> logical_z_support;

  std::size_t num_data() const { return data_qubits.size(); }
  std::size_t num_checks() const { return x_checks.size() + z_checks.size(); }
  std::size_t num_qubits() const { return num_data() + num_checks(); }
  // Qubits per logical patch when tiled; one more than num_qubits().
  std::size_t footprint_qubits() const { return 2 * static_cast<std::size_t>(distance) * distance; }
  Coord qubit_coord(QubitId q) const;
};

CodeLayout build_layout(int distance);

enum class OpCode : std::uint8_t {
  Reset,        // |0> preparation
  H,
  CX,           // targets are (control, target) pairs
  Measure,      // Z basis; rate is the classical flip probability
  XError,       // noise: X with probability rate
  Depolarize1,  // noise: X, Y, Z each with rate / 3
  Depolarize2,  // noise: each of 15 two-qubit Paulis with rate / 15
};

const char* opcode_name(OpCode op);
bool is_noise(OpCode op);

struct Instruction {
  OpCode op = OpCode::Reset;
  std::vector<QubitId> targets;
  double rate = 0.0;
  int time_step = 0;
  // Syndrome extraction round the instruction belongs to; the final data
  // readout carries the round count T.
  int round = 0;
};

struct DetectorDef {
  std::vector<std::uint32_t> measurements;  // absolute record indices
  Coord coord;
  int round = 0;
  CheckType type = CheckType::Z;
};

struct CircuitSpec {
  std::size_t num_qubits = 0;
  int rounds = 0;
  std::vector<Instruction> instructions;
  std::vector<DetectorDef> detectors;
  std::vector<std::uint32_t> observable;  // record indices XORed into L0
  std::size_t num_measurements = 0;

  // Record index of the first measurement performed by instruction i.
  std::vector<std::uint32_t> measurement_offsets() const;
};

/// Z-basis memory experiment: data reset, `rounds` extraction rounds and a
/// noiseless transversal data readout.
CircuitSpec build_memory_circuit(const CodeLayout& layout, int rounds);

void write_circuit(std::ostream& out, const CircuitSpec& circuit);
std::string circuit_to_string(const CircuitSpec& circuit);
CircuitSpec parse_circuit(std::istream& in);

}  // namespace burstqec
