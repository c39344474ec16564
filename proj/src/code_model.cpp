#include "burstqec/code_model.h"

#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace burstqec {

namespace {

CheckType plaquette_type(int a, int b) {
  return ((a + b) % 2 == 1) ? CheckType::X : CheckType::Z;
}

}  // namespace

Coord CodeLayout::qubit_coord(QubitId q) const {
  if (q < data_qubits.size()) {
    return data_qubits[q];
  }
  for (const auto* checks : {&x_checks, &z_checks}) {
    for (const Check& c : *checks) {
      if (c.ancilla == q) {
        return c.coord;
      }
    }
  }
  throw std::out_of_range("qubit id outside layout");
}

CodeLayout build_layout(int distance) {
  if (distance < 3 || distance % 2 == 0) {
    throw std::invalid_argument("distance must be an odd integer >= 3, got " + std::to_string(distance));
  }
  CodeLayout layout;
  layout.distance = distance;
  const int d = distance;

  std::map<std::pair<int, int>, QubitId> data_at;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      const Coord c{2 * i + 1, 2 * j + 1};
      data_at[{c.x, c.y}] = static_cast<QubitId>(layout.data_qubits.size());
      layout.data_qubits.push_back(c);
    }
  }

  // Plaquette (a, b) is centred at (2a, 2b). Bulk plaquettes are all kept;
  // on the left/right edges only X plaquettes survive, on top/bottom only Z.
  for (int b = 0; b <= d; ++b) {
    for (int a = 0; a <= d; ++a) {
      const bool bulk = a > 0 && a < d && b > 0 && b < d;
      const bool side = (a == 0 || a == d) && b > 0 && b < d;
      const bool cap = (b == 0 || b == d) && a > 0 && a < d;
      const CheckType type = plaquette_type(a, b);
      if (!(bulk || (side && type == CheckType::X) || (cap && type == CheckType::Z))) {
        continue;
      }
      Check check;
      check.type = type;
      check.coord = {2 * a, 2 * b};
      const auto& order = (type == CheckType::X) ? kXCheckOrder : kZCheckOrder;
      for (std::size_t step = 0; step < 4; ++step) {
        const auto it = data_at.find({check.coord.x + order[step].first, check.coord.y + order[step].second});
        check.schedule[step] = (it == data_at.end()) ? kNoQubit : it->second;
        if (it != data_at.end()) {
          check.support.push_back(it->second);
        }
      }
      (type == CheckType::X ? layout.x_checks : layout.z_checks).push_back(std::move(check));
    }
  }

  QubitId next = static_cast<QubitId>(layout.data_qubits.size());
  for (Check& c : layout.x_checks) c.ancilla = next++;
  for (Check& c : layout.z_checks) c.ancilla = next++;

  for (int j = 0; j < d; ++j) {
    layout.logical_z_support.push_back(data_at.at({1, 2 * j + 1}));
  }
  return layout;
}

const char* opcode_name(OpCode op) {
  switch (op) {
    case OpCode::Reset: return "R";
    case OpCode::H: return "H";
    case OpCode::CX: return "CX";
    case OpCode::Measure: return "M";
    case OpCode::XError: return "X_ERROR";
    case OpCode::Depolarize1: return "DEPOLARIZE1";
    case OpCode::Depolarize2: return "DEPOLARIZE2";
  }
  return "?";
}

bool is_noise(OpCode op) {
  return op == OpCode::XError || op == OpCode::Depolarize1 || op == OpCode::Depolarize2;
}

std::vector<std::uint32_t> CircuitSpec::measurement_offsets() const {
  std::vector<std::uint32_t> offsets(instructions.size(), 0);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    offsets[i] = next;
    if (instructions[i].op == OpCode::Measure) {
      next += static_cast<std::uint32_t>(instructions[i].targets.size());
    }
  }
  return offsets;
}

CircuitSpec build_memory_circuit(const CodeLayout& layout, int rounds) {
  if (rounds < 1) {
    throw std::invalid_argument("memory experiment needs at least one round");
  }
  CircuitSpec circuit;
  circuit.num_qubits = layout.num_qubits();
  circuit.rounds = rounds;

  std::vector<QubitId> data(layout.num_data());
  for (std::size_t q = 0; q < data.size(); ++q) data[q] = static_cast<QubitId>(q);
  std::vector<QubitId> ancillas;
  std::vector<QubitId> x_ancillas;
  for (const Check& c : layout.x_checks) {
    ancillas.push_back(c.ancilla);
    x_ancillas.push_back(c.ancilla);
  }
  for (const Check& c : layout.z_checks) ancillas.push_back(c.ancilla);

  int t = 0;
  auto emit = [&](OpCode op, std::vector<QubitId> targets, int round) {
    circuit.instructions.push_back({op, std::move(targets), 0.0, t, round});
  };

  // Record index of each ancilla's outcome in the previous round.
  std::vector<std::uint32_t> prev(layout.num_qubits(), 0);
  std::uint32_t record = 0;

  for (int r = 0; r < rounds; ++r) {
    if (r == 0) emit(OpCode::Reset, data, r);
    emit(OpCode::Reset, ancillas, r);
    ++t;
    emit(OpCode::H, x_ancillas, r);
    ++t;
    for (std::size_t step = 0; step < 4; ++step) {
      std::vector<QubitId> pairs;
      for (const Check& c : layout.x_checks) {
        if (c.schedule[step] != kNoQubit) {
          pairs.push_back(c.ancilla);
          pairs.push_back(c.schedule[step]);
        }
      }
      for (const Check& c : layout.z_checks) {
        if (c.schedule[step] != kNoQubit) {
          pairs.push_back(c.schedule[step]);
          pairs.push_back(c.ancilla);
        }
      }
      emit(OpCode::CX, std::move(pairs), r);
      ++t;
    }
    emit(OpCode::H, x_ancillas, r);
    ++t;
    emit(OpCode::Measure, ancillas, r);
    ++t;

    std::vector<std::uint32_t> current(layout.num_qubits(), 0);
    for (QubitId a : ancillas) current[a] = record++;
    // X outcomes are random after Z-basis initialisation, so X detectors
    // start comparing from the second round.
    if (r > 0) {
      for (const Check& c : layout.x_checks) {
        circuit.detectors.push_back({{prev[c.ancilla], current[c.ancilla]}, c.coord, r, CheckType::X});
      }
    }
    for (const Check& c : layout.z_checks) {
      std::vector<std::uint32_t> ms = (r == 0) ? std::vector<std::uint32_t>{current[c.ancilla]}
                                               : std::vector<std::uint32_t>{prev[c.ancilla], current[c.ancilla]};
      circuit.detectors.push_back({std::move(ms), c.coord, r, CheckType::Z});
    }
    prev = std::move(current);
  }

  emit(OpCode::Measure, data, rounds);
  std::vector<std::uint32_t> data_record(layout.num_data());
  for (std::size_t q = 0; q < data.size(); ++q) data_record[q] = record++;
  circuit.num_measurements = record;

  for (const Check& c : layout.z_checks) {
    std::vector<std::uint32_t> ms{prev[c.ancilla]};
    for (QubitId q : c.support) ms.push_back(data_record[q]);
    circuit.detectors.push_back({std::move(ms), c.coord, rounds, CheckType::Z});
  }
  for (QubitId q : layout.logical_z_support) circuit.observable.push_back(data_record[q]);
  return circuit;
}

namespace {

std::string format_rate(double rate) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", rate);
  return buf;
}

OpCode parse_opcode(const std::string& name) {
  for (OpCode op : {OpCode::Reset, OpCode::H, OpCode::CX, OpCode::Measure, OpCode::XError,
                    OpCode::Depolarize1, OpCode::Depolarize2}) {
    if (name == opcode_name(op)) return op;
  }
  throw std::runtime_error("unknown opcode '" + name + "'");
}

}  // namespace

void write_circuit(std::ostream& out, const CircuitSpec& circuit) {
  out << "BURSTQEC_CIRCUIT 1\n";
  out << "QUBITS " << circuit.num_qubits << "\n";
  out << "ROUNDS " << circuit.rounds << "\n";
  for (const Instruction& inst : circuit.instructions) {
    out << opcode_name(inst.op);
    if (inst.op == OpCode::Measure || is_noise(inst.op)) {
      out << '(' << format_rate(inst.rate) << ')';
    }
    for (QubitId q : inst.targets) out << ' ' << q;
    out << " @ " << inst.time_step << ' ' << inst.round << '\n';
  }
  for (const DetectorDef& det : circuit.detectors) {
    out << "DETECTOR " << det.coord.x << ' ' << det.coord.y << ' ' << det.round << ' '
        << (det.type == CheckType::X ? 'X' : 'Z') << " :";
    for (auto m : det.measurements) out << ' ' << m;
    out << '\n';
  }
  out << "OBSERVABLE :";
  for (auto m : circuit.observable) out << ' ' << m;
  out << '\n';
}

std::string circuit_to_string(const CircuitSpec& circuit) {
  std::ostringstream ss;
  write_circuit(ss, circuit);
  return ss.str();
}

CircuitSpec parse_circuit(std::istream& in) {
  CircuitSpec circuit;
  std::string line;
  if (!std::getline(in, line) || line != "BURSTQEC_CIRCUIT 1") {
    throw std::runtime_error("missing circuit header");
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "QUBITS") {
      ls >> circuit.num_qubits;
    } else if (head == "ROUNDS") {
      ls >> circuit.rounds;
    } else if (head == "DETECTOR") {
      DetectorDef det;
      char type = 'Z';
      std::string colon;
      ls >> det.coord.x >> det.coord.y >> det.round >> type >> colon;
      det.type = (type == 'X') ? CheckType::X : CheckType::Z;
      std::uint32_t m;
      while (ls >> m) det.measurements.push_back(m);
      circuit.detectors.push_back(std::move(det));
    } else if (head == "OBSERVABLE") {
      std::string colon;
      ls >> colon;
      std::uint32_t m;
      while (ls >> m) circuit.observable.push_back(m);
    } else {
      Instruction inst;
      const auto paren = head.find('(');
      inst.op = parse_opcode(head.substr(0, paren));
      if (paren != std::string::npos) {
        inst.rate = std::stod(head.substr(paren + 1, head.size() - paren - 2));
      }
      std::string tok;
      while (ls >> tok && tok != "@") inst.targets.push_back(static_cast<QubitId>(std::stoul(tok)));
      ls >> inst.time_step >> inst.round;
      if (inst.op == OpCode::Measure) circuit.num_measurements += inst.targets.size();
      circuit.instructions.push_back(std::move(inst));
    }
    if (ls.fail() && !ls.eof()) {
      throw std::runtime_error("malformed circuit line: " + line);
    }
  }
  return circuit;
}

}  // namespace burstqec
