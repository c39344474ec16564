#include "burstqec/fault_propagation.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace burstqec {

Signature xor_signatures(const Signature& a, const Signature& b) {
  Signature out;
  std::set_symmetric_difference(a.detectors.begin(), a.detectors.end(), b.detectors.begin(), b.detectors.end(),
                                std::back_inserter(out.detectors));
  out.flips_observable = a.flips_observable != b.flips_observable;
  return out;
}

FaultPropagator::FaultPropagator(const CircuitSpec& circuit)
    : circuit_(circuit),
      offsets_(circuit.measurement_offsets()),
      record_detectors_(circuit.num_measurements),
      record_in_observable_(circuit.num_measurements, 0) {
  for (std::size_t d = 0; d < circuit.detectors.size(); ++d) {
    for (std::uint32_t m : circuit.detectors[d].measurements) {
      if (m >= circuit.num_measurements) {
        throw std::invalid_argument("detector references a missing measurement");
      }
      record_detectors_[m].push_back(static_cast<std::uint32_t>(d));
    }
  }
  for (std::uint32_t m : circuit.observable) record_in_observable_[m] ^= 1;
}

Signature FaultPropagator::signature_from_records(const std::vector<std::uint32_t>& flipped) const {
  std::vector<std::uint32_t> hits;
  bool obs = false;
  for (std::uint32_t m : flipped) {
    hits.insert(hits.end(), record_detectors_[m].begin(), record_detectors_[m].end());
    obs ^= record_in_observable_[m] != 0;
  }
  std::sort(hits.begin(), hits.end());
  Signature sig;
  sig.flips_observable = obs;
  // Keep detectors hit an odd number of times.
  for (std::size_t i = 0; i < hits.size();) {
    std::size_t j = i;
    while (j < hits.size() && hits[j] == hits[i]) ++j;
    if ((j - i) % 2 == 1) sig.detectors.push_back(hits[i]);
    i = j;
  }
  return sig;
}

Signature FaultPropagator::propagate(std::size_t location, const PauliString& pauli) const {
  if (location >= circuit_.instructions.size()) {
    throw std::out_of_range("fault location " + std::to_string(location) + " outside circuit");
  }
  const Instruction& at = circuit_.instructions[location];
  for (const PauliTerm& term : pauli) {
    if (std::find(at.targets.begin(), at.targets.end(), term.qubit) == at.targets.end()) {
      throw std::invalid_argument("Pauli not supported on the targets of instruction " + std::to_string(location));
    }
  }
  return propagate_after(location, pauli);
}

Signature FaultPropagator::propagate_after(std::size_t location, const PauliString& pauli) const {
  const auto& insts = circuit_.instructions;
  if (location >= insts.size()) {
    throw std::out_of_range("fault location " + std::to_string(location) + " outside circuit");
  }
  std::vector<std::uint8_t> xs(circuit_.num_qubits, 0);
  std::vector<std::uint8_t> zs(circuit_.num_qubits, 0);
  for (const PauliTerm& term : pauli) {
    if (term.qubit >= circuit_.num_qubits) throw std::out_of_range("Pauli acts outside the circuit");
    xs[term.qubit] ^= term.x;
    zs[term.qubit] ^= term.z;
  }
  std::size_t active = 0;
  for (std::size_t q = 0; q < xs.size(); ++q) active += (xs[q] | zs[q]) != 0;

  std::vector<std::uint32_t> flipped;
  for (std::size_t i = location + 1; i < insts.size() && active > 0; ++i) {
    const Instruction& inst = insts[i];
    switch (inst.op) {
      case OpCode::Reset:
        for (QubitId q : inst.targets) {
          active -= (xs[q] | zs[q]) != 0;
          xs[q] = zs[q] = 0;
        }
        break;
      case OpCode::H:
        for (QubitId q : inst.targets) std::swap(xs[q], zs[q]);
        break;
      case OpCode::CX:
        for (std::size_t k = 0; k + 1 < inst.targets.size(); k += 2) {
          const QubitId c = inst.targets[k];
          const QubitId t = inst.targets[k + 1];
          const std::size_t before = ((xs[c] | zs[c]) != 0) + ((xs[t] | zs[t]) != 0);
          xs[t] ^= xs[c];
          zs[c] ^= zs[t];
          const std::size_t after = ((xs[c] | zs[c]) != 0) + ((xs[t] | zs[t]) != 0);
          active = active + after - before;
        }
        break;
      case OpCode::Measure:
        for (std::size_t k = 0; k < inst.targets.size(); ++k) {
          if (xs[inst.targets[k]]) flipped.push_back(offsets_[i] + static_cast<std::uint32_t>(k));
        }
        break;
      default:
        break;
    }
  }
  return signature_from_records(flipped);
}

Signature FaultPropagator::measurement_flip(std::uint32_t record) const {
  if (record >= circuit_.num_measurements) {
    throw std::out_of_range("measurement record outside circuit");
  }
  return signature_from_records({record});
}

Signature propagate_pauli(const CircuitSpec& circuit, std::size_t location, const PauliString& pauli) {
  return FaultPropagator(circuit).propagate(location, pauli);
}

namespace {

using SignatureKey = std::pair<std::vector<std::uint32_t>, bool>;

struct MechanismAccumulator {
  std::map<SignatureKey, std::size_t> index;
  std::vector<FaultMechanism> mechanisms;

  void add(const Signature& sig, const FaultContribution& contribution) {
    const double p = contribution.probability();
    if (p <= 0.0) return;
    if (sig.detectors.empty()) {
      if (sig.flips_observable) {
        throw std::logic_error("undetectable fault flips the logical observable (instruction " +
                               std::to_string(contribution.instruction) + ")");
      }
      return;
    }
    if (sig.detectors.size() > 2) {
      std::ostringstream msg;
      msg << "fault at instruction " << contribution.instruction << " flips " << sig.detectors.size()
          << " detectors after X/Z decomposition";
      throw std::runtime_error(msg.str());
    }
    add_merged(sig.detectors, sig.flips_observable, p, {contribution});
  }

  void add_merged(const std::vector<std::uint32_t>& dets, bool obs, double p,
                  const std::vector<FaultContribution>& provenance) {
    auto [it, inserted] = index.try_emplace({dets, obs}, mechanisms.size());
    if (inserted) {
      mechanisms.push_back({p, dets, obs, provenance});
    } else {
      FaultMechanism& m = mechanisms[it->second];
      m.probability = xor_probability(m.probability, p);
      m.provenance.insert(m.provenance.end(), provenance.begin(), provenance.end());
    }
  }
};

double outcome_factor(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Depolarize1: return 1.0 / 3.0;
    case ChannelKind::Depolarize2: return 1.0 / 15.0;
    default: return 1.0;
  }
}

std::vector<DetectorInfo> detector_info(const CircuitSpec& circuit) {
  std::vector<DetectorInfo> info;
  info.reserve(circuit.detectors.size());
  for (const DetectorDef& d : circuit.detectors) info.push_back({d.coord, d.round, d.type});
  return info;
}

}  // namespace

DetectorErrorModel build_detector_error_model(const CircuitSpec& noisy) {
  FaultPropagator prop(noisy);
  const auto offsets = noisy.measurement_offsets();
  MechanismAccumulator acc;

  for (std::size_t i = 0; i < noisy.instructions.size(); ++i) {
    const Instruction& inst = noisy.instructions[i];
    if (inst.rate <= 0.0) continue;
    if (inst.op == OpCode::Measure) {
      for (std::size_t k = 0; k < inst.targets.size(); ++k) {
        FaultContribution c;
        c.instruction = static_cast<std::uint32_t>(i);
        c.qubits[0] = inst.targets[k];
        c.pauli = {1, 0};
        c.round = inst.round;
        c.rate = inst.rate;
        acc.add(prop.measurement_flip(offsets[i] + static_cast<std::uint32_t>(k)), c);
      }
      continue;
    }
    if (!is_noise(inst.op)) continue;

    for (const NoiseChannel& ch : channels_of(inst)) {
      // Signatures of the single-qubit basis faults; every outcome part is an
      // XOR of these.
      const std::size_t n = ch.targets.size();
      Signature x_basis[2];
      Signature z_basis[2];
      for (std::size_t k = 0; k < n; ++k) {
        x_basis[k] = prop.propagate(i, {{ch.targets[k], true, false}});
        if (ch.kind != ChannelKind::BitFlip) z_basis[k] = prop.propagate(i, {{ch.targets[k], false, true}});
      }
      for (const auto& [outcome, prob] : ch.outcomes) {
        if (outcome.xs == 0 && outcome.zs == 0) continue;
        for (int part = 0; part < 2; ++part) {
          const std::uint8_t bits = part == 0 ? outcome.xs : outcome.zs;
          if (bits == 0) continue;
          Signature sig;
          for (std::size_t k = 0; k < n; ++k) {
            if (bits & (1u << k)) sig = xor_signatures(sig, part == 0 ? x_basis[k] : z_basis[k]);
          }
          FaultContribution c;
          c.instruction = static_cast<std::uint32_t>(i);
          for (std::size_t k = 0; k < n; ++k) c.qubits[k] = ch.targets[k];
          c.pauli = part == 0 ? LocalPauli{bits, 0} : LocalPauli{0, bits};
          c.round = inst.round;
          c.factor = outcome_factor(ch.kind);
          c.rate = ch.rate;
          acc.add(sig, c);
        }
      }
    }
  }

  DetectorErrorModel dem;
  dem.detector_count = noisy.detectors.size();
  dem.mechanisms = std::move(acc.mechanisms);
  dem.detectors = detector_info(noisy);
  return dem;
}

DetectorErrorModel merge_mechanisms(const DetectorErrorModel& dem) {
  MechanismAccumulator acc;
  for (const FaultMechanism& m : dem.mechanisms) {
    acc.add_merged(m.detectors, m.flips_observable, m.probability, m.provenance);
  }
  DetectorErrorModel out = dem;
  out.mechanisms = std::move(acc.mechanisms);
  return out;
}

void write_dem(std::ostream& out, const DetectorErrorModel& dem) {
  out << "# detectors " << dem.detector_count << " observables " << dem.observable_count << "\n";
  char buf[40];
  for (const FaultMechanism& m : dem.mechanisms) {
    std::snprintf(buf, sizeof(buf), "%.17g", m.probability);
    out << "error(" << buf << ")";
    for (auto d : m.detectors) out << " D" << d;
    if (m.flips_observable) out << " L0";
    out << "\n";
  }
  for (std::size_t d = 0; d < dem.detectors.size(); ++d) {
    const DetectorInfo& info = dem.detectors[d];
    out << "detector(" << info.coord.x << ", " << info.coord.y << ", " << info.round << ") D" << d << "\n";
  }
}

std::string dem_to_string(const DetectorErrorModel& dem) {
  std::ostringstream ss;
  write_dem(ss, dem);
  return ss.str();
}

}  // namespace burstqec
