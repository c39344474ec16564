#include "burstqec/noise_model.h"

#include <stdexcept>

namespace burstqec {

std::string_view model_name(NoiseModelKind kind) {
  return kind == NoiseModelKind::Phenomenological ? "phenomenological" : "circuit";
}

NoiseModelKind parse_model(std::string_view name) {
  if (name == "phenomenological" || name == "phenom") return NoiseModelKind::Phenomenological;
  if (name == "circuit" || name == "circuit_depolarizing") return NoiseModelKind::CircuitDepolarizing;
  throw std::invalid_argument("unknown noise model '" + std::string(name) + "'");
}

void NoiseConfig::validate(int rounds) const {
  auto check_rate = [](double r, const char* what) {
    if (!(r >= 0.0 && r < 0.5)) {
      throw std::invalid_argument(std::string(what) + " must lie in [0, 1/2), got " + std::to_string(r));
    }
  };
  check_rate(p, "p");
  check_rate(p_burst, "p_B");
  if (burst_round && (*burst_round < 0 || *burst_round >= rounds)) {
    throw std::invalid_argument("burst round " + std::to_string(*burst_round) + " outside [0, " +
                                std::to_string(rounds) + ")");
  }
}

std::vector<std::pair<LocalPauli, double>> channel_outcomes(ChannelKind kind, double rate) {
  std::vector<std::pair<LocalPauli, double>> out;
  switch (kind) {
    case ChannelKind::BitFlip:
    case ChannelKind::MeasureFlip:
      out.push_back({LocalPauli{0, 0}, 1.0 - rate});
      out.push_back({LocalPauli{1, 0}, rate});
      break;
    case ChannelKind::Depolarize1:
      out.push_back({LocalPauli{0, 0}, 1.0 - rate});
      out.push_back({LocalPauli{1, 0}, rate / 3});
      out.push_back({LocalPauli{1, 1}, rate / 3});
      out.push_back({LocalPauli{0, 1}, rate / 3});
      break;
    case ChannelKind::Depolarize2:
      out.push_back({LocalPauli{0, 0}, 1.0 - rate});
      for (std::uint8_t code = 1; code < 16; ++code) {
        // code = x0 | z0 << 1 | x1 << 2 | z1 << 3
        const std::uint8_t xs = (code & 1) | ((code >> 1) & 2);
        const std::uint8_t zs = ((code >> 1) & 1) | ((code >> 2) & 2);
        out.push_back({LocalPauli{xs, zs}, rate / 15});
      }
      break;
  }
  return out;
}

std::vector<NoiseChannel> channels_of(const Instruction& inst) {
  std::vector<NoiseChannel> channels;
  auto add = [&](ChannelKind kind, std::vector<QubitId> targets) {
    channels.push_back({kind, inst.rate, std::move(targets), channel_outcomes(kind, inst.rate)});
  };
  switch (inst.op) {
    case OpCode::XError:
      for (QubitId q : inst.targets) add(ChannelKind::BitFlip, {q});
      break;
    case OpCode::Depolarize1:
      for (QubitId q : inst.targets) add(ChannelKind::Depolarize1, {q});
      break;
    case OpCode::Depolarize2:
      for (std::size_t i = 0; i + 1 < inst.targets.size(); i += 2) {
        add(ChannelKind::Depolarize2, {inst.targets[i], inst.targets[i + 1]});
      }
      break;
    case OpCode::Measure:
      for (QubitId q : inst.targets) add(ChannelKind::MeasureFlip, {q});
      break;
    default:
      break;
  }
  return channels;
}

namespace {

bool has_noise(const CircuitSpec& circuit) {
  for (const Instruction& inst : circuit.instructions) {
    if (is_noise(inst.op) || (inst.op == OpCode::Measure && inst.rate != 0.0)) return true;
  }
  return false;
}

void check_input(const CircuitSpec& circuit, const NoiseConfig& cfg, NoiseModelKind expected) {
  if (cfg.model != expected) {
    throw std::invalid_argument("noise config model is " + std::string(model_name(cfg.model)) + ", expected " +
                                std::string(model_name(expected)));
  }
  cfg.validate(circuit.rounds);
  if (has_noise(circuit)) {
    throw std::invalid_argument("circuit already carries noise annotations");
  }
}

}  // namespace

CircuitSpec attach_phenomenological(const CircuitSpec& circuit, const NoiseConfig& cfg) {
  check_input(circuit, cfg, NoiseModelKind::Phenomenological);
  CircuitSpec noisy = circuit;
  noisy.instructions.clear();

  // Data qubits are the targets of the final readout.
  const std::vector<QubitId>& data = circuit.instructions.back().targets;
  const auto& insts = circuit.instructions;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    Instruction inst = insts[i];
    const bool final_readout = inst.round == circuit.rounds;
    if (inst.op == OpCode::Measure && !final_readout) {
      inst.rate = cfg.rate_for_round(inst.round);
    }
    noisy.instructions.push_back(inst);
    // Bit flips land on the data after the round's resets, ahead of the
    // (noiseless) extraction gates.
    const bool last_reset = inst.op == OpCode::Reset &&
                            (i + 1 == insts.size() || insts[i + 1].op != OpCode::Reset);
    if (last_reset && !final_readout) {
      noisy.instructions.push_back({OpCode::XError, data, cfg.rate_for_round(inst.round), inst.time_step, inst.round});
    }
  }
  return noisy;
}

CircuitSpec attach_circuit_depolarizing(const CircuitSpec& circuit, const NoiseConfig& cfg) {
  check_input(circuit, cfg, NoiseModelKind::CircuitDepolarizing);
  CircuitSpec noisy = circuit;
  noisy.instructions.clear();
  for (Instruction inst : circuit.instructions) {
    const double rate = cfg.rate_for_round(inst.round);
    const bool final_readout = inst.round == circuit.rounds;
    switch (inst.op) {
      case OpCode::Reset:
      case OpCode::H:
        noisy.instructions.push_back(inst);
        noisy.instructions.push_back({OpCode::Depolarize1, inst.targets, rate, inst.time_step, inst.round});
        break;
      case OpCode::CX:
        noisy.instructions.push_back(inst);
        noisy.instructions.push_back({OpCode::Depolarize2, inst.targets, rate, inst.time_step, inst.round});
        break;
      case OpCode::Measure:
        inst.rate = final_readout ? 0.0 : rate;
        noisy.instructions.push_back(std::move(inst));
        break;
      default:
        noisy.instructions.push_back(std::move(inst));
        break;
    }
  }
  return noisy;
}

CircuitSpec attach_noise(const CircuitSpec& circuit, const NoiseConfig& cfg) {
  return cfg.model == NoiseModelKind::Phenomenological ? attach_phenomenological(circuit, cfg)
                                                       : attach_circuit_depolarizing(circuit, cfg);
}

}  // namespace burstqec
