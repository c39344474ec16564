#include "burstqec/sampler.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "burstqec/parallel.h"
#include "burstqec/rng.h"

namespace burstqec {

void ShotBatch::resize(std::size_t shots, std::size_t detectors) {
  num_shots = shots;
  num_detectors = detectors;
  words_per_shot = (detectors + 63) / 64;
  bits.assign(num_shots * words_per_shot, 0);
  observables.assign(num_shots, 0);
}

ShotRecord ShotBatch::shot(std::size_t s) const {
  ShotRecord r;
  r.detectors.resize(num_detectors);
  for (std::size_t j = 0; j < num_detectors; ++j) r.detectors[j] = detector(s, j);
  r.observable = observables[s] != 0;
  return r;
}

FrameSimulator::FrameSimulator(const CircuitSpec& noisy)
    : circuit_(noisy), offsets_(noisy.measurement_offsets()) {
  log_q_.reserve(noisy.instructions.size());
  for (const Instruction& inst : noisy.instructions) {
    if (inst.rate < 0.0 || inst.rate >= 1.0) throw std::invalid_argument("noise rate outside [0, 1)");
    log_q_.push_back(std::log1p(-inst.rate));
  }
}

namespace {

// Calls hit(group, bit) for every success among groups * 64 Bernoulli trials.
template <typename Hit>
void for_each_hit(Rng& rng, double log_q, std::size_t groups, Hit&& hit) {
  const std::uint64_t total = static_cast<std::uint64_t>(groups) * 64;
  std::uint64_t pos = rng.geometric_gap(log_q);
  while (pos < total) {
    hit(static_cast<std::size_t>(pos / 64), static_cast<unsigned>(pos % 64));
    const std::uint64_t gap = rng.geometric_gap(log_q);
    if (gap >= total - pos - 1) break;
    pos += gap + 1;
  }
}

}  // namespace

void FrameSimulator::run_block(std::uint64_t seed, std::uint64_t block, BlockResult& out) const {
  Rng rng(seed, block);
  std::vector<std::uint64_t> xs(circuit_.num_qubits, 0);
  std::vector<std::uint64_t> zs(circuit_.num_qubits, 0);
  std::vector<std::uint64_t> records(circuit_.num_measurements, 0);

  const auto& insts = circuit_.instructions;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    const Instruction& inst = insts[i];
    const auto& t = inst.targets;
    const bool noisy = inst.rate > 0.0;
    switch (inst.op) {
      case OpCode::Reset:
        for (QubitId q : t) xs[q] = zs[q] = 0;
        break;
      case OpCode::H:
        for (QubitId q : t) std::swap(xs[q], zs[q]);
        break;
      case OpCode::CX:
        for (std::size_t k = 0; k + 1 < t.size(); k += 2) {
          xs[t[k + 1]] ^= xs[t[k]];
          zs[t[k]] ^= zs[t[k + 1]];
        }
        break;
      case OpCode::Measure: {
        std::uint64_t* rec = records.data() + offsets_[i];
        for (std::size_t k = 0; k < t.size(); ++k) rec[k] = xs[t[k]];
        if (noisy) {
          for_each_hit(rng, log_q_[i], t.size(), [&](std::size_t k, unsigned b) { rec[k] ^= 1ull << b; });
        }
        break;
      }
      case OpCode::XError:
        if (noisy) for_each_hit(rng, log_q_[i], t.size(), [&](std::size_t k, unsigned b) { xs[t[k]] ^= 1ull << b; });
        break;
      case OpCode::Depolarize1:
        if (noisy) {
          for_each_hit(rng, log_q_[i], t.size(), [&](std::size_t k, unsigned b) {
            const std::uint32_t pauli = 1 + rng.below(3);  // 1 = X, 2 = Y, 3 = Z
            if (pauli <= 2) xs[t[k]] ^= 1ull << b;
            if (pauli >= 2) zs[t[k]] ^= 1ull << b;
          });
        }
        break;
      case OpCode::Depolarize2:
        if (noisy) {
          for_each_hit(rng, log_q_[i], t.size() / 2, [&](std::size_t k, unsigned b) {
            // code = x0 | z0 << 1 | x1 << 2 | z1 << 3, uniform over 1..15
            const std::uint32_t code = 1 + rng.below(15);
            const std::uint64_t bit = 1ull << b;
            const QubitId a = t[2 * k];
            const QubitId c = t[2 * k + 1];
            if (code & 1) xs[a] ^= bit;
            if (code & 2) zs[a] ^= bit;
            if (code & 4) xs[c] ^= bit;
            if (code & 8) zs[c] ^= bit;
          });
        }
        break;
    }
  }

  out.detectors.assign(circuit_.detectors.size(), 0);
  for (std::size_t j = 0; j < circuit_.detectors.size(); ++j) {
    std::uint64_t w = 0;
    for (std::uint32_t m : circuit_.detectors[j].measurements) w ^= records[m];
    out.detectors[j] = w;
  }
  out.observable = 0;
  for (std::uint32_t m : circuit_.observable) out.observable ^= records[m];
}

ShotBatch sample(const CircuitSpec& noisy, std::size_t shots, std::uint64_t seed, unsigned workers) {
  if (shots == 0) throw std::invalid_argument("shot count must be at least 1");
  const FrameSimulator sim(noisy);
  ShotBatch batch;
  batch.seed = seed;
  batch.resize(shots, noisy.detectors.size());
  const std::size_t blocks = (shots + kBlockShots - 1) / kBlockShots;
  std::vector<BlockResult> scratch(std::max(1u, workers));
  parallel_for(blocks, workers, [&](std::size_t block, unsigned worker) {
    BlockResult& r = scratch[worker];
    sim.run_block(seed, block, r);
    const std::size_t first = block * kBlockShots;
    const std::size_t count = std::min(kBlockShots, shots - first);
    const std::uint64_t keep = count == 64 ? ~0ull : ((1ull << count) - 1);
    for (std::size_t j = 0; j < r.detectors.size(); ++j) {
      for (std::uint64_t w = r.detectors[j] & keep; w; w &= w - 1) {
        const std::size_t s = first + static_cast<std::size_t>(__builtin_ctzll(w));
        batch.shot_words(s)[j / 64] |= 1ull << (j % 64);
      }
    }
    for (std::size_t s = 0; s < count; ++s) batch.observables[first + s] = (r.observable >> s) & 1u;
  });
  return batch;
}

std::vector<double> detector_density(const ShotBatch& batch, const std::vector<DetectorInfo>& coords,
                                     const CheckType* only) {
  if (coords.size() != batch.num_detectors) throw std::invalid_argument("coordinate count does not match batch");
  int max_round = 0;
  for (const DetectorInfo& d : coords) max_round = std::max(max_round, d.round);
  std::vector<std::uint64_t> ones(max_round + 1, 0);
  std::vector<std::uint64_t> members(max_round + 1, 0);
  std::vector<std::uint8_t> include(coords.size(), 0);
  for (std::size_t j = 0; j < coords.size(); ++j) {
    include[j] = only == nullptr || coords[j].type == *only;
    if (include[j]) ++members[coords[j].round];
  }
  for (std::size_t s = 0; s < batch.num_shots; ++s) {
    const std::uint64_t* words = batch.shot_words(s);
    for (std::size_t w = 0; w < batch.words_per_shot; ++w) {
      for (std::uint64_t bits = words[w]; bits; bits &= bits - 1) {
        const std::size_t j = w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits));
        if (include[j]) ++ones[coords[j].round];
      }
    }
  }
  std::vector<double> density(max_round + 1, 0.0);
  for (int r = 0; r <= max_round; ++r) {
    if (members[r] > 0 && batch.num_shots > 0) {
      density[r] = static_cast<double>(ones[r]) / (static_cast<double>(members[r]) * batch.num_shots);
    }
  }
  return density;
}

void write_batch_binary(std::ostream& out, const ShotBatch& batch) {
  std::string config = batch.config;
  std::replace(config.begin(), config.end(), '\n', ' ');
  out << "BURSTQEC_SHOTS 1\n"
      << "shots " << batch.num_shots << "\n"
      << "detectors " << batch.num_detectors << "\n"
      << "seed " << batch.seed << "\n"
      << "config_hash " << (batch.config_hash.empty() ? "-" : batch.config_hash) << "\n"
      << "config " << config << "\n"
      << "data\n";
  // Little-endian words, shot-major, then one byte per shot observable.
  for (std::uint64_t w : batch.bits) {
    char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<char>((w >> (8 * b)) & 0xFF);
    out.write(bytes, 8);
  }
  out.write(reinterpret_cast<const char*>(batch.observables.data()),
            static_cast<std::streamsize>(batch.observables.size()));
}

ShotBatch read_batch_binary(std::istream& in) {
  auto fail = [](const std::string& what) { throw std::runtime_error("shot file: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != "BURSTQEC_SHOTS 1") fail("bad header");
  std::size_t shots = 0, detectors = 0;
  ShotBatch batch;
  auto field = [&](const char* key) {
    if (!std::getline(in, line)) fail(std::string("missing ") + key);
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0) fail(std::string("expected ") + key);
    return line.substr(prefix.size());
  };
  shots = std::stoull(field("shots"));
  detectors = std::stoull(field("detectors"));
  batch.seed = std::stoull(field("seed"));
  batch.config_hash = field("config_hash");
  if (batch.config_hash == "-") batch.config_hash.clear();
  batch.config = field("config");
  if (!std::getline(in, line) || line != "data") fail("missing data marker");
  batch.resize(shots, detectors);
  for (std::uint64_t& w : batch.bits) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) fail("truncated detector data");
    w = 0;
    for (int b = 0; b < 8; ++b) w |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
  }
  if (!in.read(reinterpret_cast<char*>(batch.observables.data()), static_cast<std::streamsize>(shots))) {
    fail("truncated observable data");
  }
  return batch;
}

void write_batch_csv(std::ostream& out, const ShotBatch& batch) {
  out << "shot,observable,detectors\n";
  std::string bits(batch.num_detectors, '0');
  for (std::size_t s = 0; s < batch.num_shots; ++s) {
    for (std::size_t j = 0; j < batch.num_detectors; ++j) bits[j] = batch.detector(s, j) ? '1' : '0';
    out << s << "," << static_cast<int>(batch.observables[s]) << "," << bits << "\n";
  }
}

}  // namespace burstqec
