#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "burstqec/code_model.h"
#include "burstqec/fault_propagation.h"

namespace burstqec {

inline constexpr std::size_t kBlockShots = 64;

struct ShotRecord {
  std::vector<std::uint8_t> detectors;
  bool observable = false;
};

/// Packed detector matrix, shot-major with 64 detectors per word.
struct ShotBatch {
  std::size_t num_shots = 0;
  std::size_t num_detectors = 0;
  std::size_t words_per_shot = 0;
  std::vector<std::uint64_t> bits;
  std::vector<std::uint8_t> observables;
  std::uint64_t seed = 0;
  std::string config;       // free-form snapshot of the generating configuration
  std::string config_hash;

  void resize(std::size_t shots, std::size_t detectors);
  const std::uint64_t* shot_words(std::size_t shot) const { return bits.data() + shot * words_per_shot; }
  std::uint64_t* shot_words(std::size_t shot) { return bits.data() + shot * words_per_shot; }
  bool detector(std::size_t shot, std::size_t det) const {
    return (shot_words(shot)[det / 64] >> (det % 64)) & 1u;
  }
  ShotRecord shot(std::size_t shot) const;
};

/// Detector and observable flips of one block of 64 shots, detector-major:
/// bit s of detectors[j] is detector j of shot (64 * block + s).
struct BlockResult {
  std::vector<std::uint64_t> detectors;
  std::uint64_t observable = 0;
};

/// Bit-parallel Pauli-frame simulator of a noisy circuit. The noiseless
/// reference outcome of every detector and of the observable is 0, so the
/// frame alone determines the sampled bits.
class FrameSimulator {
 public:
  explicit FrameSimulator(const CircuitSpec& noisy);

  /// Deterministic in (seed, block).
  void run_block(std::uint64_t seed, std::uint64_t block, BlockResult& out) const;

  std::size_t num_detectors() const { return circuit_.detectors.size(); }

 private:
  const CircuitSpec& circuit_;
  std::vector<double> log_q_;  // log(1 - rate) per instruction
  std::vector<std::uint32_t> offsets_;
};

ShotBatch sample(const CircuitSpec& noisy, std::size_t shots, std::uint64_t seed, unsigned workers = 1);

/// Mean detector value per round index (0..max round), averaged over shots and
/// over that slice's detectors. With `only` set, other check types are skipped.
std::vector<double> detector_density(const ShotBatch& batch, const std::vector<DetectorInfo>& coords,
                                     const CheckType* only = nullptr);

void write_batch_binary(std::ostream& out, const ShotBatch& batch);
ShotBatch read_batch_binary(std::istream& in);
void write_batch_csv(std::ostream& out, const ShotBatch& batch);

}  // namespace burstqec
