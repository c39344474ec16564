#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "burstqec/analysis.h"
#include "burstqec/burst_inference.h"
#include "burstqec/code_model.h"
#include "burstqec/decoding_graph.h"
#include "burstqec/experiment.h"
#include "burstqec/fault_propagation.h"
#include "burstqec/matching_decoder.h"
#include "burstqec/noise_model.h"
#include "burstqec/sampler.h"

using namespace burstqec;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Options shared by the single-experiment subcommands.
struct CircuitArgs {
  std::string model = "phenomenological";
  int d = 3;
  int T = 0;  // 0 selects 2d
  double p = 0.001;
  double p_burst = 0.0;
  int burst_round = -2;  // -2 selects T/2, -1 disables the burst
  bool no_burst = false;

  void add(CLI::App* app) {
    app->add_option("--model", model, "phenomenological or circuit")->capture_default_str();
    app->add_option("-d,--distance", d, "odd code distance")->capture_default_str();
    app->add_option("-T,--rounds", T, "syndrome rounds (default 2d)");
    app->add_option("-p,--p", p, "background rate")->capture_default_str();
    app->add_option("--p-burst", p_burst, "burst-round rate (default p)");
    app->add_option("--burst-round", burst_round, "0-based burst round (default T/2)");
    app->add_flag("--no-burst", no_burst, "no burst round");
  }

  int rounds() const { return T > 0 ? T : 2 * d; }

  NoiseConfig noise() const {
    NoiseConfig cfg;
    cfg.model = parse_model(model);
    cfg.p = p;
    cfg.p_burst = p_burst > 0.0 ? p_burst : p;
    if (!no_burst && burst_round != -1) cfg.burst_round = burst_round == -2 ? rounds() / 2 : burst_round;
    return cfg;
  }

  CircuitSpec base() const {
    if (d < 3 || d % 2 == 0) throw ConfigError("distance must be an odd d >= 3");
    if (rounds() < 1) throw ConfigError("T must be at least 1");
    return build_memory_circuit(build_layout(d), rounds());
  }

  CircuitSpec noisy() const {
    const NoiseConfig cfg = noise();
    try {
      cfg.validate(rounds());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return attach_noise(base(), cfg);
  }

  /// Graph from the true rates, or from the burst-free rates when unaware.
  DecodingGraph graph(bool burst_aware) const {
    NoiseConfig cfg = noise();
    if (!burst_aware) cfg.burst_round.reset();
    try {
      cfg.validate(rounds());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return build_graph(build_detector_error_model(attach_noise(base(), cfg)));
  }

  std::string describe() const {
    const NoiseConfig cfg = noise();
    std::ostringstream o;
    o << "model=" << model << " d=" << d << " T=" << rounds() << " p=" << cfg.p << " p_B=" << cfg.p_burst
      << " burst_round=" << (cfg.burst_round ? *cfg.burst_round : -1);
    return o.str();
  }
};

class Output {
 public:
  explicit Output(const std::string& path, bool binary = false) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
    if (!*file_) throw std::runtime_error("cannot write " + path);
  }
  std::ostream& operator*() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

std::vector<double> parse_taus(const std::vector<std::string>& raw) {
  std::vector<double> out;
  for (const auto& s : raw) {
    if (s == "inf" || s == "infinity") {
      out.push_back(kInfiniteTau);
      continue;
    }
    try {
      out.push_back(std::stod(s));
    } catch (const std::logic_error&) {
      throw ConfigError("bad tau '" + s + "'");
    }
  }
  return out;
}

std::string default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? env : "burstqec-out";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Burst-resilience experiments on the rotated surface code"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // generate-circuit
  CircuitArgs gen_args;
  std::string gen_out, gen_format = "circuit";
  auto* gen = app.add_subcommand("generate-circuit", "Write the noisy circuit, detector error model or graph");
  gen_args.add(gen);
  gen->add_option("-o,--out", gen_out, "output file (default stdout)");
  gen->add_option("--format", gen_format, "circuit, dem or graph")
      ->check(CLI::IsMember({"circuit", "dem", "graph"}))
      ->capture_default_str();

  // sample
  CircuitArgs sample_args;
  std::uint64_t sample_shots = 1000, sample_seed = 1;
  unsigned sample_workers = 1;
  std::string sample_out, sample_format = "binary";
  auto* samp = app.add_subcommand("sample", "Sample detector shots");
  sample_args.add(samp);
  samp->add_option("--shots", sample_shots)->capture_default_str();
  samp->add_option("--seed", sample_seed)->capture_default_str();
  samp->add_option("--workers", sample_workers)->capture_default_str();
  samp->add_option("-o,--out", sample_out, "output file (default stdout)");
  samp->add_option("--format", sample_format, "binary or csv")
      ->check(CLI::IsMember({"binary", "csv"}))
      ->capture_default_str();

  // decode
  CircuitArgs decode_args;
  std::string decode_in, decode_per_shot;
  bool decode_unaware = false;
  unsigned decode_workers = 1;
  auto* dec = app.add_subcommand("decode", "Decode a binary shot file against the experiment's graph");
  decode_args.add(dec);
  dec->add_option("-i,--input", decode_in, "binary shot file")->required();
  dec->add_flag("--unaware", decode_unaware, "decode with burst-free weights");
  dec->add_option("--workers", decode_workers)->capture_default_str();
  dec->add_option("--per-shot", decode_per_shot, "per-shot CSV output");

  // sweep
  ExperimentConfig sweep_cfg;
  std::string sweep_config_file, sweep_model = "phenomenological", sweep_placement = "half";
  int sweep_T = 0;
  bool sweep_unaware = false;
  auto* sw = app.add_subcommand("sweep", "Run a parameter sweep with resumable CSV output");
  sw->add_option("--config", sweep_config_file, "JSON config; command-line lists are then ignored");
  sw->add_option("--model", sweep_model)->capture_default_str();
  sw->add_option("-d,--distances", sweep_cfg.distances)->delimiter(',');
  sw->add_option("-p,--p", sweep_cfg.p)->delimiter(',');
  sw->add_option("--p-burst", sweep_cfg.p_burst)->delimiter(',');
  sw->add_option("-T,--rounds", sweep_T, "syndrome rounds for every d (default 2d)");
  sw->add_option("--burst", sweep_placement, "half, explicit or none")
      ->check(CLI::IsMember({"half", "explicit", "none"}))
      ->capture_default_str();
  sw->add_option("--burst-round", sweep_cfg.burst_round, "round for --burst explicit");
  sw->add_flag("--unaware", sweep_unaware, "decode with burst-free weights");
  sw->add_option("--shots", sweep_cfg.shots);
  sw->add_option("--seed", sweep_cfg.seed)->capture_default_str();
  sw->add_option("--workers", sweep_cfg.workers)->capture_default_str();
  sw->add_option("-o,--output-dir", sweep_cfg.output_dir, std::string("output directory (default $") + kOutputDirEnv + ")");

  // fit-threshold
  std::string fit_in, fit_swept = "burst", fit_out;
  ThresholdFitOptions fit_opts;
  auto* fit = app.add_subcommand("fit-threshold", "Fit the threshold crossing of a sweep CSV");
  fit->add_option("-i,--input", fit_in, "CSV with d,p,p_B,T,shots,failures columns")->required();
  fit->add_option("--swept", fit_swept, "burst or background")
      ->check(CLI::IsMember({"burst", "background"}))
      ->capture_default_str();
  fit->add_option("--max-distances", fit_opts.max_distances)->capture_default_str();
  fit->add_option("--window", fit_opts.window)->capture_default_str();
  fit->add_option("--bootstrap", fit_opts.bootstrap)->capture_default_str();
  fit->add_option("--seed", fit_opts.seed)->capture_default_str();
  fit->add_option("-o,--out", fit_out, "JSON report (default stdout)");

  // teraquop
  std::vector<double> tq_bg, tq_burst;
  std::vector<std::string> tq_tau_raw{"1", "1000", "10000000", "inf"};
  double tq_target = 1e-12;
  std::string tq_out;
  auto* tq = app.add_subcommand("teraquop", "Teraquop footprint from log-linear fits of the per-cycle rates");
  tq->add_option("--background", tq_bg, "c,m of log10 q_d = c + m d")->delimiter(',')->expected(2)->required();
  tq->add_option("--burst", tq_burst, "c,m of log10 q_dB = c + m d")->delimiter(',')->expected(2)->required();
  tq->add_option("--tau", tq_tau_raw, "cycles between bursts; 'inf' for none")->delimiter(',');
  tq->add_option("--target", tq_target)->capture_default_str();
  tq->add_option("-o,--out", tq_out, "CSV output (default stdout)");

  // detect-burst
  CircuitArgs det_args;
  std::uint64_t det_shots = 1000, det_seed = 1;
  unsigned det_workers = 1;
  std::string det_out;
  auto* det = app.add_subcommand("detect-burst", "Per-round likelihood-ratio burst test on sampled shots");
  det_args.add(det);
  det->add_option("--shots", det_shots)->capture_default_str();
  det->add_option("--seed", det_seed)->capture_default_str();
  det->add_option("--workers", det_workers)->capture_default_str();
  det->add_option("-o,--out", det_out, "per-shot CSV; a JSON summary goes to stdout");

  // density
  CircuitArgs den_args;
  std::uint64_t den_shots = 10000, den_seed = 1;
  unsigned den_workers = 1;
  std::string den_out, den_check = "all";
  auto* den = app.add_subcommand("density", "Mean detector density per round");
  den_args.add(den);
  den->add_option("--shots", den_shots)->capture_default_str();
  den->add_option("--seed", den_seed)->capture_default_str();
  den->add_option("--workers", den_workers)->capture_default_str();
  den->add_option("--check", den_check, "all, x or z")->check(CLI::IsMember({"all", "x", "z"}))->capture_default_str();
  den->add_option("-o,--out", den_out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*gen) {
      const CircuitSpec noisy = gen_args.noisy();
      Output out(gen_out);
      if (gen_format == "circuit") {
        write_circuit(*out, noisy);
      } else {
        const DetectorErrorModel dem = build_detector_error_model(noisy);
        if (gen_format == "dem")
          write_dem(*out, dem);
        else
          write_graph(*out, build_graph(dem));
      }
    } else if (*samp) {
      if (sample_shots < 1) throw ConfigError("shots must be at least 1");
      const CircuitSpec noisy = sample_args.noisy();
      ShotBatch batch = sample(noisy, sample_shots, sample_seed, std::max(1u, sample_workers));
      batch.config = sample_args.describe();
      batch.config_hash = config_hash(json(batch.config));
      Output out(sample_out, sample_format == "binary");
      if (sample_format == "binary")
        write_batch_binary(*out, batch);
      else
        write_batch_csv(*out, batch);
    } else if (*dec) {
      const DecodingGraph graph = decode_args.graph(!decode_unaware);
      auto in = open_input(decode_in, true);
      const ShotBatch batch = read_batch_binary(in);
      if (batch.num_detectors != graph.detector_count())
        throw ConfigError("shot file has " + std::to_string(batch.num_detectors) + " detectors, graph has " +
                          std::to_string(graph.detector_count()));
      const auto est = logical_error_rate(graph, batch, std::max(1u, decode_workers));
      if (!decode_per_shot.empty()) {
        Output per(decode_per_shot);
        write_decode_csv(*per, graph, batch);
      }
      json j{{"shots", est.shots}, {"failures", est.failures}, {"rate", est.rate},
             {"ci_low", est.ci_low}, {"ci_high", est.ci_high}, {"burst_aware", !decode_unaware}};
      std::cout << j.dump(2) << '\n';
    } else if (*sw) {
      ExperimentConfig cfg;
      if (!sweep_config_file.empty()) {
        auto in = open_input(sweep_config_file);
        json j;
        try {
          in >> j;
        } catch (const json::exception& e) {
          throw ConfigError(std::string("bad config file: ") + e.what());
        }
        cfg = config_from_json(j);
        if (sw->count("--workers")) cfg.workers = sweep_cfg.workers;
        if (sw->count("--output-dir")) cfg.output_dir = sweep_cfg.output_dir;
      } else {
        cfg = sweep_cfg;
        cfg.model = parse_model(sweep_model);
        if (sweep_T > 0) cfg.rounds = sweep_T;
        cfg.burst = sweep_placement == "half" ? BurstPlacement::Half
                    : sweep_placement == "explicit" ? BurstPlacement::Explicit
                                                    : BurstPlacement::None;
        cfg.burst_aware = !sweep_unaware;
      }
      if (cfg.output_dir.empty()) cfg.output_dir = default_output_dir();
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      const auto summary = run_sweep(cfg, [](const ResultRecord& r) {
        std::cerr << "d=" << r.spec.d << " p=" << r.spec.p << " p_B=" << r.spec.p_burst << " failures="
                  << r.estimate.failures << "/" << r.estimate.shots << '\n';
      });
      std::cout << json{{"results", summary.results_path},
                        {"manifest", summary.manifest_path},
                        {"computed", summary.computed},
                        {"resumed", summary.resumed}}
                       .dump(2)
                << '\n';
    } else if (*fit) {
      auto in = open_input(fit_in);
      const auto points = read_sweep_csv(in);
      const auto swept = fit_swept == "burst" ? SweptVariable::BurstRate : SweptVariable::BackgroundRate;
      const ThresholdFit result = fit_threshold(points, swept, fit_opts);
      Output out(fit_out);
      *out << threshold_fit_json(result).dump(2) << '\n';
    } else if (*tq) {
      LogLinearFit bg, burst;
      bg.c = tq_bg[0];
      bg.m = tq_bg[1];
      burst.c = tq_burst[0];
      burst.m = tq_burst[1];
      std::vector<TeraquopResult> rows;
      for (double tau : parse_taus(tq_tau_raw)) {
        if (!(tau >= 1.0)) throw ConfigError("tau must be at least 1");
        rows.push_back(teraquop_footprint(bg, burst, tau, tq_target));
      }
      Output out(tq_out);
      write_teraquop_csv(*out, rows);
    } else if (*det) {
      if (det_shots < 1) throw ConfigError("shots must be at least 1");
      const NoiseConfig cfg = det_args.noise();
      if (!(cfg.p_burst > cfg.p)) throw ConfigError("detect-burst needs p_B > p");
      const CircuitSpec noisy = det_args.noisy();
      // The test is built on the burst-free graph: the detector does not know where the burst is.
      const DecodingGraph graph = det_args.graph(false);
      const auto panels = select_all_panels(graph);
      const ShotBatch batch = sample(noisy, det_shots, det_seed, std::max(1u, det_workers));
      std::map<int, std::uint64_t> flagged;
      std::optional<Output> out;
      if (!det_out.empty()) {
        out.emplace(det_out);
        write_burst_scan_header(**out);
      }
      for (std::size_t s = 0; s < batch.num_shots; ++s) {
        const auto rows = scan_rounds(graph, panels, batch.shot_words(s), cfg.p, cfg.p_burst);
        for (const auto& r : rows) {
          flagged[r.round];
          if (r.decision == BurstDecision::Burst) ++flagged[r.round];
        }
        if (out) write_burst_scan_rows(**out, s, rows);
      }
      json rounds = json::array();
      for (const auto& [round, count] : flagged)
        rounds.push_back(json{{"round", round},
                              {"flagged", count},
                              {"fraction", static_cast<double>(count) / static_cast<double>(batch.num_shots)}});
      std::cout << json{{"shots", batch.num_shots},
                        {"burst_round", cfg.burst_round ? json(*cfg.burst_round) : json(nullptr)},
                        {"rounds", rounds}}
                       .dump(2)
                << '\n';
    } else if (*den) {
      if (den_shots < 1) throw ConfigError("shots must be at least 1");
      const CircuitSpec noisy = den_args.noisy();
      const DetectorErrorModel dem = build_detector_error_model(noisy);
      const ShotBatch batch = sample(noisy, den_shots, den_seed, std::max(1u, den_workers));
      std::optional<CheckType> only;
      if (den_check == "x") only = CheckType::X;
      if (den_check == "z") only = CheckType::Z;
      const auto density = detector_density(batch, dem.detectors, only ? &*only : nullptr);
      Output out(den_out);
      write_density_csv(*out, density);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
