#include "burstqec/experiment.h"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "burstqec/code_model.h"
#include "burstqec/decoding_graph.h"
#include "burstqec/fault_propagation.h"
#include "burstqec/matching_decoder.h"
#include "burstqec/rng.h"
#include "burstqec/sampler.h"

namespace burstqec {

namespace {

using nlohmann::json;

const char* placement_name(BurstPlacement b) {
  switch (b) {
    case BurstPlacement::Half: return "half";
    case BurstPlacement::Explicit: return "explicit";
    case BurstPlacement::None: return "none";
  }
  return "?";
}

BurstPlacement parse_placement(const std::string& s) {
  if (s == "half") return BurstPlacement::Half;
  if (s == "explicit") return BurstPlacement::Explicit;
  if (s == "none") return BurstPlacement::None;
  throw std::invalid_argument("unknown burst placement '" + s + "'");
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Shortest representation that round-trips.
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::optional<int> ExperimentConfig::burst_round_for(int T) const {
  switch (burst) {
    case BurstPlacement::Half: return T / 2;
    case BurstPlacement::Explicit: return burst_round;
    case BurstPlacement::None: return std::nullopt;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  if (distances.empty()) throw std::invalid_argument("distance list is empty");
  if (p.empty()) throw std::invalid_argument("p list is empty");
  if (burst != BurstPlacement::None && p_burst.empty()) throw std::invalid_argument("p_B list is empty");
  if (shots < 1) throw std::invalid_argument("shots must be at least 1");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
  if (rounds && *rounds < 1) throw std::invalid_argument("T must be at least 1");
  for (int d : distances)
    if (d < 3 || d % 2 == 0) throw std::invalid_argument("distance " + std::to_string(d) + " is not an odd d >= 3");
  for (double v : p)
    if (!(v > 0.0 && v < 0.5)) throw std::invalid_argument("p must lie in (0, 1/2)");
  for (double v : p_burst)
    if (!(v > 0.0 && v < 0.5)) throw std::invalid_argument("p_B must lie in (0, 1/2)");
  for (int d : distances) {
    const int T = rounds_for(d);
    const auto r = burst_round_for(T);
    if (r && (*r < 0 || *r >= T))
      throw std::invalid_argument("burst round " + std::to_string(*r) + " is outside 0.." + std::to_string(T - 1));
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = std::string(model_name(c.model));
  j["distances"] = c.distances;
  j["p"] = c.p;
  j["p_B"] = c.burst == BurstPlacement::None ? std::vector<double>{} : c.p_burst;
  j["T"] = c.rounds ? json(*c.rounds) : json("2d");
  json b;
  b["placement"] = placement_name(c.burst);
  if (c.burst == BurstPlacement::Explicit) b["round"] = c.burst_round;
  j["burst"] = b;
  j["burst_aware"] = c.burst_aware;
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    c.distances = j.at("distances").get<std::vector<int>>();
    c.p = j.at("p").get<std::vector<double>>();
    if (j.contains("p_B")) c.p_burst = j.at("p_B").get<std::vector<double>>();
    if (j.contains("T")) {
      const auto& t = j.at("T");
      if (t.is_string()) {
        if (t.get<std::string>() != "2d") throw std::invalid_argument("T must be \"2d\" or an integer");
      } else {
        c.rounds = t.get<int>();
      }
    }
    if (j.contains("burst")) {
      const auto& b = j.at("burst");
      c.burst = parse_placement(b.at("placement").get<std::string>());
      if (c.burst == BurstPlacement::Explicit) c.burst_round = b.at("round").get<int>();
    }
    if (j.contains("burst_aware")) c.burst_aware = j.at("burst_aware").get<bool>();
    c.shots = j.at("shots").get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad config: ") + e.what());
  }
  return c;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

json PointSpec::to_json() const {
  json j;
  j["model"] = std::string(model_name(model));
  j["d"] = d;
  j["p"] = p;
  j["p_B"] = p_burst;
  j["T"] = T;
  j["burst_round"] = burst_round ? json(*burst_round) : json(nullptr);
  j["burst_aware"] = burst_aware;
  j["shots"] = shots;
  j["seed"] = seed;
  return j;
}

std::uint64_t PointSpec::sample_seed() const {
  std::uint64_t s = std::stoull(hash(), nullptr, 16);
  return splitmix64(s);
}

std::vector<PointSpec> expand_points(const ExperimentConfig& c) {
  c.validate();
  std::vector<PointSpec> out;
  const std::vector<double> none_list{0.0};
  const auto& pbs = c.burst == BurstPlacement::None ? none_list : c.p_burst;
  for (int d : c.distances)
    for (double p : c.p)
      for (double pb : pbs) {
        PointSpec s;
        s.model = c.model;
        s.d = d;
        s.p = p;
        s.T = c.rounds_for(d);
        s.burst_round = c.burst_round_for(s.T);
        s.p_burst = s.burst_round ? pb : p;
        s.burst_aware = c.burst_aware;
        s.shots = c.shots;
        s.seed = c.seed;
        out.push_back(s);
      }
  return out;
}

ResultRecord run_point(const PointSpec& spec, unsigned workers) {
  const auto start = std::chrono::steady_clock::now();
  const CircuitSpec base = build_memory_circuit(build_layout(spec.d), spec.T);
  const NoiseConfig noise = spec.noise();
  noise.validate(spec.T);
  const CircuitSpec noisy = attach_noise(base, noise);

  DecodingGraph graph;
  if (spec.burst_aware || !spec.burst_round) {
    graph = build_graph(build_detector_error_model(noisy));
  } else {
    NoiseConfig flat = noise;
    flat.burst_round.reset();
    graph = build_graph(build_detector_error_model(attach_noise(base, flat)));
  }

  const ShotBatch batch = sample(noisy, spec.shots, spec.sample_seed(), workers);
  ResultRecord r;
  r.spec = spec;
  r.point_hash = spec.hash();
  r.estimate = logical_error_rate(graph, batch, workers);
  r.point = {spec.d, spec.p, spec.p_burst, spec.T, r.estimate.shots, r.estimate.failures};
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols{"config_hash", "point_hash", "model",   "d",           "p",
                                             "p_B",         "T",          "burst_round", "burst_aware", "seed",
                                             "shots",       "failures",   "rate",    "ci_low",      "ci_high",
                                             "version"};
  return cols;
}

std::string result_row(const ResultRecord& r) {
  std::ostringstream o;
  o << r.config_hash << ',' << r.point_hash << ',' << model_name(r.spec.model) << ',' << r.spec.d << ','
    << num(r.spec.p) << ',' << num(r.spec.p_burst) << ',' << r.spec.T << ','
    << (r.spec.burst_round ? *r.spec.burst_round : -1) << ',' << (r.spec.burst_aware ? 1 : 0) << ','
    << r.spec.seed << ',' << r.estimate.shots << ',' << r.estimate.failures << ',' << num(r.estimate.rate) << ','
    << num(r.estimate.ci_low) << ',' << num(r.estimate.ci_high) << ',' << r.version;
  return o.str();
}

std::vector<ResultRecord> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv(line);
  if (header != results_columns()) throw std::runtime_error(path + ": unexpected header");
  std::vector<ResultRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong field count");
    ResultRecord r;
    try {
      r.config_hash = f[0];
      r.point_hash = f[1];
      r.spec.model = parse_model(f[2]);
      r.spec.d = std::stoi(f[3]);
      r.spec.p = std::stod(f[4]);
      r.spec.p_burst = std::stod(f[5]);
      r.spec.T = std::stoi(f[6]);
      const int br = std::stoi(f[7]);
      if (br >= 0) r.spec.burst_round = br;
      r.spec.burst_aware = f[8] == "1";
      r.spec.seed = std::stoull(f[9]);
      r.spec.shots = std::stoull(f[10]);
      r.estimate = wilson_estimate(std::stoull(f[11]), r.spec.shots);
      r.version = f[15];
    } catch (const std::logic_error&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed record");
    }
    r.point = {r.spec.d, r.spec.p, r.spec.p_burst, r.spec.T, r.estimate.shots, r.estimate.failures};
    out.push_back(std::move(r));
  }
  return out;
}

SweepSummary run_sweep(const ExperimentConfig& config, const std::function<void(const ResultRecord&)>& on_point) {
  const auto points = expand_points(config);
  namespace fs = std::filesystem;
  const fs::path dir = config.output_dir.empty() ? fs::path(".") : fs::path(config.output_dir);
  fs::create_directories(dir);

  SweepSummary summary;
  summary.results_path = (dir / "results.csv").string();
  summary.manifest_path = (dir / "manifest.json").string();
  const std::string timings_path = (dir / "timings.csv").string();

  std::map<std::string, ResultRecord> done;
  if (fs::exists(summary.results_path) && fs::file_size(summary.results_path) > 0)
    for (auto& r : read_results(summary.results_path)) done.emplace(r.point_hash, std::move(r));

  const bool fresh = done.empty() && (!fs::exists(summary.results_path) || fs::file_size(summary.results_path) == 0);
  std::ofstream results(summary.results_path, std::ios::app);
  if (!results) throw std::runtime_error("cannot write " + summary.results_path);
  if (fresh) {
    const auto& cols = results_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) results << (i ? "," : "") << cols[i];
    results << '\n' << std::flush;
  }
  const bool timings_fresh = !fs::exists(timings_path) || fs::file_size(timings_path) == 0;
  std::ofstream timings(timings_path, std::ios::app);
  if (!timings) throw std::runtime_error("cannot write " + timings_path);
  if (timings_fresh) timings << "point_hash,wall_seconds\n" << std::flush;

  const std::string chash = config_hash(config_to_json(config));
  std::set<std::string> seen;
  for (const auto& spec : points) {
    const std::string ph = spec.hash();
    if (!seen.insert(ph).second) continue;
    auto it = done.find(ph);
    if (it != done.end()) {
      summary.records.push_back(it->second);
      ++summary.resumed;
      continue;
    }
    ResultRecord r = run_point(spec, config.workers);
    r.config_hash = chash;
    results << result_row(r) << '\n' << std::flush;
    if (!results) throw std::runtime_error("write failed: " + summary.results_path);
    timings << ph << ',' << fmt("%.3f", r.wall_seconds) << '\n' << std::flush;
    ++summary.computed;
    if (on_point) on_point(r);
    summary.records.push_back(std::move(r));
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = config_to_json(config);
  manifest["config_hash"] = chash;
  manifest["results"] = "results.csv";
  manifest["timings"] = "timings.csv";
  json pts = json::array();
  for (const auto& r : summary.records) {
    pts.push_back(json{{"point_hash", r.point_hash},
                   {"d", r.spec.d},
                   {"p", r.spec.p},
                   {"p_B", r.spec.p_burst},
                   {"T", r.spec.T},
                   {"failures", r.estimate.failures},
                   {"shots", r.estimate.shots}});
  }
  manifest["points"] = pts;
  std::ofstream m(summary.manifest_path, std::ios::trunc);
  if (!m) throw std::runtime_error("cannot write " + summary.manifest_path);
  m << manifest.dump(2) << '\n';
  if (!m) throw std::runtime_error("write failed: " + summary.manifest_path);
  return summary;
}

json threshold_fit_json(const ThresholdFit& f) {
  json j;
  j["swept"] = swept_name(f.swept);
  j["p_star"] = f.p_star;
  j["p_star_se"] = f.p_star_se;
  j["nu0"] = f.nu0;
  j["nu0_se"] = f.nu0_se;
  j["A"] = f.A;
  j["B"] = f.B;
  j["C"] = f.C;
  json cov = json::array();
  for (const auto& row : f.covariance) cov.push_back(row);
  j["covariance"] = {{"parameters", {"A", "B", "C", "p_star", "nu0"}}, {"matrix", cov}};
  j["chi2"] = f.chi2;
  j["dof"] = f.dof;
  j["chi2_per_dof"] = f.chi2_per_dof;
  j["bootstrap"] = {{"resamples", f.bootstrap_resamples},
                    {"p_star_low", f.p_star_boot_low},
                    {"p_star_high", f.p_star_boot_high},
                    {"p_star_se", f.p_star_boot_se}};
  j["distances"] = f.distances;
  j["range"] = {f.range_low, f.range_high};
  j["points_used"] = f.points_used;
  return j;
}

json log_linear_json(const LogLinearFit& f) {
  json j;
  j["c"] = f.c;
  j["m"] = f.m;
  j["c_se"] = f.c_se;
  j["m_se"] = f.m_se;
  j["cov_cm"] = f.cov_cm;
  j["chi2"] = f.chi2;
  j["points"] = f.points;
  j["excluded"] = f.excluded;
  j["bootstrap"] = {{"resamples", f.bootstrap_resamples},
                    {"c_low", f.c_boot_low},
                    {"c_high", f.c_boot_high},
                    {"m_low", f.m_boot_low},
                    {"m_high", f.m_boot_high}};
  return j;
}

void write_teraquop_csv(std::ostream& out, const std::vector<TeraquopResult>& rows) {
  out << "tau,d_min,footprint,p_l\n";
  for (const auto& r : rows)
    out << (std::isinf(r.tau) ? std::string("inf") : num(r.tau)) << ',' << r.d_min << ',' << r.footprint << ','
        << num(r.p_l) << '\n';
}

void write_density_csv(std::ostream& out, const std::vector<double>& density) {
  out << "round,density\n";
  for (std::size_t r = 0; r < density.size(); ++r) out << r << ',' << num(density[r]) << '\n';
}

void write_burst_scan_header(std::ostream& out) {
  out << "shot,round,n,w,weight,llr,decision,bound_false_pos,bound_false_neg\n";
}

void write_burst_scan_rows(std::ostream& out, std::size_t shot, const std::vector<RoundStatistic>& rows) {
  for (const auto& r : rows)
    out << shot << ',' << r.round << ',' << r.n << ',' << r.w << ',' << r.weight << ',' << num(r.llr) << ','
        << (r.decision == BurstDecision::Burst ? "burst" : "background") << ',' << num(r.bound_false_pos) << ','
        << num(r.bound_false_neg) << '\n';
}

}  // namespace burstqec
