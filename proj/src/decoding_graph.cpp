#include "burstqec/decoding_graph.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace burstqec {

double edge_weight(double p) {
  if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument("edge probability outside (0, 1/2]");
  return std::log((1.0 - p) / p);
}

namespace {

// Same fold order as mechanism merging, so unchanged rates reproduce the
// stored probability bit for bit.
double source_parity(const std::vector<EdgeSource>& sources) {
  double p = 0.0;
  for (const EdgeSource& s : sources) p = xor_probability(p, s.probability());
  return p;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

DecodingGraph::DecodingGraph(std::vector<DetectorInfo> detectors, std::vector<GraphEdge> edges)
    : detectors_(std::move(detectors)), edges_(std::move(edges)) {
  for (const GraphEdge& e : edges_) {
    if (e.u > boundary() || e.v > boundary() || e.u == e.v) throw std::invalid_argument("malformed graph edge");
  }
  index();
}

void DecodingGraph::index() {
  offsets_.assign(vertex_count() + 1, 0);
  for (const GraphEdge& e : edges_) {
    ++offsets_[e.u + 1];
    ++offsets_[e.v + 1];
  }
  for (std::size_t v = 0; v < vertex_count(); ++v) offsets_[v + 1] += offsets_[v];
  incident_.assign(offsets_.back(), 0);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::uint32_t k = 0; k < edges_.size(); ++k) {
    incident_[fill[edges_[k].u]++] = k;
    incident_[fill[edges_[k].v]++] = k;
  }
}

bool DecodingGraph::connected() const {
  std::vector<std::uint8_t> seen(vertex_count(), 0);
  std::vector<std::uint32_t> stack = {boundary()};
  seen[boundary()] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::uint32_t v = stack.back();
    stack.pop_back();
    for (const std::uint32_t* e = incident_begin(v); e != incident_end(v); ++e) {
      const std::uint32_t w = other_end(*e, v);
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == vertex_count();
}

DecodingGraph build_graph(const DetectorErrorModel& dem) {
  const auto boundary = static_cast<std::uint32_t>(dem.detector_count);
  std::vector<GraphEdge> edges;
  edges.reserve(dem.mechanisms.size());
  for (const FaultMechanism& m : dem.mechanisms) {
    if (m.detectors.empty() || m.detectors.size() > 2) {
      throw std::invalid_argument("mechanism with " + std::to_string(m.detectors.size()) +
                                  " detectors cannot become a graph edge");
    }
    if (m.probability <= 0.0) continue;
    GraphEdge e;
    e.u = m.detectors[0];
    e.v = m.detectors.size() == 2 ? m.detectors[1] : boundary;
    e.probability = m.probability;
    e.weight = edge_weight(std::min(m.probability, 0.5));
    e.flips_observable = m.flips_observable;
    e.round = std::numeric_limits<int>::max();
    for (const FaultContribution& c : m.provenance) {
      e.sources.push_back({c.factor, c.rate, c.round});
      e.round = std::min(e.round, c.round);
    }
    if (e.sources.empty()) e.round = 0;
    edges.push_back(std::move(e));
  }
  // Mechanisms are already unique per (detectors, observable), so parallel
  // edges left here differ in their observable bit and stay separate.
  std::vector<DetectorInfo> detectors = dem.detectors;
  detectors.resize(dem.detector_count);
  return DecodingGraph(std::move(detectors), std::move(edges));
}

DecodingGraph reweight_burst(const DecodingGraph& graph, int burst_round, double p_burst) {
  if (!(p_burst > 0.0 && p_burst < 0.5)) throw std::invalid_argument("p_B must lie in (0, 1/2)");
  if (burst_round < 0) throw std::invalid_argument("burst round must be non-negative");
  std::vector<GraphEdge> edges = graph.edges();
  for (GraphEdge& e : edges) {
    bool touched = false;
    for (EdgeSource& s : e.sources) {
      if (s.round == burst_round) {
        s.rate = p_burst;
        touched = true;
      }
    }
    if (!touched) continue;
    e.probability = source_parity(e.sources);
    e.weight = edge_weight(std::min(e.probability, 0.5));
  }
  return DecodingGraph(graph.detectors(), std::move(edges));
}

std::size_t graphlike_distance(const DecodingGraph& graph) {
  const std::size_t n = graph.vertex_count();
  std::vector<std::size_t> dist(2 * n, std::numeric_limits<std::size_t>::max());
  std::deque<std::size_t> queue;
  const std::size_t start = 2 * graph.boundary();
  dist[start] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    const std::size_t state = queue.front();
    queue.pop_front();
    const auto v = static_cast<std::uint32_t>(state / 2);
    const std::size_t parity = state % 2;
    for (const std::uint32_t* e = graph.incident_begin(v); e != graph.incident_end(v); ++e) {
      const std::size_t next = 2 * graph.other_end(*e, v) + (parity ^ graph.edges()[*e].flips_observable);
      if (dist[next] != std::numeric_limits<std::size_t>::max()) continue;
      dist[next] = dist[state] + 1;
      if (next == start + 1) return dist[next];
      queue.push_back(next);
    }
  }
  return std::numeric_limits<std::size_t>::max();
}

void write_graph(std::ostream& out, const DecodingGraph& graph) {
  out << "BURSTQEC_GRAPH 1\n";
  out << "DETECTORS " << graph.detector_count() << "\n";
  for (std::size_t i = 0; i < graph.detector_count(); ++i) {
    const DetectorInfo& d = graph.detectors()[i];
    out << "V " << i << " " << d.coord.x << " " << d.coord.y << " " << d.round << " "
        << (d.type == CheckType::X ? 'X' : 'Z') << "\n";
  }
  out << "EDGES " << graph.edges().size() << "\n";
  for (const GraphEdge& e : graph.edges()) {
    out << "E " << e.u << " " << e.v << " " << fmt(e.weight) << " " << fmt(e.probability) << " "
        << (e.flips_observable ? 1 : 0) << " " << e.round << " " << e.sources.size() << "\n";
    for (const EdgeSource& s : e.sources) out << "S " << fmt(s.factor) << " " << fmt(s.rate) << " " << s.round << "\n";
  }
}

std::string graph_to_string(const DecodingGraph& graph) {
  std::ostringstream ss;
  write_graph(ss, graph);
  return ss.str();
}

DecodingGraph parse_graph(std::istream& in) {
  auto fail = [](const std::string& what) -> void { throw std::runtime_error("graph parse error: " + what); };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "BURSTQEC_GRAPH" || version != 1) fail("bad header");
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "DETECTORS") fail("missing DETECTORS");
  std::vector<DetectorInfo> detectors(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t id = 0;
    char type = 0;
    DetectorInfo& d = detectors[i];
    if (!(in >> tag >> id >> d.coord.x >> d.coord.y >> d.round >> type) || tag != "V" || id != i) fail("bad vertex");
    if (type != 'X' && type != 'Z') fail("bad detector type");
    d.type = type == 'X' ? CheckType::X : CheckType::Z;
  }
  std::size_t m = 0;
  if (!(in >> tag >> m) || tag != "EDGES") fail("missing EDGES");
  std::vector<GraphEdge> edges(m);
  for (GraphEdge& e : edges) {
    int obs = 0;
    std::size_t sources = 0;
    if (!(in >> tag >> e.u >> e.v >> e.weight >> e.probability >> obs >> e.round >> sources) || tag != "E") {
      fail("bad edge");
    }
    e.flips_observable = obs != 0;
    e.sources.resize(sources);
    for (EdgeSource& s : e.sources) {
      if (!(in >> tag >> s.factor >> s.rate >> s.round) || tag != "S") fail("bad edge source");
    }
  }
  return DecodingGraph(std::move(detectors), std::move(edges));
}

}  // namespace burstqec
