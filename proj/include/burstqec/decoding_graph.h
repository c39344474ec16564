#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "burstqec/fault_propagation.h"

namespace burstqec {

/// log((1 - p) / p); zero at p = 1/2.
double edge_weight(double p);

/// One independent fault feeding an edge. The edge probability is the parity
/// of its sources, so reweighting a round only needs the sources' rates.
struct EdgeSource {
  double factor = 1.0;
  double rate = 0.0;
  int round = 0;
  double probability() const { return factor * rate; }
};

struct GraphEdge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;  // boundary() for single-detector mechanisms
  double weight = 0.0;
  double probability = 0.0;
  bool flips_observable = false;
  int round = 0;  // earliest round among the sources
  std::vector<EdgeSource> sources;
};

/// Detectors plus a single boundary vertex with index detector_count.
class DecodingGraph {
 public:
  DecodingGraph() = default;
  DecodingGraph(std::vector<DetectorInfo> detectors, std::vector<GraphEdge> edges);

  std::size_t detector_count() const { return detectors_.size(); }
  std::size_t vertex_count() const { return detectors_.size() + 1; }
  std::uint32_t boundary() const { return static_cast<std::uint32_t>(detectors_.size()); }
  const std::vector<DetectorInfo>& detectors() const { return detectors_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }

  /// Edge ids incident to vertex v.
  const std::uint32_t* incident_begin(std::uint32_t v) const { return incident_.data() + offsets_[v]; }
  const std::uint32_t* incident_end(std::uint32_t v) const { return incident_.data() + offsets_[v + 1]; }
  std::size_t degree(std::uint32_t v) const { return offsets_[v + 1] - offsets_[v]; }
  std::uint32_t other_end(std::uint32_t edge, std::uint32_t v) const {
    return edges_[edge].u == v ? edges_[edge].v : edges_[edge].u;
  }

  bool connected() const;

 private:
  void index();

  std::vector<DetectorInfo> detectors_;
  std::vector<GraphEdge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> incident_;
};

/// Throws std::invalid_argument for a mechanism with zero or more than two
/// detectors.
DecodingGraph build_graph(const DetectorErrorModel& dem);

/// Recomputes every edge with a source in `burst_round` at rate p_B.
/// Requires 0 < p_B < 1/2.
DecodingGraph reweight_burst(const DecodingGraph& graph, int burst_round, double p_burst);

/// Minimum number of edges on a boundary-to-boundary (or closed) path with odd
/// observable parity: the graphlike distance of the model.
std::size_t graphlike_distance(const DecodingGraph& graph);

void write_graph(std::ostream& out, const DecodingGraph& graph);
std::string graph_to_string(const DecodingGraph& graph);
DecodingGraph parse_graph(std::istream& in);

}  // namespace burstqec
