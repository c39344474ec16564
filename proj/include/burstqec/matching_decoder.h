#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "burstqec/blossom.h"
#include "burstqec/decoding_graph.h"
#include "burstqec/sampler.h"

namespace burstqec {

/// Edge weights are rounded to multiples of 1 / kWeightScale before matching,
/// so all path and matching arithmetic is exact integer arithmetic.
inline constexpr double kWeightScale = 65536.0;
inline constexpr std::int64_t kUnreachable = std::numeric_limits<std::int64_t>::max() / 8;
inline constexpr int kBoundaryPartner = -1;

std::int64_t quantize_weight(double weight);

/// Minimum-weight perfect matching over n defects where every defect may
/// instead be matched to its own boundary copy (copies pair up at zero cost).
struct MatchingProblem {
  std::size_t n = 0;
  std::vector<std::int64_t> pair;      // n * n, symmetric; kUnreachable for no path
  std::vector<std::int64_t> boundary;  // n entries, or empty when there is no boundary
  std::vector<std::uint8_t> pair_parity;      // optional, n * n
  std::vector<std::uint8_t> boundary_parity;  // optional, n
};

struct MatchingResult {
  std::vector<std::pair<int, int>> pairs;  // (defect, defect or kBoundaryPartner)
  std::int64_t weight = 0;
  bool predicted_observable = false;
};

/// Reusable buffers for repeated matching calls on one thread.
struct MatchingWorkspace {
  MaxWeightMatcher matcher;
  std::vector<MaxWeightMatcher::Edge> candidates;
  std::vector<std::uint8_t> in_candidates;
  std::vector<std::pair<std::int64_t, int>> order;
  std::size_t resolves = 0;  // certificate failures that forced a re-solve
  // Above this many positive-gain pairs only near neighbours are passed to the
  // matcher first; 0 picks a size-based default.
  std::size_t dense_limit = 0;
};

/// Exact minimum-weight matching. Throws std::runtime_error if some defect can
/// neither reach the boundary nor be paired.
MatchingResult min_weight_matching(const MatchingProblem& problem);
MatchingResult min_weight_matching(const MatchingProblem& problem, MatchingWorkspace& ws);

/// Shortest paths among defects and from each defect to the boundary. Paths
/// never pass through the boundary vertex; going through it is the same as
/// matching both ends to the boundary.
struct DefectDistances {
  std::vector<std::uint32_t> defects;
  std::vector<std::int64_t> pair;      // quantized, n * n
  std::vector<std::int64_t> boundary;  // quantized, n
  std::vector<std::uint8_t> pair_parity;
  std::vector<std::uint8_t> boundary_parity;

  double distance(std::size_t i, std::size_t j) const { return static_cast<double>(pair[i * defects.size() + j]) / kWeightScale; }
  double boundary_distance(std::size_t i) const { return static_cast<double>(boundary[i]) / kWeightScale; }
  /// Edge ids of a shortest path from defect i to defect j, or to the boundary
  /// when j == defects.size().
  std::vector<std::uint32_t> path(std::size_t i, std::size_t j) const;

  MatchingProblem problem() const;

  const DecodingGraph* graph = nullptr;
  std::vector<std::vector<std::int32_t>> pred_edge;  // per source defect
  std::vector<std::int32_t> boundary_pred_edge;      // tree rooted at the boundary
};

DefectDistances defect_distances(const DecodingGraph& graph, const std::vector<std::uint32_t>& defects);

struct DecodeResult {
  std::size_t defects = 0;
  double weight = 0.0;
  bool prediction = false;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> matches;  // detector ids; boundary() for the boundary
};

struct LogicalErrorEstimate {
  std::uint64_t failures = 0;
  std::uint64_t shots = 0;
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Wilson score interval at 95% confidence.
LogicalErrorEstimate wilson_estimate(std::uint64_t failures, std::uint64_t shots);

/// MWPM decoder bound to one graph. Precomputes boundary distances and, for
/// graphs up to `table_limit` decodable vertices, an all-pairs distance table.
/// Components of the graph with no observable-flipping edge are ignored: every
/// correction inside them leaves the observable alone.
class MatchingDecoder {
 public:
  explicit MatchingDecoder(const DecodingGraph& graph, std::size_t table_limit = 6000);
  ~MatchingDecoder();
  MatchingDecoder(const MatchingDecoder&) = delete;
  MatchingDecoder& operator=(const MatchingDecoder&) = delete;

  /// Per-thread scratch space.
  struct Workspace {
    MatchingProblem problem;
    MatchingWorkspace matching;
    std::vector<std::uint32_t> local;
    std::vector<std::int64_t> dist;
    std::vector<std::uint8_t> parity;
    std::vector<std::uint32_t> stamp;
    std::vector<std::int32_t> defect_at;
    std::uint32_t epoch = 0;
    std::vector<std::pair<std::int64_t, std::uint32_t>> heap;
  };
  std::unique_ptr<Workspace> make_workspace() const;

  /// `words` holds detector bits packed 64 per word.
  DecodeResult decode(const std::uint64_t* words, Workspace& ws, bool want_matches = false) const;
  bool decode_shot(const ShotRecord& shot) const;

  bool uses_table() const { return !table_.empty(); }
  const DecodingGraph& graph() const { return graph_; }

 private:
  void fill_problem(const std::vector<std::uint32_t>& local, Workspace& ws) const;

  const DecodingGraph& graph_;
  std::vector<std::int32_t> local_;       // detector -> decodable index or -1
  std::vector<std::uint32_t> detector_;   // decodable index -> detector
  std::vector<std::int64_t> bdist_;       // per decodable vertex
  std::vector<std::uint8_t> bparity_;
  std::int64_t max_bdist_ = 0;
  // CSR over decodable vertices, boundary edges removed.
  std::vector<std::uint32_t> adj_offset_, adj_to_;
  std::vector<std::int64_t> adj_w_;
  std::vector<std::uint8_t> adj_obs_;
  std::vector<std::uint32_t> table_;  // (distance << 1) | parity, row-major
};

bool decode_shot(const DecodingGraph& graph, const ShotRecord& shot);

LogicalErrorEstimate logical_error_rate(const DecodingGraph& graph, const ShotBatch& batch, unsigned workers = 1);

/// CSV: shot,defects,weight,prediction,actual,failure
void write_decode_csv(std::ostream& out, const DecodingGraph& graph, const ShotBatch& batch);

}  // namespace burstqec
