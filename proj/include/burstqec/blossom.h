#pragma once

#include <cstdint>
#include <vector>

namespace burstqec {

/// Maximum-weight matching on a general graph with integer edge weights.
///
/// Primal-dual blossom algorithm (Edmonds; Galil's O(n^3) formulation as
/// organised by van Rantwijk). Vertex duals are stored doubled so that all
/// arithmetic stays integral. After solve() the final duals remain available,
/// which lets a caller certify the matching against edges it never passed in.
class MaxWeightMatcher {
 public:
  struct Edge {
    int i = 0;
    int j = 0;
    std::int64_t w = 0;
  };

  /// mate[v] is v's partner or -1.
  const std::vector<int>& solve(int vertices, const std::vector<Edge>& edges);

  /// Reduced cost 2 * (u_i + u_j - w + sum of z over blossoms holding both)
  /// of a candidate edge under the final duals. The matching stays optimal
  /// after adding every candidate with non-negative slack.
  std::int64_t slack_of(int i, int j, std::int64_t w) const;

 private:
  std::int64_t slack(int k) const { return dual_[edges_[k].i] + dual_[edges_[k].j] - 2 * edges_[k].w; }
  int endpoint(int p) const { return (p & 1) ? edges_[p >> 1].j : edges_[p >> 1].i; }
  void leaves(int b, std::vector<int>& out) const;
  void assign_label(int w, int t, int p);
  int scan_blossom(int v, int w);
  void add_blossom(int base, int k);
  void expand_blossom(int b, bool endstage);
  void augment_blossom(int b, int v);
  void augment_matching(int k);

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> nb_offset_, nb_end_;  // CSR of endpoint indices per vertex
  std::vector<int> mate_end_;            // remote endpoint of the matched edge
  std::vector<int> mate_;
  std::vector<int> label_, label_end_, in_blossom_, parent_, base_, best_edge_;
  std::vector<std::vector<int>> childs_, endps_, best_edges_;
  std::vector<char> has_best_edges_;
  std::vector<int> unused_;
  std::vector<std::int64_t> dual_;
  std::vector<char> allow_;
  std::vector<int> queue_;
  std::vector<int> scratch_;
};

}  // namespace burstqec
