#include "burstqec/blossom.h"

#include <algorithm>
#include <stdexcept>

namespace burstqec {

namespace {

// Python-style index into a cyclic child list.
inline int wrap(int j, int len) { return ((j % len) + len) % len; }

}  // namespace

void MaxWeightMatcher::leaves(int b, std::vector<int>& out) const {
  if (b < n_) {
    out.push_back(b);
    return;
  }
  for (int t : childs_[b]) leaves(t, out);
}

void MaxWeightMatcher::assign_label(int w, int t, int p) {
  const int b = in_blossom_[w];
  label_[w] = label_[b] = t;
  label_end_[w] = label_end_[b] = p;
  best_edge_[w] = best_edge_[b] = -1;
  if (t == 1) {
    leaves(b, queue_);
  } else {
    const int base = base_[b];
    assign_label(endpoint(mate_end_[base]), 1, mate_end_[base] ^ 1);
  }
}

// Walks back from v and w towards their roots. Returns the base of a new
// blossom, or -1 when the roots differ (augmenting path).
int MaxWeightMatcher::scan_blossom(int v, int w) {
  std::vector<int> path;
  int base = -1;
  while (v != -1 || w != -1) {
    int b = in_blossom_[v];
    if (label_[b] & 4) {
      base = base_[b];
      break;
    }
    path.push_back(b);
    label_[b] = 5;
    if (label_end_[b] == -1) {
      v = -1;
    } else {
      v = endpoint(label_end_[b]);
      b = in_blossom_[v];
      v = endpoint(label_end_[b]);
    }
    if (w != -1) std::swap(v, w);
  }
  for (int b : path) label_[b] = 1;
  return base;
}

void MaxWeightMatcher::add_blossom(int base, int k) {
  int v = edges_[k].i;
  int w = edges_[k].j;
  const int bb = in_blossom_[base];
  int bv = in_blossom_[v];
  int bw = in_blossom_[w];
  const int b = unused_.back();
  unused_.pop_back();
  base_[b] = base;
  parent_[b] = -1;
  parent_[bb] = b;
  std::vector<int>& path = childs_[b];
  std::vector<int>& endps = endps_[b];
  path.clear();
  endps.clear();
  while (bv != bb) {
    parent_[bv] = b;
    path.push_back(bv);
    endps.push_back(label_end_[bv]);
    v = endpoint(label_end_[bv]);
    bv = in_blossom_[v];
  }
  path.push_back(bb);
  std::reverse(path.begin(), path.end());
  std::reverse(endps.begin(), endps.end());
  endps.push_back(2 * k);
  while (bw != bb) {
    parent_[bw] = b;
    path.push_back(bw);
    endps.push_back(label_end_[bw] ^ 1);
    w = endpoint(label_end_[bw]);
    bw = in_blossom_[w];
  }
  label_[b] = 1;
  label_end_[b] = label_end_[bb];
  dual_[b] = 0;
  scratch_.clear();
  leaves(b, scratch_);
  for (int leaf : scratch_) {
    if (label_[in_blossom_[leaf]] == 2) queue_.push_back(leaf);
    in_blossom_[leaf] = b;
  }

  // Least-slack edge from the new blossom to every neighbouring S-blossom.
  std::vector<int> best_to(2 * n_, -1);
  auto consider = [&](int edge) {
    int i = edges_[edge].i;
    int j = edges_[edge].j;
    if (in_blossom_[j] == b) std::swap(i, j);
    const int bj = in_blossom_[j];
    if (bj != b && label_[bj] == 1 && (best_to[bj] == -1 || slack(edge) < slack(best_to[bj]))) {
      best_to[bj] = edge;
    }
  };
  std::vector<int> sub;
  for (int child : path) {
    if (!has_best_edges_[child]) {
      sub.clear();
      leaves(child, sub);
      for (int leaf : sub) {
        for (int q = nb_offset_[leaf]; q < nb_offset_[leaf + 1]; ++q) consider(nb_end_[q] >> 1);
      }
    } else {
      for (int edge : best_edges_[child]) consider(edge);
    }
    best_edges_[child].clear();
    has_best_edges_[child] = 0;
    best_edge_[child] = -1;
  }
  best_edges_[b].clear();
  for (int edge : best_to) {
    if (edge != -1) best_edges_[b].push_back(edge);
  }
  has_best_edges_[b] = 1;
  best_edge_[b] = -1;
  for (int edge : best_edges_[b]) {
    if (best_edge_[b] == -1 || slack(edge) < slack(best_edge_[b])) best_edge_[b] = edge;
  }
}

void MaxWeightMatcher::expand_blossom(int b, bool endstage) {
  const std::vector<int> children = childs_[b];
  for (int s : children) {
    parent_[s] = -1;
    if (s < n_) {
      in_blossom_[s] = s;
    } else if (endstage && dual_[s] == 0) {
      expand_blossom(s, endstage);
    } else {
      scratch_.clear();
      leaves(s, scratch_);
      for (int leaf : scratch_) in_blossom_[leaf] = s;
    }
  }
  if (!endstage && label_[b] == 2) {
    // Relabel the sub-blossoms on the even-length path from the entry child
    // to the base.
    const int len = static_cast<int>(children.size());
    const std::vector<int>& endps = endps_[b];
    const int entry = in_blossom_[endpoint(label_end_[b] ^ 1)];
    int j = static_cast<int>(std::find(children.begin(), children.end(), entry) - children.begin());
    int jstep, trick;
    if (j & 1) {
      j -= len;
      jstep = 1;
      trick = 0;
    } else {
      jstep = -1;
      trick = 1;
    }
    int p = label_end_[b];
    while (j != 0) {
      label_[endpoint(p ^ 1)] = 0;
      label_[endpoint(endps[wrap(j - trick, len)] ^ trick ^ 1)] = 0;
      assign_label(endpoint(p ^ 1), 2, p);
      allow_[endps[wrap(j - trick, len)] >> 1] = 1;
      j += jstep;
      p = endps[wrap(j - trick, len)] ^ trick;
      allow_[p >> 1] = 1;
      j += jstep;
    }
    const int bv = children[wrap(j, len)];
    label_[endpoint(p ^ 1)] = label_[bv] = 2;
    label_end_[endpoint(p ^ 1)] = label_end_[bv] = p;
    best_edge_[bv] = -1;
    j += jstep;
    while (children[wrap(j, len)] != entry) {
      const int sb = children[wrap(j, len)];
      if (label_[sb] == 1) {
        j += jstep;
        continue;
      }
      scratch_.clear();
      leaves(sb, scratch_);
      int reached = -1;
      for (int leaf : scratch_) {
        if (label_[leaf] != 0) {
          reached = leaf;
          break;
        }
      }
      if (reached != -1) {
        label_[reached] = 0;
        label_[endpoint(mate_end_[base_[sb]])] = 0;
        assign_label(reached, 2, label_end_[reached]);
      }
      j += jstep;
    }
  }
  label_[b] = label_end_[b] = -1;
  childs_[b].clear();
  endps_[b].clear();
  base_[b] = -1;
  best_edges_[b].clear();
  has_best_edges_[b] = 0;
  best_edge_[b] = -1;
  unused_.push_back(b);
}

// Swaps matched and unmatched edges on the path inside blossom b from vertex v
// to the base, making v the new base.
void MaxWeightMatcher::augment_blossom(int b, int v) {
  int t = v;
  while (parent_[t] != b) t = parent_[t];
  if (t >= n_) augment_blossom(t, v);
  std::vector<int>& children = childs_[b];
  std::vector<int>& endps = endps_[b];
  const int len = static_cast<int>(children.size());
  const int i = static_cast<int>(std::find(children.begin(), children.end(), t) - children.begin());
  int j = i;
  int jstep, trick;
  if (i & 1) {
    j -= len;
    jstep = 1;
    trick = 0;
  } else {
    jstep = -1;
    trick = 1;
  }
  while (j != 0) {
    j += jstep;
    t = children[wrap(j, len)];
    const int p = endps[wrap(j - trick, len)] ^ trick;
    if (t >= n_) augment_blossom(t, endpoint(p));
    j += jstep;
    t = children[wrap(j, len)];
    if (t >= n_) augment_blossom(t, endpoint(p ^ 1));
    mate_end_[endpoint(p)] = p ^ 1;
    mate_end_[endpoint(p ^ 1)] = p;
  }
  std::rotate(children.begin(), children.begin() + i, children.end());
  std::rotate(endps.begin(), endps.begin() + i, endps.end());
  base_[b] = base_[children[0]];
}

void MaxWeightMatcher::augment_matching(int k) {
  for (int side = 0; side < 2; ++side) {
    int s = side == 0 ? edges_[k].i : edges_[k].j;
    int p = side == 0 ? 2 * k + 1 : 2 * k;
    while (true) {
      const int bs = in_blossom_[s];
      if (bs >= n_) augment_blossom(bs, s);
      mate_end_[s] = p;
      if (label_end_[bs] == -1) break;
      const int t = endpoint(label_end_[bs]);
      const int bt = in_blossom_[t];
      s = endpoint(label_end_[bt]);
      const int j = endpoint(label_end_[bt] ^ 1);
      if (bt >= n_) augment_blossom(bt, j);
      mate_end_[j] = label_end_[bt];
      p = label_end_[bt] ^ 1;
    }
  }
}

const std::vector<int>& MaxWeightMatcher::solve(int vertices, const std::vector<Edge>& edges) {
  n_ = vertices;
  edges_ = edges;
  mate_.assign(std::max(n_, 0), -1);
  if (n_ <= 0) return mate_;
  const int m = static_cast<int>(edges_.size());
  std::int64_t max_weight = 0;
  for (const Edge& e : edges_) {
    if (e.i < 0 || e.j < 0 || e.i >= n_ || e.j >= n_ || e.i == e.j) throw std::invalid_argument("bad matching edge");
    max_weight = std::max(max_weight, e.w);
  }

  nb_offset_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) {
    ++nb_offset_[e.i + 1];
    ++nb_offset_[e.j + 1];
  }
  for (int v = 0; v < n_; ++v) nb_offset_[v + 1] += nb_offset_[v];
  nb_end_.assign(2 * m, 0);
  {
    std::vector<int> fill(nb_offset_.begin(), nb_offset_.end() - 1);
    for (int k = 0; k < m; ++k) {
      nb_end_[fill[edges_[k].i]++] = 2 * k + 1;
      nb_end_[fill[edges_[k].j]++] = 2 * k;
    }
  }

  mate_end_.assign(n_, -1);
  label_.assign(2 * n_, 0);
  label_end_.assign(2 * n_, -1);
  in_blossom_.resize(n_);
  for (int v = 0; v < n_; ++v) in_blossom_[v] = v;
  parent_.assign(2 * n_, -1);
  childs_.resize(2 * n_);
  endps_.resize(2 * n_);
  best_edges_.resize(2 * n_);
  for (int b = 0; b < 2 * n_; ++b) {
    childs_[b].clear();
    endps_[b].clear();
    best_edges_[b].clear();
  }
  has_best_edges_.assign(2 * n_, 0);
  base_.assign(2 * n_, -1);
  for (int v = 0; v < n_; ++v) base_[v] = v;
  best_edge_.assign(2 * n_, -1);
  unused_.clear();
  for (int b = 2 * n_ - 1; b >= n_; --b) unused_.push_back(b);
  dual_.assign(2 * n_, 0);
  for (int v = 0; v < n_; ++v) dual_[v] = max_weight;
  allow_.assign(m, 0);

  for (int stage = 0; stage < n_; ++stage) {
    std::fill(label_.begin(), label_.end(), 0);
    std::fill(best_edge_.begin(), best_edge_.end(), -1);
    for (int b = n_; b < 2 * n_; ++b) {
      best_edges_[b].clear();
      has_best_edges_[b] = 0;
    }
    std::fill(allow_.begin(), allow_.end(), 0);
    queue_.clear();
    for (int v = 0; v < n_; ++v) {
      if (mate_end_[v] == -1 && label_[in_blossom_[v]] == 0) assign_label(v, 1, -1);
    }

    bool augmented = false;
    while (true) {
      while (!queue_.empty() && !augmented) {
        const int v = queue_.back();
        queue_.pop_back();
        for (int q = nb_offset_[v]; q < nb_offset_[v + 1]; ++q) {
          const int p = nb_end_[q];
          const int k = p >> 1;
          const int w = endpoint(p);
          if (in_blossom_[v] == in_blossom_[w]) continue;
          std::int64_t kslack = 0;
          if (!allow_[k]) {
            kslack = slack(k);
            if (kslack <= 0) allow_[k] = 1;
          }
          if (allow_[k]) {
            if (label_[in_blossom_[w]] == 0) {
              assign_label(w, 2, p ^ 1);
            } else if (label_[in_blossom_[w]] == 1) {
              const int base = scan_blossom(v, w);
              if (base >= 0) {
                add_blossom(base, k);
              } else {
                augment_matching(k);
                augmented = true;
                break;
              }
            } else if (label_[w] == 0) {
              label_[w] = 2;
              label_end_[w] = p ^ 1;
            }
          } else if (label_[in_blossom_[w]] == 1) {
            const int b = in_blossom_[v];
            if (best_edge_[b] == -1 || kslack < slack(best_edge_[b])) best_edge_[b] = k;
          } else if (label_[w] == 0) {
            if (best_edge_[w] == -1 || kslack < slack(best_edge_[w])) best_edge_[w] = k;
          }
        }
      }
      if (augmented) break;

      // Largest dual step that keeps every slack non-negative.
      int delta_type = 1;
      std::int64_t delta = dual_[0];
      for (int v = 1; v < n_; ++v) delta = std::min(delta, dual_[v]);
      int delta_edge = -1;
      int delta_blossom = -1;
      for (int v = 0; v < n_; ++v) {
        if (label_[in_blossom_[v]] == 0 && best_edge_[v] != -1) {
          const std::int64_t d = slack(best_edge_[v]);
          if (d < delta) {
            delta = d;
            delta_type = 2;
            delta_edge = best_edge_[v];
          }
        }
      }
      for (int b = 0; b < 2 * n_; ++b) {
        if (parent_[b] == -1 && label_[b] == 1 && best_edge_[b] != -1) {
          const std::int64_t ks = slack(best_edge_[b]);
          if (ks & 1) throw std::logic_error("odd slack between S-blossoms");
          const std::int64_t d = ks / 2;
          if (d < delta) {
            delta = d;
            delta_type = 3;
            delta_edge = best_edge_[b];
          }
        }
      }
      for (int b = n_; b < 2 * n_; ++b) {
        if (base_[b] >= 0 && parent_[b] == -1 && label_[b] == 2 && dual_[b] < delta) {
          delta = dual_[b];
          delta_type = 4;
          delta_blossom = b;
        }
      }

      for (int v = 0; v < n_; ++v) {
        const int l = label_[in_blossom_[v]];
        if (l == 1) {
          dual_[v] -= delta;
        } else if (l == 2) {
          dual_[v] += delta;
        }
      }
      for (int b = n_; b < 2 * n_; ++b) {
        if (base_[b] >= 0 && parent_[b] == -1) {
          if (label_[b] == 1) {
            dual_[b] += delta;
          } else if (label_[b] == 2) {
            dual_[b] -= delta;
          }
        }
      }

      if (delta_type == 1) break;
      if (delta_type == 2) {
        allow_[delta_edge] = 1;
        int i = edges_[delta_edge].i;
        if (label_[in_blossom_[i]] == 0) i = edges_[delta_edge].j;
        queue_.push_back(i);
      } else if (delta_type == 3) {
        allow_[delta_edge] = 1;
        queue_.push_back(edges_[delta_edge].i);
      } else {
        expand_blossom(delta_blossom, false);
      }
    }
    if (!augmented) break;

    for (int b = n_; b < 2 * n_; ++b) {
      if (parent_[b] == -1 && base_[b] >= 0 && label_[b] == 1 && dual_[b] == 0) expand_blossom(b, true);
    }
  }

  mate_.assign(n_, -1);
  for (int v = 0; v < n_; ++v) {
    if (mate_end_[v] >= 0) mate_[v] = endpoint(mate_end_[v]);
  }
  return mate_;
}

std::int64_t MaxWeightMatcher::slack_of(int i, int j, std::int64_t w) const {
  std::int64_t s = dual_[i] + dual_[j] - 2 * w;
  if (in_blossom_[i] == in_blossom_[j] && in_blossom_[i] >= n_) {
    // Blossom duals count for every blossom containing both ends.
    std::vector<int> ci = {i}, cj = {j};
    while (parent_[ci.back()] != -1) ci.push_back(parent_[ci.back()]);
    while (parent_[cj.back()] != -1) cj.push_back(parent_[cj.back()]);
    auto a = ci.rbegin();
    auto b = cj.rbegin();
    for (; a != ci.rend() && b != cj.rend() && *a == *b; ++a, ++b) s += 2 * dual_[*a];
  }
  return s;
}

}  // namespace burstqec
