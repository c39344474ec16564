#include "burstqec/matching_decoder.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "burstqec/parallel.h"

namespace burstqec {

std::int64_t quantize_weight(double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw std::invalid_argument("edge weight must be finite and >= 0");
  return std::llround(weight * kWeightScale);
}

namespace {

using HeapItem = std::pair<std::int64_t, std::uint32_t>;
using MinHeap = std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>>;

// Candidate pairs per defect before the dual certificate is checked.
constexpr std::size_t kNearest = 6;

}  // namespace

MatchingResult min_weight_matching(const MatchingProblem& problem) {
  MatchingWorkspace ws;
  return min_weight_matching(problem, ws);
}

MatchingResult min_weight_matching(const MatchingProblem& problem, MatchingWorkspace& ws) {
  const std::size_t n = problem.n;
  MatchingResult result;
  if (n == 0) return result;
  if (problem.pair.size() != n * n) throw std::invalid_argument("pair distance matrix has the wrong size");
  const bool has_boundary = !problem.boundary.empty();
  if (has_boundary && problem.boundary.size() != n) throw std::invalid_argument("boundary distances have the wrong size");

  // Reduce to maximum-weight matching: leaving a defect unmatched sends it to
  // the boundary, and pairing (i, j) saves B_i + B_j - D_ij. A defect without
  // a boundary path gets a cost M larger than any feasible total, which forces
  // it into a pair whenever possible.
  std::int64_t max_pair = 0, max_boundary = 0;
  for (std::int64_t d : problem.pair) {
    if (d < 0) throw std::invalid_argument("negative distance");
    if (d < kUnreachable) max_pair = std::max(max_pair, d);
  }
  if (has_boundary) {
    for (std::int64_t b : problem.boundary) {
      if (b < 0) throw std::invalid_argument("negative boundary distance");
      if (b < kUnreachable) max_boundary = std::max(max_boundary, b);
    }
  }
  const std::int64_t big = (max_pair + max_boundary + 1) * static_cast<std::int64_t>(n + 1);
  auto bcost = [&](std::size_t i) {
    return has_boundary && problem.boundary[i] < kUnreachable ? problem.boundary[i] : big;
  };
  auto gain = [&](std::size_t i, std::size_t j) -> std::int64_t {
    const std::int64_t d = problem.pair[i * n + j];
    if (d >= kUnreachable) return 0;
    return bcost(i) + bcost(j) - d;
  };

  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) positive += gain(i, j) > 0;
  }

  ws.candidates.clear();
  ws.in_candidates.assign(n * n, 0);
  auto add_candidate = [&](std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    if (ws.in_candidates[i * n + j]) return;
    ws.in_candidates[i * n + j] = 1;
    ws.candidates.push_back({static_cast<int>(i), static_cast<int>(j), gain(i, j)});
  };
  const std::size_t limit = ws.dense_limit ? ws.dense_limit : std::max<std::size_t>(64, 2 * kNearest * n);
  const bool sparse = positive > limit;
  if (!sparse) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (gain(i, j) > 0) add_candidate(i, j);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      ws.order.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && gain(i, j) > 0) ws.order.push_back({problem.pair[i * n + j], static_cast<int>(j)});
      }
      const std::size_t k = std::min(kNearest, ws.order.size());
      std::partial_sort(ws.order.begin(), ws.order.begin() + k, ws.order.end());
      for (std::size_t r = 0; r < k; ++r) add_candidate(i, ws.order[r].second);
    }
  }

  const std::vector<int>* mate = nullptr;
  while (true) {
    mate = &ws.matcher.solve(static_cast<int>(n), ws.candidates);
    if (!sparse) break;
    // Check the dual solution against every pair left out.
    std::size_t added = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (ws.in_candidates[i * n + j]) continue;
        const std::int64_t g = gain(i, j);
        if (g > 0 && ws.matcher.slack_of(static_cast<int>(i), static_cast<int>(j), g) < 0) {
          add_candidate(i, j);
          ++added;
        }
      }
    }
    if (added == 0) break;
    ++ws.resolves;
  }

  const bool parities = !problem.pair_parity.empty();
  for (std::size_t i = 0; i < n; ++i) {
    const int m = (*mate)[i];
    if (m > static_cast<int>(i)) {
      result.pairs.push_back({static_cast<int>(i), m});
      result.weight += problem.pair[i * n + m];
      if (parities) result.predicted_observable ^= problem.pair_parity[i * n + m] != 0;
    } else if (m == -1) {
      if (!has_boundary || problem.boundary[i] >= kUnreachable) {
        throw std::runtime_error("defect " + std::to_string(i) + " can be neither paired nor sent to the boundary");
      }
      result.pairs.push_back({static_cast<int>(i), kBoundaryPartner});
      result.weight += problem.boundary[i];
      if (!problem.boundary_parity.empty()) result.predicted_observable ^= problem.boundary_parity[i] != 0;
    }
  }
  return result;
}

std::vector<std::uint32_t> DefectDistances::path(std::size_t i, std::size_t j) const {
  std::vector<std::uint32_t> edges;
  const std::uint32_t root = graph->boundary();
  if (j == defects.size()) {
    if (boundary[i] >= kUnreachable) throw std::out_of_range("defect has no boundary path");
    std::uint32_t v = defects[i];
    while (v != root) {
      const std::int32_t e = boundary_pred_edge[v];
      edges.push_back(static_cast<std::uint32_t>(e));
      v = graph->other_end(static_cast<std::uint32_t>(e), v);
    }
    return edges;
  }
  if (pair[i * defects.size() + j] >= kUnreachable) throw std::out_of_range("defects are disconnected");
  std::uint32_t v = defects[j];
  while (v != defects[i]) {
    const std::int32_t e = pred_edge[i][v];
    edges.push_back(static_cast<std::uint32_t>(e));
    v = graph->other_end(static_cast<std::uint32_t>(e), v);
  }
  std::reverse(edges.begin(), edges.end());
  return edges;
}

MatchingProblem DefectDistances::problem() const {
  MatchingProblem p;
  p.n = defects.size();
  p.pair = pair;
  p.boundary = boundary;
  p.pair_parity = pair_parity;
  p.boundary_parity = boundary_parity;
  return p;
}

namespace {

// Dijkstra over the whole graph from `source`; the boundary is only expanded
// when it is the source itself.
void full_dijkstra(const DecodingGraph& g, const std::vector<std::int64_t>& w, std::uint32_t source,
                   std::vector<std::int64_t>& dist, std::vector<std::uint8_t>& parity,
                   std::vector<std::int32_t>& pred) {
  const std::size_t V = g.vertex_count();
  dist.assign(V, kUnreachable);
  parity.assign(V, 0);
  pred.assign(V, -1);
  MinHeap heap;
  dist[source] = 0;
  heap.push({0, source});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d != dist[v]) continue;
    if (v == g.boundary() && v != source) continue;
    for (const std::uint32_t* e = g.incident_begin(v); e != g.incident_end(v); ++e) {
      const std::uint32_t u = g.other_end(*e, v);
      const std::int64_t nd = d + w[*e];
      if (nd < dist[u]) {
        dist[u] = nd;
        parity[u] = parity[v] ^ static_cast<std::uint8_t>(g.edges()[*e].flips_observable);
        pred[u] = static_cast<std::int32_t>(*e);
        heap.push({nd, u});
      }
    }
  }
}

}  // namespace

DefectDistances defect_distances(const DecodingGraph& graph, const std::vector<std::uint32_t>& defects) {
  DefectDistances out;
  out.graph = &graph;
  out.defects = defects;
  const std::size_t n = defects.size();
  for (std::uint32_t v : defects) {
    if (v >= graph.detector_count()) throw std::invalid_argument("defect is not a detector of the graph");
  }
  std::vector<std::int64_t> w(graph.edges().size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = quantize_weight(graph.edges()[k].weight);

  std::vector<std::int64_t> dist;
  std::vector<std::uint8_t> parity;
  full_dijkstra(graph, w, graph.boundary(), dist, parity, out.boundary_pred_edge);
  out.boundary.resize(n);
  out.boundary_parity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.boundary[i] = dist[defects[i]];
    out.boundary_parity[i] = parity[defects[i]];
  }
  out.pair.assign(n * n, 0);
  out.pair_parity.assign(n * n, 0);
  out.pred_edge.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    full_dijkstra(graph, w, defects[i], dist, parity, out.pred_edge[i]);
    for (std::size_t j = 0; j < n; ++j) {
      out.pair[i * n + j] = dist[defects[j]];
      out.pair_parity[i * n + j] = parity[defects[j]];
    }
  }
  return out;
}

LogicalErrorEstimate wilson_estimate(std::uint64_t failures, std::uint64_t shots) {
  if (shots == 0) throw std::invalid_argument("no shots");
  if (failures > shots) throw std::invalid_argument("more failures than shots");
  LogicalErrorEstimate e;
  e.failures = failures;
  e.shots = shots;
  const double n = static_cast<double>(shots);
  const double p = static_cast<double>(failures) / n;
  e.rate = p;
  const double z = 1.959963984540054;
  const double denom = 1 + z * z / n;
  const double centre = (p + z * z / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
  e.ci_low = std::max(0.0, std::min(p, centre - half));
  e.ci_high = std::min(1.0, std::max(p, centre + half));
  return e;
}


MatchingDecoder::~MatchingDecoder() = default;

std::unique_ptr<MatchingDecoder::Workspace> MatchingDecoder::make_workspace() const {
  auto ws = std::make_unique<Workspace>();
  if (!uses_table()) {
    ws->dist.assign(detector_.size(), 0);
    ws->parity.assign(detector_.size(), 0);
    ws->stamp.assign(detector_.size(), 0);
    ws->defect_at.assign(detector_.size(), -1);
  }
  return ws;
}

MatchingDecoder::MatchingDecoder(const DecodingGraph& graph, std::size_t table_limit) : graph_(graph) {
  const std::size_t D = graph.detector_count();
  const std::uint32_t boundary = graph.boundary();

  // Components of the graph with the boundary removed.
  std::vector<std::uint32_t> root(D);
  std::iota(root.begin(), root.end(), 0u);
  auto find = [&](std::uint32_t v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  for (const GraphEdge& e : graph.edges()) {
    if (e.u != boundary && e.v != boundary) root[find(e.u)] = find(e.v);
  }
  std::vector<std::uint8_t> has_obs(D, 0);
  for (const GraphEdge& e : graph.edges()) {
    if (!e.flips_observable) continue;
    has_obs[find(e.u != boundary ? e.u : e.v)] = 1;
  }
  local_.assign(D, -1);
  for (std::uint32_t v = 0; v < D; ++v) {
    if (has_obs[find(v)]) {
      local_[v] = static_cast<std::int32_t>(detector_.size());
      detector_.push_back(v);
    }
  }
  const std::size_t n = detector_.size();

  adj_offset_.assign(n + 1, 0);
  for (const GraphEdge& e : graph.edges()) {
    if (e.u == boundary || e.v == boundary || local_[e.u] < 0) continue;
    ++adj_offset_[local_[e.u] + 1];
    ++adj_offset_[local_[e.v] + 1];
  }
  for (std::size_t v = 0; v < n; ++v) adj_offset_[v + 1] += adj_offset_[v];
  adj_to_.assign(adj_offset_.back(), 0);
  adj_w_.assign(adj_offset_.back(), 0);
  adj_obs_.assign(adj_offset_.back(), 0);
  std::vector<std::uint32_t> fill(adj_offset_.begin(), adj_offset_.end() - 1);
  bdist_.assign(n, kUnreachable);
  bparity_.assign(n, 0);
  for (const GraphEdge& e : graph.edges()) {
    const std::int64_t w = quantize_weight(e.weight);
    if (e.u == boundary || e.v == boundary) {
      const std::uint32_t v = e.u == boundary ? e.v : e.u;
      if (local_[v] < 0) continue;
      const auto lv = static_cast<std::size_t>(local_[v]);
      if (w < bdist_[lv]) {
        bdist_[lv] = w;
        bparity_[lv] = e.flips_observable;
      }
      continue;
    }
    if (local_[e.u] < 0) continue;
    const auto a = static_cast<std::uint32_t>(local_[e.u]);
    const auto b = static_cast<std::uint32_t>(local_[e.v]);
    adj_to_[fill[a]] = b;
    adj_w_[fill[a]] = w;
    adj_obs_[fill[a]++] = e.flips_observable;
    adj_to_[fill[b]] = a;
    adj_w_[fill[b]] = w;
    adj_obs_[fill[b]++] = e.flips_observable;
  }

  // Boundary distances: multi-source Dijkstra seeded with the boundary edges.
  {
    MinHeap heap;
    for (std::uint32_t v = 0; v < n; ++v) {
      if (bdist_[v] < kUnreachable) heap.push({bdist_[v], v});
    }
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (d != bdist_[v]) continue;
      for (std::uint32_t q = adj_offset_[v]; q < adj_offset_[v + 1]; ++q) {
        const std::uint32_t u = adj_to_[q];
        const std::int64_t nd = d + adj_w_[q];
        if (nd < bdist_[u]) {
          bdist_[u] = nd;
          bparity_[u] = bparity_[v] ^ adj_obs_[q];
          heap.push({nd, u});
        }
      }
    }
    for (std::int64_t b : bdist_) {
      if (b < kUnreachable) max_bdist_ = std::max(max_bdist_, b);
    }
  }

  if (n > 0 && n <= table_limit) {
    table_.assign(n * n, 0xFFFFFFFFu);
    std::vector<std::int64_t> dist(n);
    std::vector<std::uint8_t> parity(n);
    bool overflow = false;
    for (std::uint32_t s = 0; s < n && !overflow; ++s) {
      std::fill(dist.begin(), dist.end(), kUnreachable);
      MinHeap heap;
      dist[s] = 0;
      parity[s] = 0;
      heap.push({0, s});
      while (!heap.empty()) {
        const auto [d, v] = heap.top();
        heap.pop();
        if (d != dist[v]) continue;
        for (std::uint32_t q = adj_offset_[v]; q < adj_offset_[v + 1]; ++q) {
          const std::uint32_t u = adj_to_[q];
          const std::int64_t nd = d + adj_w_[q];
          if (nd < dist[u]) {
            dist[u] = nd;
            parity[u] = parity[v] ^ adj_obs_[q];
            heap.push({nd, u});
          }
        }
      }
      std::uint32_t* row = table_.data() + static_cast<std::size_t>(s) * n;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (dist[v] >= kUnreachable) continue;
        if (dist[v] >= (1ll << 31) - 1) {
          overflow = true;
          break;
        }
        row[v] = static_cast<std::uint32_t>(dist[v] << 1) | parity[v];
      }
    }
    if (overflow) table_.clear();
  }
}

void MatchingDecoder::fill_problem(const std::vector<std::uint32_t>& local, Workspace& ws) const {
  const std::size_t n = local.size();
  MatchingProblem& p = ws.problem;
  p.n = n;
  p.pair.assign(n * n, kUnreachable);
  p.pair_parity.assign(n * n, 0);
  p.boundary.resize(n);
  p.boundary_parity.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.boundary[i] = bdist_[local[i]];
    p.boundary_parity[i] = bparity_[local[i]];
    p.pair[i * n + i] = 0;
  }
  if (uses_table()) {
    const std::size_t V = detector_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t* row = table_.data() + static_cast<std::size_t>(local[i]) * V;
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::uint32_t code = row[local[j]];
        if (code == 0xFFFFFFFFu) continue;
        p.pair[i * n + j] = p.pair[j * n + i] = static_cast<std::int64_t>(code >> 1);
        p.pair_parity[i * n + j] = p.pair_parity[j * n + i] = static_cast<std::uint8_t>(code & 1);
      }
    }
    return;
  }

  // Truncated Dijkstra from every defect: pairs farther apart than
  // B_i + max B can never beat sending both to the boundary.
  std::int64_t max_b = 0;
  bool unbounded = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.boundary[i] >= kUnreachable) {
      unbounded = true;
    } else {
      max_b = std::max(max_b, p.boundary[i]);
    }
  }
  ++ws.epoch;
  for (std::size_t i = 0; i < n; ++i) ws.defect_at[local[i]] = static_cast<std::int32_t>(i);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t radius = unbounded ? kUnreachable : p.boundary[i] + max_b;
    ++ws.epoch;
    auto& heap = ws.heap;
    heap.clear();
    const std::uint32_t s = local[i];
    ws.stamp[s] = ws.epoch;
    ws.dist[s] = 0;
    ws.parity[s] = 0;
    heap.push_back({0, s});
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>());
      const auto [d, v] = heap.back();
      heap.pop_back();
      if (d != ws.dist[v]) continue;
      if (d >= radius) break;
      const std::int32_t j = ws.defect_at[v];
      if (j >= 0 && static_cast<std::size_t>(j) != i && local[j] == v) {
        p.pair[i * n + j] = p.pair[j * n + i] = d;
        p.pair_parity[i * n + j] = p.pair_parity[j * n + i] = ws.parity[v];
      }
      for (std::uint32_t q = adj_offset_[v]; q < adj_offset_[v + 1]; ++q) {
        const std::uint32_t u = adj_to_[q];
        const std::int64_t nd = d + adj_w_[q];
        if (ws.stamp[u] != ws.epoch || nd < ws.dist[u]) {
          ws.stamp[u] = ws.epoch;
          ws.dist[u] = nd;
          ws.parity[u] = ws.parity[v] ^ adj_obs_[q];
          heap.push_back({nd, u});
          std::push_heap(heap.begin(), heap.end(), std::greater<>());
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) ws.defect_at[local[i]] = -1;
}

DecodeResult MatchingDecoder::decode(const std::uint64_t* words, Workspace& ws, bool want_matches) const {
  DecodeResult out;
  ws.local.clear();
  const std::size_t nwords = (graph_.detector_count() + 63) / 64;
  for (std::size_t w = 0; w < nwords; ++w) {
    for (std::uint64_t bits = words[w]; bits; bits &= bits - 1) {
      const std::size_t j = w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits));
      if (j >= graph_.detector_count()) throw std::invalid_argument("detector bit outside the graph");
      ++out.defects;
      if (local_[j] >= 0) ws.local.push_back(static_cast<std::uint32_t>(local_[j]));
    }
  }
  if (ws.local.empty()) return out;
  fill_problem(ws.local, ws);
  const MatchingResult m = min_weight_matching(ws.problem, ws.matching);
  out.prediction = m.predicted_observable;
  out.weight = static_cast<double>(m.weight) / kWeightScale;
  if (want_matches) {
    for (const auto& [a, b] : m.pairs) {
      out.matches.push_back({detector_[ws.local[a]], b == kBoundaryPartner ? graph_.boundary() : detector_[ws.local[b]]});
    }
  }
  return out;
}

bool MatchingDecoder::decode_shot(const ShotRecord& shot) const {
  if (shot.detectors.size() != graph_.detector_count()) throw std::invalid_argument("shot length does not match graph");
  std::vector<std::uint64_t> words((shot.detectors.size() + 63) / 64, 0);
  for (std::size_t j = 0; j < shot.detectors.size(); ++j) {
    if (shot.detectors[j]) words[j / 64] |= 1ull << (j % 64);
  }
  auto ws = make_workspace();
  return decode(words.data(), *ws).prediction;
}

bool decode_shot(const DecodingGraph& graph, const ShotRecord& shot) {
  return MatchingDecoder(graph).decode_shot(shot);
}

LogicalErrorEstimate logical_error_rate(const DecodingGraph& graph, const ShotBatch& batch, unsigned workers) {
  if (batch.num_shots == 0) throw std::invalid_argument("empty batch");
  if (batch.num_detectors != graph.detector_count()) throw std::invalid_argument("batch does not match graph");
  const MatchingDecoder decoder(graph);
  const std::size_t chunk = 256;
  const std::size_t chunks = (batch.num_shots + chunk - 1) / chunk;
  std::vector<std::uint64_t> failures(chunks, 0);
  std::vector<std::unique_ptr<MatchingDecoder::Workspace>> spaces;
  for (unsigned w = 0; w < std::max(1u, workers); ++w) spaces.push_back(decoder.make_workspace());
  parallel_for(chunks, workers, [&](std::size_t c, unsigned worker) {
    const std::size_t end = std::min(batch.num_shots, (c + 1) * chunk);
    for (std::size_t s = c * chunk; s < end; ++s) {
      const bool prediction = decoder.decode(batch.shot_words(s), *spaces[worker]).prediction;
      failures[c] += prediction != (batch.observables[s] != 0);
    }
  });
  return wilson_estimate(std::accumulate(failures.begin(), failures.end(), std::uint64_t{0}), batch.num_shots);
}

void write_decode_csv(std::ostream& out, const DecodingGraph& graph, const ShotBatch& batch) {
  const MatchingDecoder decoder(graph);
  auto ws = decoder.make_workspace();
  out << "shot,defects,weight,prediction,actual,failure\n";
  char buf[40];
  for (std::size_t s = 0; s < batch.num_shots; ++s) {
    const DecodeResult r = decoder.decode(batch.shot_words(s), *ws);
    const int actual = batch.observables[s] != 0;
    std::snprintf(buf, sizeof(buf), "%.6f", r.weight);
    out << s << "," << r.defects << "," << buf << "," << (r.prediction ? 1 : 0) << "," << actual << ","
        << ((r.prediction ? 1 : 0) ^ actual) << "\n";
  }
}

}  // namespace burstqec
