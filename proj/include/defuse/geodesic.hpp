// Correspondence graph over spatial k-NN adjacency of image-P endpoints and
// all-pairs geodesic distances, exact or capped per source.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "defuse/candidates.hpp"
#include "defuse/linalg.hpp"

namespace defuse {

/// Undirected weighted graph over correspondences. Non-edges are implicit
/// +inf; stored weights are finite reprojection errors (>= 0).
struct CorrespondenceGraph {
  int n = 0;
  int k = 0;
  std::vector<std::vector<std::pair<int, double>>> adjacency;
};

/// Builds the graph. Spatial k-NN runs over the unique p-endpoint locations
/// (so co-located correspondences of one feature do not consume the k
/// budget), then expands to all correspondences sharing those endpoints.
/// Correspondences with the same p-endpoint are always adjacent.
inline CorrespondenceGraph build_graph(const CandidateSet& cands, int k) {
  if (k < 1) throw ParamError("k must be >= 1");
  CorrespondenceGraph g;
  g.n = cands.size();
  g.k = k;
  g.adjacency.assign(g.n, {});
  if (g.n == 0) return g;

  // unique p-endpoint locations, keyed by coordinates for determinism
  std::map<std::pair<double, double>, int> loc_index;
  std::vector<Vec2> locs;
  std::vector<std::vector<int>> members;  // location -> correspondence indices
  for (int c = 0; c < g.n; ++c) {
    Vec2 pt = cands.flat[c].p_center;
    auto [it, fresh] = loc_index.try_emplace({pt.x, pt.y}, static_cast<int>(locs.size()));
    if (fresh) {
      locs.push_back(pt);
      members.emplace_back();
    }
    members[it->second].push_back(c);
  }
  int nloc = static_cast<int>(locs.size());

  // k nearest other locations per location, union rule
  std::set<std::pair<int, int>> loc_edges;
  std::vector<std::pair<double, int>> scored(nloc);
  for (int u = 0; u < nloc; ++u) {
    int count = 0;
    for (int v = 0; v < nloc; ++v)
      if (v != u) scored[count++] = {(locs[u] - locs[v]).squared_norm(), v};
    int keep = std::min(k, count);
    std::partial_sort(scored.begin(), scored.begin() + keep, scored.begin() + count);
    for (int t = 0; t < keep; ++t) {
      int v = scored[t].second;
      loc_edges.insert({std::min(u, v), std::max(u, v)});
    }
  }

  auto connect = [&](int a, int b) {
    double w = reprojection_error(cands.flat[a], cands.flat[b]);
    g.adjacency[a].push_back({b, w});
    g.adjacency[b].push_back({a, w});
  };
  for (int u = 0; u < nloc; ++u)
    for (std::size_t i = 0; i < members[u].size(); ++i)
      for (std::size_t j = i + 1; j < members[u].size(); ++j)
        connect(members[u][i], members[u][j]);
  for (const auto& [u, v] : loc_edges)
    for (int a : members[u])
      for (int b : members[v]) connect(a, b);

  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

enum class GeodesicMode { exact, capped };

namespace geodesic_detail {

/// Indexed 4-ary min-heap with decrease-key, keyed by an external distance
/// array. Bounds the queue at n entries so each Dijkstra source does at most
/// n pops regardless of edge count.
class DaryHeap {
public:
  explicit DaryHeap(int n) : pos_(n, -1) { heap_.reserve(n); }

  void reset() {
    for (int v : heap_) pos_[v] = -1;
    heap_.clear();
  }

  bool empty() const { return heap_.empty(); }

  void push_or_decrease(int v, const std::vector<double>& key) {
    if (pos_[v] < 0) {
      pos_[v] = static_cast<int>(heap_.size());
      heap_.push_back(v);
    }
    sift_up(pos_[v], key);
  }

  int pop_min(const std::vector<double>& key) {
    int top = heap_.front();
    pos_[top] = -1;
    int last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_.front() = last;
      pos_[last] = 0;
      sift_down(0, key);
    }
    return top;
  }

private:
  void sift_up(int i, const std::vector<double>& key) {
    int v = heap_[i];
    while (i > 0) {
      int parent = (i - 1) >> 2;
      if (key[heap_[parent]] <= key[v]) break;
      heap_[i] = heap_[parent];
      pos_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    pos_[v] = i;
  }

  void sift_down(int i, const std::vector<double>& key) {
    int v = heap_[i];
    int size = static_cast<int>(heap_.size());
    while (true) {
      int first = (i << 2) + 1;
      if (first >= size) break;
      int best = first;
      int last = std::min(first + 4, size);
      for (int c = first + 1; c < last; ++c)
        if (key[heap_[c]] < key[heap_[best]]) best = c;
      if (key[heap_[best]] >= key[v]) break;
      heap_[i] = heap_[best];
      pos_[heap_[i]] = i;
      i = best;
    }
    heap_[i] = v;
    pos_[v] = i;
  }

  std::vector<int> heap_;
  std::vector<int> pos_;
};

}  // namespace geodesic_detail

/// All-pairs shortest-path distances. Exact mode settles every reachable
/// vertex; capped mode stops each source's Dijkstra after settling
/// min(n, max_updates) vertices and leaves the rest at +inf, so capped
/// distances never underestimate. Rows are computed in parallel and the
/// result is symmetrized by entrywise min, which makes capped(max >= n)
/// bitwise equal to exact.
inline SquareMatrix geodesic_all_pairs(const CorrespondenceGraph& g,
                                       GeodesicMode mode, int max_updates = 200) {
  if (mode == GeodesicMode::capped && max_updates < 1)
    throw ParamError("max-updates must be >= 1");
  int n = g.n;
  SquareMatrix d(n, kInf);
  int settle_budget = mode == GeodesicMode::capped ? std::min(n, max_updates) : n;

  // flat CSR adjacency for the hot loop
  std::vector<int> offsets(n + 1, 0);
  for (int v = 0; v < n; ++v)
    offsets[v + 1] = offsets[v] + static_cast<int>(g.adjacency[v].size());
  std::vector<int> targets(offsets[n]);
  std::vector<double> weights(offsets[n]);
  for (int v = 0, e = 0; v < n; ++v)
    for (const auto& [to, w] : g.adjacency[v]) {
      targets[e] = to;
      weights[e] = w;
      ++e;
    }

  unsigned workers = std::min<unsigned>(worker_count(), n > 0 ? n : 1);
  std::vector<std::thread> pool;
  int chunk = workers ? (n + static_cast<int>(workers) - 1) / static_cast<int>(workers) : 0;
  auto run_range = [&](int lo, int hi) {
    std::vector<double> dist(n, kInf);
    geodesic_detail::DaryHeap heap(n);
    std::vector<int> touched;
    touched.reserve(n);
    for (int src = lo; src < hi; ++src) {
      for (int v : touched) dist[v] = kInf;
      touched.clear();
      heap.reset();
      dist[src] = 0.0;
      touched.push_back(src);
      heap.push_or_decrease(src, dist);
      int settled_count = 0;
      while (!heap.empty() && settled_count < settle_budget) {
        int u = heap.pop_min(dist);
        ++settled_count;
        d(src, u) = dist[u];
        double du = dist[u];
        for (int e = offsets[u]; e < offsets[u + 1]; ++e) {
          int v = targets[e];
          double cand = du + weights[e];
          if (cand < dist[v]) {
            if (dist[v] == kInf) touched.push_back(v);
            dist[v] = cand;
            heap.push_or_decrease(v, dist);
          }
        }
      }
    }
  };
  for (unsigned w = 0; w < workers; ++w) {
    int lo = static_cast<int>(w) * chunk;
    int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& t : pool) t.join();

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double m = std::min(d(i, j), d(j, i));
      d(i, j) = m;
      d(j, i) = m;
    }
  return d;
}

/// Dense matrix of pairwise reprojection errors — the graph-free distance
/// used by the ablation arm and by the spectral-matching baseline.
inline SquareMatrix reprojection_all_pairs(const std::vector<Correspondence>& cs) {
  int n = static_cast<int>(cs.size());
  SquareMatrix d(n, 0.0);
  parallel_for(n, [&](int i) {
    for (int j = i + 1; j < n; ++j) d(i, j) = reprojection_error(cs[i], cs[j]);
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(j, i) = d(i, j);
  return d;
}

}  // namespace defuse
