// Fusion and verification baselines: CAT (normalized concatenation), Ranking,
// Ratio and SM (spectral matching by dominant eigenvector).

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "defuse/candidates.hpp"
#include "defuse/geodesic.hpp"
#include "defuse/ocsvm.hpp"

namespace defuse {

struct ScoredPair {
  int p_index = 0;
  int q_index = 0;
  double score = 0.0;
  std::string tag;
};

struct BaselineResult {
  std::string method;
  std::vector<ScoredPair> entries;  // sortable by descending score
};

namespace baseline_detail {

// all P x Q distances for one descriptor channel
inline std::vector<double> channel_distances(const FeatureSet& p, const FeatureSet& q,
                                             int mp, int mq) {
  std::vector<double> d(static_cast<std::size_t>(p.count()) * q.count());
  for (int i = 0; i < p.count(); ++i)
    for (int j = 0; j < q.count(); ++j)
      d[static_cast<std::size_t>(i) * q.count() + j] =
          euclidean_distance(p.descriptor(mp, i), q.descriptor(mq, j));
  return d;
}

inline int q_channel_of(const FeatureSet& p, const FeatureSet& q, int mp) {
  for (int mq = 0; mq < q.descriptor_count(); ++mq)
    if (q.descriptor_names[mq] == p.descriptor_names[mp]) return mq;
  throw DataError("descriptor '" + p.descriptor_names[mp] +
                  "' missing from the second feature set");
}

inline void sort_entries(std::vector<ScoredPair>& entries, const FeatureSet& p,
                         const FeatureSet& q) {
  std::sort(entries.begin(), entries.end(), [&](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    if (p.frames[a.p_index].id != p.frames[b.p_index].id)
      return p.frames[a.p_index].id < p.frames[b.p_index].id;
    return q.frames[a.q_index].id < q.frames[b.q_index].id;
  });
}

}  // namespace baseline_detail

/// CAT: each descriptor channel is normalized by the standard deviation of
/// its pairwise P-Q distances, channels concatenated, nearest neighbor per
/// p-feature; score = negated concatenated distance. Channels whose distance
/// distribution has zero spread are dropped with a warning.
inline BaselineResult baseline_cat(const FeatureSet& p, const FeatureSet& q) {
  using namespace baseline_detail;
  int np = p.count(), nq = q.count();
  std::vector<std::vector<double>> normalized;
  for (int m = 0; m < p.descriptor_count(); ++m) {
    auto d = channel_distances(p, q, m, q_channel_of(p, q, m));
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    double std_dev = std::sqrt(var / static_cast<double>(d.size()));
    if (std_dev < 1e-300) {
      warn("CAT: descriptor '" + p.descriptor_names[m] +
           "' has zero distance spread; channel dropped");
      continue;
    }
    for (double& v : d) v /= std_dev;
    normalized.push_back(std::move(d));
  }
  if (normalized.empty()) throw DataError("CAT: every descriptor channel was degenerate");

  BaselineResult result;
  result.method = "cat";
  for (int i = 0; i < np; ++i) {
    int best = -1;
    double best_dist = 0.0;
    for (int j = 0; j < nq; ++j) {
      double s = 0.0;
      for (const auto& d : normalized) {
        double v = d[static_cast<std::size_t>(i) * nq + j];
        s += v * v;
      }
      double dist = std::sqrt(s);
      if (best < 0 || dist < best_dist ||
          (dist == best_dist && q.frames[j].id < q.frames[best].id)) {
        best = j;
        best_dist = dist;
      }
    }
    result.entries.push_back({i, best, -best_dist, "cat"});
  }
  sort_entries(result.entries, p, q);
  return result;
}

/// Ranking: per descriptor, p-features are ranked by ascending NN distance;
/// each feature adopts the correspondence of the descriptor giving it its
/// best (smallest) rank. Score = negated best rank; descriptor-name order
/// breaks ties.
inline BaselineResult baseline_ranking(const FeatureSet& p, const FeatureSet& q) {
  using namespace baseline_detail;
  int np = p.count(), nq = q.count();

  struct PerDescriptor {
    std::string name;
    std::vector<int> nn;    // p index -> q index
    std::vector<int> rank;  // p index -> 1-based rank
  };
  std::vector<PerDescriptor> table;
  for (int m = 0; m < p.descriptor_count(); ++m) {
    PerDescriptor pd;
    pd.name = p.descriptor_names[m];
    auto d = channel_distances(p, q, m, q_channel_of(p, q, m));
    std::vector<double> nn_dist(np);
    pd.nn.resize(np);
    for (int i = 0; i < np; ++i) {
      int best = 0;
      for (int j = 1; j < nq; ++j) {
        double dj = d[static_cast<std::size_t>(i) * nq + j];
        double db = d[static_cast<std::size_t>(i) * nq + best];
        if (dj < db || (dj == db && q.frames[j].id < q.frames[best].id)) best = j;
      }
      pd.nn[i] = best;
      nn_dist[i] = d[static_cast<std::size_t>(i) * nq + best];
    }
    std::vector<int> order(np);
    for (int i = 0; i < np; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (nn_dist[a] != nn_dist[b]) return nn_dist[a] < nn_dist[b];
      return p.frames[a].id < p.frames[b].id;
    });
    pd.rank.resize(np);
    for (int pos = 0; pos < np; ++pos) pd.rank[order[pos]] = pos + 1;
    table.push_back(std::move(pd));
  }

  BaselineResult result;
  result.method = "ranking";
  for (int i = 0; i < np; ++i) {
    const PerDescriptor* best = nullptr;
    for (const auto& pd : table)
      if (!best || pd.rank[i] < best->rank[i] ||
          (pd.rank[i] == best->rank[i] && pd.name < best->name))
        best = &pd;
    result.entries.push_back(
        {i, best->nn[i], -static_cast<double>(best->rank[i]), best->name});
  }
  sort_entries(result.entries, p, q);
  return result;
}

/// Ratio: per descriptor and p-feature, the distance ratio d1/d2 of the two
/// nearest neighbors; the descriptor with the smallest ratio wins and the
/// score is 1 - ratio. d2 = 0 (or a single q-feature) means no confidence:
/// ratio 1.
inline BaselineResult baseline_ratio(const FeatureSet& p, const FeatureSet& q) {
  using namespace baseline_detail;
  int np = p.count(), nq = q.count();

  BaselineResult result;
  result.method = "ratio";
  std::vector<std::vector<double>> dists;
  for (int m = 0; m < p.descriptor_count(); ++m)
    dists.push_back(channel_distances(p, q, m, q_channel_of(p, q, m)));

  for (int i = 0; i < np; ++i) {
    int best_q = -1;
    double best_ratio = kInf;
    std::string best_name;
    for (int m = 0; m < p.descriptor_count(); ++m) {
      const auto& d = dists[m];
      int first = 0;
      for (int j = 1; j < nq; ++j) {
        double dj = d[static_cast<std::size_t>(i) * nq + j];
        double df = d[static_cast<std::size_t>(i) * nq + first];
        if (dj < df || (dj == df && q.frames[j].id < q.frames[first].id)) first = j;
      }
      double d1 = d[static_cast<std::size_t>(i) * nq + first];
      double d2 = kInf;
      for (int j = 0; j < nq; ++j) {
        if (j == first) continue;
        d2 = std::min(d2, d[static_cast<std::size_t>(i) * nq + j]);
      }
      double ratio = (!std::isfinite(d2) || d2 <= 0.0) ? 1.0 : d1 / d2;
      const std::string& name = p.descriptor_names[m];
      if (ratio < best_ratio || (ratio == best_ratio && name < best_name)) {
        best_ratio = ratio;
        best_q = first;
        best_name = name;
      }
    }
    result.entries.push_back({i, best_q, 1.0 - best_ratio, best_name});
  }
  sort_entries(result.entries, p, q);
  return result;
}

/// SM: affinity A(i,j) = exp(-d_reproj^2 / sigma^2) off the diagonal (sigma
/// from the usual heuristic applied to reprojection distances), scores from
/// the dominant eigenvector by power iteration, normalized non-negative.
inline BaselineResult baseline_sm(const CandidateSet& cands, const FeatureSet& p,
                                  const FeatureSet& q) {
  int n = cands.size();
  if (n < 1) throw DataError("no candidates");
  BaselineResult result;
  result.method = "sm";
  if (n == 1) {
    result.entries.push_back(
        {cands.flat[0].p_index, cands.flat[0].q_index, 1.0, cands.flat[0].source_tag()});
    return result;
  }

  SquareMatrix d = reprojection_all_pairs(cands.flat);
  double sigma = resolve_sigma(d);
  SquareMatrix a(n, 0.0);
  parallel_for(n, [&](int i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double v = d(i, j) / sigma;
      a(i, j) = std::exp(-v * v);
    }
  });

  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> next(n, 0.0);
  double delta = kInf;
  for (int iter = 0; iter < 1000 && delta >= 1e-10; ++iter) {
    for (int i = 0; i < n; ++i) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += a(i, j) * v[j];
      next[i] = s;
    }
    double norm = 0.0;
    for (double x : next) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-300) throw ConvergenceError("SM power iteration collapsed", kInf);
    delta = 0.0;
    for (int i = 0; i < n; ++i) {
      next[i] /= norm;
      delta = std::max(delta, std::fabs(next[i] - v[i]));
    }
    v.swap(next);
  }
  if (delta >= 1e-10)
    throw ConvergenceError("SM power iteration did not converge in 1000 iterations",
                           delta);
  double flip = 0.0;
  for (double x : v)
    if (std::fabs(x) > std::fabs(flip)) flip = x;
  if (flip < 0.0)
    for (double& x : v) x = -x;
  for (double& x : v) x = std::max(0.0, x);

  for (int i = 0; i < n; ++i)
    result.entries.push_back(
        {cands.flat[i].p_index, cands.flat[i].q_index, v[i], cands.flat[i].source_tag()});
  baseline_detail::sort_entries(result.entries, p, q);
  return result;
}

}  // namespace defuse
