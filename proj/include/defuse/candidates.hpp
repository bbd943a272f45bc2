// Reduced candidate set: per-descriptor r-nearest-neighbor matching with
// deduplication and source tagging.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "defuse/feature_io.hpp"
#include "defuse/geometry.hpp"

namespace defuse {

using DescriptorMetric =
    std::function<double(std::span<const double>, std::span<const double>)>;

inline double euclidean_distance(std::span<const double> a,
                                 std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

/// The union of every p-feature's per-descriptor r-NN matches. A (p,q) pair
/// proposed by several descriptors appears once, tagged with all of them.
struct CandidateSet {
  std::vector<Correspondence> flat;            // sorted by (p_id, q_id)
  std::map<int, std::vector<int>> per_feature; // p feature id -> indices into flat

  int size() const { return static_cast<int>(flat.size()); }
};

/// Builds the candidate set. For each descriptor and each p-feature the r
/// q-features with the smallest descriptor distance are kept; ties at the
/// r-th neighbor break by ascending q id. `metrics` may override the distance
/// per descriptor name; anything unnamed uses Euclidean distance.
inline CandidateSet build_candidates(
    const FeatureSet& p, const FeatureSet& q, int r,
    const std::map<std::string, DescriptorMetric>& metrics = {}) {
  if (r < 1) throw ParamError("r must be >= 1");
  if (p.descriptor_count() != q.descriptor_count())
    throw DataError("feature sets declare different descriptor-name sets");
  std::vector<int> q_channel(p.descriptor_count());
  for (int m = 0; m < p.descriptor_count(); ++m) {
    auto it = std::find(q.descriptor_names.begin(), q.descriptor_names.end(),
                        p.descriptor_names[m]);
    if (it == q.descriptor_names.end())
      throw DataError("descriptor '" + p.descriptor_names[m] +
                      "' missing from the second feature set");
    int mq = static_cast<int>(it - q.descriptor_names.begin());
    if (q.descriptor_dims[mq] != p.descriptor_dims[m])
      throw DataError("descriptor '" + p.descriptor_names[m] +
                      "' has mismatched dimensions across the two sets");
    q_channel[m] = mq;
  }

  // (p_index, q_index) -> descriptor -> distance
  std::map<std::pair<int, int>, std::map<std::string, double>> merged;
  std::vector<std::pair<double, int>> scored(q.count());  // (distance, q_index)
  for (int m = 0; m < p.descriptor_count(); ++m) {
    const std::string& name = p.descriptor_names[m];
    auto metric_it = metrics.find(name);
    const DescriptorMetric* metric =
        metric_it == metrics.end() ? nullptr : &metric_it->second;
    for (int i = 0; i < p.count(); ++i) {
      auto fi = p.descriptor(m, i);
      for (int j = 0; j < q.count(); ++j) {
        auto fj = q.descriptor(q_channel[m], j);
        scored[j] = {metric ? (*metric)(fi, fj) : euclidean_distance(fi, fj), j};
      }
      int keep = std::min(r, q.count());
      std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                        [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first < b.first;
                          return q.frames[a.second].id < q.frames[b.second].id;
                        });
      for (int k = 0; k < keep; ++k)
        merged[{i, scored[k].second}][name] = scored[k].first;
    }
  }

  // Deterministic flat order: ascending (p_id, q_id).
  std::vector<std::pair<std::pair<int, int>, const std::map<std::string, double>*>> order;
  order.reserve(merged.size());
  for (const auto& [key, sources] : merged)
    order.push_back({{p.frames[key.first].id, q.frames[key.second].id}, &sources});
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  CandidateSet set;
  set.flat.reserve(order.size());
  std::map<std::pair<int, int>, std::pair<int, int>> id_to_index;
  for (const auto& [key, sources] : merged)
    id_to_index[{p.frames[key.first].id, q.frames[key.second].id}] = key;
  for (const auto& [ids, sources] : order) {
    auto [pi, qi] = id_to_index[ids];
    set.per_feature[ids.first].push_back(set.size());
    set.flat.push_back(
        make_correspondence(p.frames[pi], pi, q.frames[qi], qi, *sources));
  }
  return set;
}

}  // namespace defuse
