// Per-feature selection, ground-truth labeling, precision/recall/AP and the
// classical MDS embedding of a distance matrix.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "defuse/candidates.hpp"
#include "defuse/feature_io.hpp"
#include "defuse/linalg.hpp"

namespace defuse {

/// For every p-feature with candidates, the candidate with the highest
/// score; ties break by ascending q id. Returns indices into cands.flat,
/// ordered by ascending p id.
inline std::vector<int> select_per_feature(const CandidateSet& cands,
                                           std::span<const double> scores) {
  std::vector<int> selected;
  selected.reserve(cands.per_feature.size());
  for (const auto& [p_id, indices] : cands.per_feature) {
    int best = -1;
    for (int idx : indices) {
      if (best < 0 || scores[idx] > scores[best] ||
          (scores[idx] == scores[best] &&
           cands.flat[idx].q_id < cands.flat[best].q_id))
        best = idx;
    }
    selected.push_back(best);
  }
  return selected;
}

/// Eight-pixel-style criterion: correct iff both endpoints lie on the same
/// non-background object and the q endpoint is within gt.pixel_tolerance of
/// the p endpoint mapped by that object's ground-truth transform.
inline bool label_correct_pixel(const Correspondence& c, const SceneGroundTruth& gt) {
  int obj_p = gt.object_of(c.p_id);
  int obj_q = gt.object_of(c.q_id);
  if (obj_p == kBackgroundObject || obj_p != obj_q) return false;
  const HomographyMatrix& h = gt.object_transforms.at(obj_p);
  return (c.q_center - h.apply(c.p_center)).norm() <= gt.pixel_tolerance;
}

namespace eval_detail {

struct Ellipse {
  Vec2 center;
  Mat2 shape;  // image of the unit circle
  Mat2 inv;
  double radius;  // spectral bound, for the bounding box

  explicit Ellipse(Vec2 c, const Mat2& a) : center(c), shape(a), inv(a.inverse()) {
    // largest singular value of a 2x2 via its Gram matrix
    double g11 = a.a11 * a.a11 + a.a21 * a.a21;
    double g12 = a.a11 * a.a12 + a.a21 * a.a22;
    double g22 = a.a12 * a.a12 + a.a22 * a.a22;
    double mean = 0.5 * (g11 + g22);
    double disc = std::sqrt(std::max(0.0, mean * mean - (g11 * g22 - g12 * g12)));
    radius = std::sqrt(mean + disc);
  }

  bool contains(Vec2 p) const { return (inv * (p - center)).squared_norm() <= 1.0; }
};

}  // namespace eval_detail

/// Approximate-overlap criterion: correct iff the endpoints share a
/// non-background object and 1 - area(Eq ∩ E'q)/area(Eq ∪ E'q) < threshold,
/// where E'q is the p-ellipse mapped by the object transform. Areas come from
/// deterministic stratified sampling over the union's bounding box.
inline bool label_correct_overlap(const Correspondence& c, const SceneGroundTruth& gt,
                                  const FeatureSet& features_p,
                                  const FeatureSet& features_q,
                                  double threshold = 0.5, int samples = 20000) {
  int obj_p = gt.object_of(c.p_id);
  int obj_q = gt.object_of(c.q_id);
  if (obj_p == kBackgroundObject || obj_p != obj_q) return false;
  const HomographyMatrix& h = gt.object_transforms.at(obj_p);

  const FeatureFrame& fp = features_p.frames[c.p_index];
  const FeatureFrame& fq = features_q.frames[c.q_index];
  eval_detail::Ellipse eq(fq.center, fq.shape);
  eval_detail::Ellipse projected(h.apply(fp.center), h.linear * fp.shape);

  // disjoint by the spectral bound: overlap error is exactly 1
  if ((eq.center - projected.center).norm() > eq.radius + projected.radius)
    return false;

  double lo_x = std::min(eq.center.x - eq.radius, projected.center.x - projected.radius);
  double hi_x = std::max(eq.center.x + eq.radius, projected.center.x + projected.radius);
  double lo_y = std::min(eq.center.y - eq.radius, projected.center.y - projected.radius);
  double hi_y = std::max(eq.center.y + eq.radius, projected.center.y + projected.radius);

  int grid = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(samples))));
  long in_union = 0, in_both = 0;
  for (int gy = 0; gy < grid; ++gy) {
    double y = lo_y + (hi_y - lo_y) * (gy + 0.5) / grid;
    for (int gx = 0; gx < grid; ++gx) {
      double x = lo_x + (hi_x - lo_x) * (gx + 0.5) / grid;
      bool a = eq.contains({x, y});
      bool b = projected.contains({x, y});
      if (a || b) ++in_union;
      if (a && b) ++in_both;
    }
  }
  if (in_union == 0) return false;
  double overlap_error = 1.0 - static_cast<double>(in_both) / in_union;
  return overlap_error < threshold;
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PrResult {
  std::vector<PrPoint> curve;  // one point per entry, threshold sweeping down
  double ap = 0.0;
  int tp = 0, fp = 0, fn = 0;  // counts at full depth
};

/// Precision/recall sweep over a score-sorted 0/1 label sequence, plus
/// standard AP (mean precision at each correct entry, undetected correct
/// entries contributing zero).
inline PrResult precision_recall(std::span<const int> labels,
                                 int total_correct_possible) {
  if (total_correct_possible <= 0)
    throw DataError("undefined recall: no correct correspondence is possible");
  PrResult r;
  r.curve.reserve(labels.size());
  int tp = 0;
  double ap_sum = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t]) {
      ++tp;
      ap_sum += static_cast<double>(tp) / static_cast<double>(t + 1);
    }
    r.curve.push_back({static_cast<double>(tp) / total_correct_possible,
                       static_cast<double>(tp) / static_cast<double>(t + 1)});
  }
  r.tp = tp;
  r.fp = static_cast<int>(labels.size()) - tp;
  r.fn = total_correct_possible - tp;
  r.ap = ap_sum / total_correct_possible;
  return r;
}

/// Number of p-features that could be matched correctly at all: those on a
/// non-background object with some q-feature of the same object within the
/// pixel tolerance. Exhaustive scan.
inline int total_correct_possible(const FeatureSet& features_p,
                                  const FeatureSet& features_q,
                                  const SceneGroundTruth& gt) {
  int total = 0;
  for (const auto& fp : features_p.frames) {
    int obj = gt.object_of(fp.id);
    if (obj == kBackgroundObject) continue;
    const HomographyMatrix& h = gt.object_transforms.at(obj);
    Vec2 mapped = h.apply(fp.center);
    for (const auto& fq : features_q.frames) {
      if (gt.object_of(fq.id) != obj) continue;
      if ((fq.center - mapped).norm() <= gt.pixel_tolerance) {
        ++total;
        break;
      }
    }
  }
  return total;
}

struct MdsEmbedding {
  std::vector<std::array<double, 2>> coords;
  int dims_used = 0;  // how many positive-eigenvalue axes were available
};

/// Classical MDS into the plane: double-center -1/2 D^2, take the top two
/// eigenpairs, scale eigenvectors by sqrt(eigenvalue). Infinite distances are
/// replaced by twice the largest finite entry first. Axis signs follow the
/// first-nonzero-positive convention so the embedding is deterministic.
inline MdsEmbedding mds_embed(const SquareMatrix& d) {
  int n = d.size();
  MdsEmbedding e;
  e.coords.assign(n, {0.0, 0.0});
  if (n == 0) return e;

  double max_finite = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(d(i, j))) max_finite = std::max(max_finite, d(i, j));
  double inf_stand_in = 2.0 * max_finite;

  // B = -1/2 J D^2 J, symmetrized against roundoff
  SquareMatrix sq(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = std::isfinite(d(i, j)) ? d(i, j) : inf_stand_in;
      sq(i, j) = v * v;
    }
  std::vector<double> row_mean(n, 0.0);
  double grand = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) row_mean[i] += sq(i, j);
    row_mean[i] /= n;
    grand += row_mean[i];
  }
  grand /= n;
  SquareMatrix b(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double bij = -0.5 * (0.5 * (sq(i, j) + sq(j, i)) - row_mean[i] - row_mean[j] + grand);
      b(i, j) = bij;
      b(j, i) = bij;
    }

  auto pairs = top_eigenpairs(b, 2);
  double scale = pairs.empty() ? 0.0 : std::max(1.0, pairs[0].value);
  for (std::size_t axis = 0; axis < pairs.size() && axis < 2; ++axis) {
    if (pairs[axis].value <= 1e-10 * scale) break;
    double len = std::sqrt(pairs[axis].value);
    // sign convention: first coordinate of nonneg magnitude decides
    double flip = 1.0;
    for (int i = 0; i < n; ++i) {
      if (std::fabs(pairs[axis].vector[i]) > 1e-12) {
        flip = pairs[axis].vector[i] > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    for (int i = 0; i < n; ++i) e.coords[i][axis] = flip * len * pairs[axis].vector[i];
    ++e.dims_used;
  }
  if (e.dims_used < 2)
    warn("MDS found fewer than 2 positive eigenvalues; emitting a " +
         std::to_string(e.dims_used) + "-dimensional embedding");
  return e;
}

}  // namespace defuse
