// Affine frame algebra: frame transforms, correspondence homographies and the
// projection / reprojection errors that give the homography space its metric.

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "defuse/linalg.hpp"

namespace defuse {

inline constexpr double kDegenerateDet = 1e-12;

/// Elliptical interest region: a center plus a non-singular 2x2 shape matrix
/// mapping the unit circle onto the ellipse.
struct FeatureFrame {
  int id = 0;
  Vec2 center;
  Mat2 shape;

  void validate() const {
    if (std::fabs(shape.det()) <= kDegenerateDet)
      throw DataError("feature " + std::to_string(id) +
                      ": singular shape matrix (|det| <= 1e-12)");
  }
};

/// 6-dof affine transformation stored as linear block + translation, so the
/// bottom row is (0,0,1) by construction.
struct HomographyMatrix {
  Mat2 linear;
  Vec2 translation;

  static HomographyMatrix identity() { return {}; }

  /// Builds from a full 3x3 matrix; rejects non-affine bottom rows and a
  /// singular linear block.
  static HomographyMatrix from_mat3(const Mat3& m) {
    if (std::fabs(m.m[2][0]) > 1e-12 || std::fabs(m.m[2][1]) > 1e-12 ||
        std::fabs(m.m[2][2] - 1.0) > 1e-12)
      throw DataError("homography bottom row is not (0,0,1)");
    HomographyMatrix h;
    h.linear = {m.m[0][0], m.m[0][1], m.m[1][0], m.m[1][1]};
    h.translation = {m.m[0][2], m.m[1][2]};
    if (std::fabs(h.linear.det()) <= kDegenerateDet)
      throw DataError("homography has a singular linear block");
    return h;
  }

  Mat3 as_mat3() const {
    Mat3 m;
    m.m = {{{linear.a11, linear.a12, translation.x},
            {linear.a21, linear.a22, translation.y},
            {0.0, 0.0, 1.0}}};
    return m;
  }

  Vec2 apply(Vec2 p) const { return linear * p + translation; }

  HomographyMatrix inverse() const {
    HomographyMatrix h;
    h.linear = linear.inverse();
    Vec2 t = h.linear * translation;
    h.translation = {-t.x, -t.y};
    return h;
  }
};

/// T(u): maps the unit circle at the origin onto the feature's ellipse.
inline HomographyMatrix frame_transform(const FeatureFrame& f) {
  HomographyMatrix h;
  h.linear = f.shape;
  h.translation = f.center;
  return h;
}

/// H = T(fq) * T(fp)^-1, the affine map carrying fp's region onto fq's.
inline HomographyMatrix correspondence_homography(const FeatureFrame& fp,
                                                  const FeatureFrame& fq) {
  if (std::fabs(fp.shape.det()) <= kDegenerateDet)
    throw DataError("degenerate frame " + std::to_string(fp.id) +
                    " (|det A| <= 1e-12)");
  HomographyMatrix h;
  Mat2 inv_p = fp.shape.inverse();
  h.linear = fq.shape * inv_p;
  Vec2 mapped = h.linear * fp.center;
  h.translation = fq.center - mapped;
  return h;
}

/// Dehomogenization [a,b,c] -> (a/c, b/c).
inline Vec2 rho(const Vec3& v) {
  if (std::fabs(v[2]) <= 1e-12)
    throw DataError("projective degeneracy: homogeneous w ~ 0");
  return {v[0] / v[2], v[1] / v[2]};
}

/// || xq - rho(H * [xp; 1]) ||, in pixels.
inline double projection_error(Vec2 xp, Vec2 xq, const HomographyMatrix& h) {
  Vec2 projected = rho(h.as_mat3() * Vec3{xp.x, xp.y, 1.0});
  return (xq - projected).norm();
}

/// A candidate match between feature p_index in image P and q_index in image
/// Q. The homography and its inverse are cached because the pairwise
/// reprojection error dominates the pipeline cost.
struct Correspondence {
  int p_index = 0;
  int q_index = 0;
  int p_id = 0;
  int q_id = 0;
  Vec2 p_center;
  Vec2 q_center;
  HomographyMatrix homography;
  HomographyMatrix homography_inv;
  // descriptor name -> match distance, for every descriptor that proposed
  // this pair; never empty
  std::map<std::string, double> sources;

  std::vector<std::string> source_descriptors() const {
    std::vector<std::string> names;
    names.reserve(sources.size());
    for (const auto& [name, dist] : sources) names.push_back(name);
    return names;
  }

  /// Sorted source names joined with ',' — the descriptor_tag of reports.
  std::string source_tag() const {
    std::string tag;
    for (const auto& [name, dist] : sources) {
      if (!tag.empty()) tag += ',';
      tag += name;
    }
    return tag;
  }
};

inline Correspondence make_correspondence(const FeatureFrame& fp, int p_index,
                                          const FeatureFrame& fq, int q_index,
                                          std::map<std::string, double> sources) {
  Correspondence c;
  c.p_index = p_index;
  c.q_index = q_index;
  c.p_id = fp.id;
  c.q_id = fq.id;
  c.p_center = fp.center;
  c.q_center = fq.center;
  c.homography = correspondence_homography(fp, fq);
  c.homography_inv = c.homography.inverse();
  c.sources = std::move(sources);
  return c;
}

/// Symmetric 4-term reprojection error between two correspondences: each
/// pair of endpoints is projected through the other correspondence's
/// homography (and its inverse), displacements averaged.
inline double reprojection_error(const Correspondence& a, const Correspondence& b) {
  // paired summation keeps d(a,b) == d(b,a) bitwise
  double ab = projection_error(a.p_center, a.q_center, b.homography) +
              projection_error(a.q_center, a.p_center, b.homography_inv);
  double ba = projection_error(b.p_center, b.q_center, a.homography) +
              projection_error(b.q_center, b.p_center, a.homography_inv);
  return 0.25 * (ab + ba);
}

}  // namespace defuse
