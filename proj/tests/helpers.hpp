// Fixture builders shared by the test suites.

#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "defuse/candidates.hpp"
#include "defuse/feature_io.hpp"
#include "defuse/geometry.hpp"

namespace testing_helpers {

inline defuse::FeatureFrame make_frame(int id, double x, double y, double a11 = 1.0,
                                       double a12 = 0.0, double a21 = 0.0,
                                       double a22 = 1.0) {
  defuse::FeatureFrame f;
  f.id = id;
  f.center = {x, y};
  f.shape = {a11, a12, a21, a22};
  return f;
}

/// Feature set from frames plus per-descriptor per-feature vectors:
/// channels[m] = (name, one vector per frame).
inline defuse::FeatureSet make_feature_set(
    std::vector<defuse::FeatureFrame> frames,
    std::vector<std::pair<std::string, std::vector<std::vector<double>>>> channels) {
  defuse::FeatureSet set;
  set.frames = std::move(frames);
  for (auto& [name, vectors] : channels) {
    set.descriptor_names.push_back(name);
    set.descriptor_dims.push_back(static_cast<int>(vectors.at(0).size()));
    std::vector<double> flat;
    for (const auto& v : vectors) flat.insert(flat.end(), v.begin(), v.end());
    set.channels.push_back(std::move(flat));
  }
  return set;
}

inline defuse::FeatureFrame random_frame(std::mt19937& rng, int id,
                                         double extent = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> entry(-2.0, 2.0);
  defuse::FeatureFrame f;
  f.id = id;
  f.center = {pos(rng), pos(rng)};
  do {
    f.shape = {entry(rng), entry(rng), entry(rng), entry(rng)};
  } while (std::fabs(f.shape.det()) < 0.1);
  return f;
}

inline defuse::Correspondence make_corr(const defuse::FeatureFrame& fp, int p_index,
                                        const defuse::FeatureFrame& fq, int q_index,
                                        const std::string& source = "d") {
  return defuse::make_correspondence(fp, p_index, fq, q_index, {{source, 0.0}});
}

inline defuse::Correspondence random_corr(std::mt19937& rng, int index) {
  auto fp = random_frame(rng, index);
  auto fq = random_frame(rng, index + 1000);
  return make_corr(fp, index, fq, index);
}

}  // namespace testing_helpers
