#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "defuse/candidates.hpp"
#include "helpers.hpp"

using namespace defuse;
using namespace testing_helpers;

namespace {

FeatureSet grid_set(int n, int id_base, int dims, std::mt19937& rng) {
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  std::vector<FeatureFrame> frames;
  std::vector<std::vector<double>> va, vb;
  for (int i = 0; i < n; ++i) {
    frames.push_back(random_frame(rng, id_base + i));
    std::vector<double> a(dims), b(dims);
    for (double& x : a) x = value(rng);
    for (double& x : b) x = value(rng);
    va.push_back(a);
    vb.push_back(b);
  }
  return make_feature_set(frames, {{"a", va}, {"b", vb}});
}

// brute-force per-descriptor r-NN with the same tie rule
std::set<std::pair<int, int>> brute_pairs(const FeatureSet& p, const FeatureSet& q,
                                          int r) {
  std::set<std::pair<int, int>> pairs;
  for (int m = 0; m < p.descriptor_count(); ++m) {
    int mq = 0;
    while (q.descriptor_names[mq] != p.descriptor_names[m]) ++mq;
    for (int i = 0; i < p.count(); ++i) {
      std::vector<std::pair<double, int>> dist;
      for (int j = 0; j < q.count(); ++j)
        dist.push_back({euclidean_distance(p.descriptor(m, i), q.descriptor(mq, j)),
                        q.frames[j].id});
      std::sort(dist.begin(), dist.end());
      for (int k = 0; k < std::min<int>(r, dist.size()); ++k)
        pairs.insert({p.frames[i].id, dist[k].second});
    }
  }
  return pairs;
}

std::set<std::pair<int, int>> flat_pairs(const CandidateSet& c) {
  std::set<std::pair<int, int>> pairs;
  for (const auto& corr : c.flat) pairs.insert({corr.p_id, corr.q_id});
  return pairs;
}

}  // namespace

TEST_CASE("r >= Nq keeps every pair once", "[candidates]") {
  std::mt19937 rng(5);
  FeatureSet p = grid_set(4, 0, 3, rng);
  FeatureSet q = grid_set(6, 100, 3, rng);
  CandidateSet c = build_candidates(p, q, 10);
  CHECK(c.size() == 4 * 6);
  for (const auto& [pid, list] : c.per_feature) CHECK(list.size() == 6);
  // flat is the disjoint union of the per-feature lists
  std::set<int> seen;
  for (const auto& [pid, list] : c.per_feature)
    for (int idx : list) {
      CHECK(c.flat[idx].p_id == pid);
      CHECK(seen.insert(idx).second);
    }
  CHECK(static_cast<int>(seen.size()) == c.size());
}

TEST_CASE("two descriptors merge with union of tags", "[candidates]") {
  // descriptor-1 distances to q1,q2,q3: 0.1 0.5 0.9; descriptor-2: 0.9 0.1 0.5
  FeatureSet p = make_feature_set({make_frame(0, 0, 0)},
                                  {{"d1", {{0.0}}}, {"d2", {{0.0}}}});
  FeatureSet q = make_feature_set(
      {make_frame(1, 0, 0), make_frame(2, 1, 0), make_frame(3, 2, 0)},
      {{"d1", {{0.1}, {0.5}, {0.9}}}, {"d2", {{0.9}, {0.1}, {0.5}}}});
  CandidateSet c = build_candidates(p, q, 2);
  REQUIRE(c.size() == 3);
  CHECK(flat_pairs(c) == std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {0, 3}});
  // q2 proposed by both
  for (const auto& corr : c.flat) {
    if (corr.q_id == 2) {
      CHECK(corr.sources.size() == 2);
      CHECK(corr.source_tag() == "d1,d2");
      CHECK(corr.sources.at("d1") == 0.5);
      CHECK(corr.sources.at("d2") == 0.1);
    } else {
      CHECK(corr.sources.size() == 1);
    }
  }
}

TEST_CASE("matches a brute-force scan and grows with r", "[candidates]") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    FeatureSet p = grid_set(3 + trial * 4, 0, 4, rng);
    FeatureSet q = grid_set(5 + trial * 4, 1000, 4, rng);
    int r = 1 + trial % 5;
    CandidateSet c = build_candidates(p, q, r);
    CHECK(flat_pairs(c) == brute_pairs(p, q, r));
    for (const auto& [pid, list] : c.per_feature)
      CHECK(static_cast<int>(list.size()) <= r * p.descriptor_count());

    // monotonicity: increasing r never removes a candidate
    CandidateSet bigger = build_candidates(p, q, r + 2);
    auto small_pairs = flat_pairs(c);
    auto big_pairs = flat_pairs(bigger);
    CHECK(std::includes(big_pairs.begin(), big_pairs.end(), small_pairs.begin(),
                        small_pairs.end()));
  }
}

TEST_CASE("candidate homographies are recomputable", "[candidates]") {
  std::mt19937 rng(23);
  FeatureSet p = grid_set(6, 0, 3, rng);
  FeatureSet q = grid_set(6, 100, 3, rng);
  CandidateSet c = build_candidates(p, q, 3);
  for (const auto& corr : c.flat) {
    auto h = correspondence_homography(p.frames[corr.p_index], q.frames[corr.q_index]);
    CHECK(std::fabs(h.linear.a11 - corr.homography.linear.a11) < 1e-9);
    CHECK(std::fabs(h.translation.x - corr.homography.translation.x) < 1e-9);
    CHECK(std::fabs(h.translation.y - corr.homography.translation.y) < 1e-9);
    CHECK(!corr.sources.empty());
  }
}

TEST_CASE("configuration errors", "[candidates]") {
  std::mt19937 rng(29);
  FeatureSet p = grid_set(2, 0, 3, rng);
  FeatureSet q = make_feature_set({make_frame(100, 0, 0)}, {{"other", {{0.0}}}});
  CHECK_THROWS_AS(build_candidates(p, q, 5), DataError);
  FeatureSet q2 = grid_set(2, 100, 3, rng);
  CHECK_THROWS_AS(build_candidates(p, q2, 0), ParamError);
}
