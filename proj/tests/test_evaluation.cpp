#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "defuse/evaluation.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace defuse;
using namespace testing_helpers;
using Catch::Matchers::WithinAbs;

namespace {

SceneGroundTruth identity_gt(int objects = 1) {
  SceneGroundTruth gt;
  for (int o = 0; o < objects; ++o) gt.object_transforms[o] = HomographyMatrix::identity();
  return gt;
}

double embedded_distance(const MdsEmbedding& e, int i, int j) {
  double dx = e.coords[i][0] - e.coords[j][0];
  double dy = e.coords[i][1] - e.coords[j][1];
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

TEST_CASE("per-feature selection", "[evaluation]") {
  CandidateSet c;
  auto fp = make_frame(0, 0, 0);
  c.flat.push_back(make_corr(fp, 0, make_frame(10, 0, 0), 0));
  c.flat.push_back(make_corr(fp, 0, make_frame(11, 1, 0), 1));
  c.flat.push_back(make_corr(fp, 0, make_frame(12, 2, 0), 2));
  c.per_feature[0] = {0, 1, 2};

  SECTION("argmax score wins") {
    std::vector<double> scores = {0.2, 0.9, -0.1};
    auto sel = select_per_feature(c, scores);
    REQUIRE(sel.size() == 1);
    CHECK(sel[0] == 1);
  }
  SECTION("ties break toward the lowest q id") {
    std::vector<double> scores = {0.5, 0.5, 0.5};
    CHECK(select_per_feature(c, scores)[0] == 0);
  }
  SECTION("a single candidate is selected regardless of score") {
    CandidateSet lone;
    lone.flat.push_back(make_corr(fp, 0, make_frame(10, 0, 0), 0));
    lone.per_feature[0] = {0};
    std::vector<double> scores = {-123.0};
    CHECK(select_per_feature(lone, scores)[0] == 0);
  }
}

TEST_CASE("pixel correctness labeling", "[evaluation]") {
  SceneGroundTruth gt = identity_gt(2);
  gt.object_assignment = {{0, 0}, {10, 0}, {1, 0}, {11, 1}, {2, 1}, {12, 0}};

  SECTION("identity transform, coincident endpoints") {
    auto c = make_corr(make_frame(0, 5, 5), 0, make_frame(10, 5, 5), 0);
    CHECK(label_correct_pixel(c, gt));
  }
  SECTION("strictly outside the tolerance") {
    auto near = make_corr(make_frame(0, 0, 0), 0, make_frame(10, 8.0, 0), 0);
    auto far = make_corr(make_frame(0, 0, 0), 0, make_frame(10, 8.01, 0), 0);
    CHECK(label_correct_pixel(near, gt));
    CHECK_FALSE(label_correct_pixel(far, gt));
  }
  SECTION("object consistency required even when geometry fits") {
    auto c = make_corr(make_frame(1, 3, 3), 0, make_frame(11, 3, 3), 0);
    CHECK_FALSE(label_correct_pixel(c, gt));  // 1 is object 0, 11 is object 1
  }
  SECTION("background never counts as correct") {
    SceneGroundTruth bg = identity_gt();
    bg.object_assignment = {{0, kBackgroundObject}, {10, kBackgroundObject}};
    auto c = make_corr(make_frame(0, 1, 1), 0, make_frame(10, 1, 1), 0);
    CHECK_FALSE(label_correct_pixel(c, bg));
  }
  SECTION("labels ignore source tags") {
    auto a = make_corr(make_frame(0, 5, 5), 0, make_frame(10, 5, 5), 0, "sift");
    auto b = make_corr(make_frame(0, 5, 5), 0, make_frame(10, 5, 5), 0, "liop");
    b.sources["extra"] = 1.0;
    CHECK(label_correct_pixel(a, gt) == label_correct_pixel(b, gt));
  }
}

TEST_CASE("overlap correctness labeling", "[evaluation]") {
  SceneGroundTruth gt = identity_gt();
  gt.object_assignment = {{0, 0}, {10, 0}};

  auto set_pair = [](const FeatureFrame& fp, const FeatureFrame& fq) {
    FeatureSet p = make_feature_set({fp}, {{"d", {{0.0}}}});
    FeatureSet q = make_feature_set({fq}, {{"d", {{0.0}}}});
    return std::pair{p, q};
  };

  SECTION("identical ellipses overlap fully") {
    auto fp = make_frame(0, 4, 4, 2, 0, 0, 1);
    auto fq = make_frame(10, 4, 4, 2, 0, 0, 1);
    auto [p, q] = set_pair(fp, fq);
    CHECK(label_correct_overlap(make_corr(fp, 0, fq, 0), gt, p, q));
  }
  SECTION("disjoint ellipses never overlap") {
    auto fp = make_frame(0, 0, 0);
    auto fq = make_frame(10, 10, 0);
    auto [p, q] = set_pair(fp, fq);
    CHECK_FALSE(label_correct_overlap(make_corr(fp, 0, fq, 0), gt, p, q));
  }
  SECTION("unit circles offset by one: sampled area matches the lens oracle") {
    auto fp = make_frame(0, 0, 0);
    auto fq = make_frame(10, 1, 0);
    auto [p, q] = set_pair(fp, fq);
    auto c = make_corr(fp, 0, fq, 0);
    double expected = oracle::unit_circle_overlap_error(1.0);
    CHECK_THAT(expected, WithinAbs(0.757, 1e-3));
    CHECK_FALSE(label_correct_overlap(c, gt, p, q));  // > 0.5 threshold
    // bracket the sampled estimate against the closed form
    CHECK(label_correct_overlap(c, gt, p, q, expected + 0.01));
    CHECK_FALSE(label_correct_overlap(c, gt, p, q, expected - 0.01));
  }
}

TEST_CASE("precision-recall arithmetic", "[evaluation]") {
  SECTION("nTP=3 nFP=1 nFN=2") {
    std::vector<int> labels = {1, 1, 0, 1};
    PrResult pr = precision_recall(labels, 5);
    CHECK(pr.tp == 3);
    CHECK(pr.fp == 1);
    CHECK(pr.fn == 2);
    CHECK_THAT(pr.curve.back().precision, WithinAbs(0.75, 1e-12));
    CHECK_THAT(pr.curve.back().recall, WithinAbs(0.6, 1e-12));
  }
  SECTION("all detected correct, all correct detected") {
    std::vector<int> labels = {1, 1, 1};
    CHECK_THAT(precision_recall(labels, 3).ap, WithinAbs(1.0, 1e-12));
  }
  SECTION("interleaved hits") {
    std::vector<int> labels = {1, 0, 1};
    CHECK_THAT(precision_recall(labels, 2).ap, WithinAbs((1.0 + 2.0 / 3.0) / 2.0, 1e-12));
  }
  SECTION("recall undefined without positives") {
    std::vector<int> labels = {0, 0};
    CHECK_THROWS_AS(precision_recall(labels, 0), DataError);
  }
  SECTION("matches brute-force enumeration on random label sequences") {
    std::mt19937 rng(19);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
      int n = 1 + trial % 30;
      std::vector<int> labels(n);
      int positives = 0;
      for (int& l : labels) positives += (l = coin(rng));
      int total = positives + coin(rng) * 3;
      if (total == 0) continue;
      PrResult pr = precision_recall(labels, total);
      CHECK(pr.ap == oracle::ap_bruteforce(labels, total));
      // recall never decreases down the curve
      for (std::size_t i = 1; i < pr.curve.size(); ++i)
        CHECK(pr.curve[i].recall >= pr.curve[i - 1].recall);
    }
  }
}

TEST_CASE("total_correct_possible scans exhaustively", "[evaluation]") {
  SceneGroundTruth gt = identity_gt();
  gt.object_assignment = {{0, 0}, {1, 0}, {2, kBackgroundObject}, {10, 0}, {11, 0}};
  FeatureSet p = make_feature_set(
      {make_frame(0, 0, 0), make_frame(1, 50, 50), make_frame(2, 20, 20)},
      {{"d", {{0.0}, {0.0}, {0.0}}}});
  // feature 0 has an exact partner; feature 1's only same-object partner is
  // 100px away; feature 2 is background
  FeatureSet q = make_feature_set({make_frame(10, 0, 0), make_frame(11, 150, 50)},
                                  {{"d", {{0.0}, {0.0}}}});
  CHECK(total_correct_possible(p, q, gt) == 1);
}

TEST_CASE("classical MDS embedding", "[evaluation]") {
  SECTION("two points embed at their exact distance") {
    SquareMatrix d(2, 0.0);
    d(0, 1) = d(1, 0) = 3.25;
    MdsEmbedding e = mds_embed(d);
    CHECK(e.dims_used == 1);
    CHECK_THAT(embedded_distance(e, 0, 1), WithinAbs(3.25, 1e-9));
  }
  SECTION("equilateral triangle preserves pairwise distances") {
    SquareMatrix d(3, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) d(i, j) = 1.0;
    MdsEmbedding e = mds_embed(d);
    CHECK(e.dims_used == 2);
    CHECK_THAT(embedded_distance(e, 0, 1), WithinAbs(1.0, 1e-6));
    CHECK_THAT(embedded_distance(e, 0, 2), WithinAbs(1.0, 1e-6));
    CHECK_THAT(embedded_distance(e, 1, 2), WithinAbs(1.0, 1e-6));
  }
  SECTION("all-zero distances embed at the origin") {
    SquareMatrix d(4, 0.0);
    MdsEmbedding e = mds_embed(d);
    CHECK(e.dims_used == 0);
    for (int i = 0; i < 4; ++i) {
      CHECK(e.coords[i][0] == 0.0);
      CHECK(e.coords[i][1] == 0.0);
    }
  }
  SECTION("planar configurations are recovered to 1e-6") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> pos(-50.0, 50.0);
    for (int trial = 0; trial < 5; ++trial) {
      int n = 10 + trial * 8;
      std::vector<std::array<double, 2>> pts(n);
      for (auto& pt : pts) pt = {pos(rng), pos(rng)};
      SquareMatrix d(n, 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double dx = pts[i][0] - pts[j][0], dy = pts[i][1] - pts[j][1];
          d(i, j) = std::sqrt(dx * dx + dy * dy);
        }
      MdsEmbedding e = mds_embed(d);
      REQUIRE(e.dims_used == 2);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          CHECK_THAT(embedded_distance(e, i, j), WithinAbs(d(i, j), 1e-6));
    }
  }
  SECTION("infinite entries are capped before embedding") {
    SquareMatrix d(3, 0.0);
    d(0, 1) = d(1, 0) = 1.0;
    d(0, 2) = d(2, 0) = kInf;
    d(1, 2) = d(2, 1) = kInf;
    MdsEmbedding e = mds_embed(d);  // treated as distance 2
    CHECK(embedded_distance(e, 0, 2) > 1.0);
    CHECK(std::isfinite(e.coords[2][0]));
  }
}
