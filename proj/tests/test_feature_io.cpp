#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "defuse/feature_io.hpp"
#include "helpers.hpp"

using namespace defuse;
using namespace testing_helpers;

TEST_CASE("minimal well-formed feature file", "[feature_io]") {
  std::istringstream in(
      "#descriptors sift:2\n"
      "0 1.5 2.5 1 0 0 1 | 0.25 0.75\n");
  FeatureSet set = load_feature_set(in, "test");
  REQUIRE(set.count() == 1);
  CHECK(set.frames[0].id == 0);
  CHECK(set.frames[0].center.x == 1.5);
  CHECK(set.descriptor_names == std::vector<std::string>{"sift"});
  auto b = set.bundle(0, 0);
  CHECK(b.descriptor_name == "sift");
  CHECK(b.vector == std::vector<double>{0.25, 0.75});
}

TEST_CASE("feature file validation", "[feature_io]") {
  SECTION("singular shape matrix names the feature") {
    std::istringstream in(
        "#descriptors d:1\n"
        "7 0 0 1 2 2 4 | 0.5\n");
    CHECK_THROWS_WITH(load_feature_set(in, "test"),
                      Catch::Matchers::ContainsSubstring("feature 7"));
  }
  SECTION("duplicate id rejected") {
    std::istringstream in(
        "#descriptors d:1\n"
        "3 0 0 1 0 0 1 | 0\n"
        "3 1 1 1 0 0 1 | 0\n");
    CHECK_THROWS_AS(load_feature_set(in, "test"), DataError);
  }
  SECTION("parse errors carry the line number") {
    std::istringstream in(
        "#descriptors d:1\n"
        "0 0 0 1 0 0 1 | 0\n"
        "1 x 0 1 0 0 1 | 0\n");
    CHECK_THROWS_WITH(load_feature_set(in, "test"),
                      Catch::Matchers::ContainsSubstring("test:3"));
  }
  SECTION("wrong vector arity rejected") {
    std::istringstream in(
        "#descriptors d:2\n"
        "0 0 0 1 0 0 1 | 0.5\n");
    CHECK_THROWS_AS(load_feature_set(in, "test"), ParseError);
  }
  SECTION("empty set rejected") {
    std::istringstream in("#descriptors d:1\n");
    CHECK_THROWS_AS(load_feature_set(in, "test"), DataError);
  }
  SECTION("non-finite descriptor value rejected") {
    std::istringstream in(
        "#descriptors d:1\n"
        "0 0 0 1 0 0 1 | inf\n");
    CHECK_THROWS_AS(load_feature_set(in, "test"), DataError);
  }
}

TEST_CASE("feature round trip preserves every field", "[feature_io]") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> value(-100.0, 100.0);
  std::uniform_int_distribution<int> dim_dist(1, 6);

  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + trial % 7;
    int dim_a = dim_dist(rng), dim_b = dim_dist(rng);
    std::vector<FeatureFrame> frames;
    std::vector<std::vector<double>> va, vb;
    for (int i = 0; i < n; ++i) {
      frames.push_back(random_frame(rng, i));
      std::vector<double> a(dim_a), b(dim_b);
      for (double& x : a) x = value(rng);
      for (double& x : b) x = value(rng);
      va.push_back(a);
      vb.push_back(b);
    }
    FeatureSet original = make_feature_set(frames, {{"alpha", va}, {"beta", vb}});

    std::ostringstream out;
    save_feature_set(out, original);
    std::istringstream in(out.str());
    FeatureSet loaded = load_feature_set(in, "roundtrip");

    REQUIRE(loaded.count() == original.count());  // no record dropped
    REQUIRE(loaded.descriptor_names == original.descriptor_names);
    for (int i = 0; i < n; ++i) {
      CHECK(loaded.frames[i].id == original.frames[i].id);
      CHECK(loaded.frames[i].center.x == original.frames[i].center.x);
      CHECK(loaded.frames[i].center.y == original.frames[i].center.y);
      CHECK(loaded.frames[i].shape.a11 == original.frames[i].shape.a11);
      CHECK(loaded.frames[i].shape.a22 == original.frames[i].shape.a22);
    }
    for (int m = 0; m < 2; ++m) CHECK(loaded.channels[m] == original.channels[m]);
  }
}

TEST_CASE("ground truth files", "[feature_io]") {
  SECTION("single object with identity transform") {
    std::istringstream in(
        "#objects 1\n"
        "0 1 0 0 0 1 0\n"
        "assign 5 0\n"
        "assign 6 -1\n");
    SceneGroundTruth gt = load_ground_truth(in, "test");
    CHECK(gt.object_of(5) == 0);
    CHECK(gt.object_of(6) == kBackgroundObject);
    CHECK(gt.object_of(99) == kBackgroundObject);
    CHECK(gt.pixel_tolerance == 8.0);
    const auto& h = gt.object_transforms.at(0);
    CHECK(h.linear.a11 == 1.0);
    CHECK(h.translation.x == 0.0);
  }
  SECTION("assignment to unknown object rejected") {
    std::istringstream in(
        "#objects 1\n"
        "0 1 0 0 0 1 0\n"
        "assign 5 3\n");
    CHECK_THROWS_AS(load_ground_truth(in, "test"), DataError);
  }
  SECTION("tolerance line honored") {
    std::istringstream in(
        "#objects 1\n"
        "0 1 0 0 0 1 0\n"
        "tolerance 4.5\n");
    CHECK(load_ground_truth(in, "test").pixel_tolerance == 4.5);
  }
  SECTION("round trip of randomized scenes") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> value(-10.0, 10.0);
    for (int trial = 0; trial < 10; ++trial) {
      SceneGroundTruth gt;
      int objects = 1 + trial % 4;
      for (int o = 0; o < objects; ++o) {
        HomographyMatrix h;
        do {
          h.linear = {value(rng), value(rng), value(rng), value(rng)};
        } while (std::fabs(h.linear.det()) < 0.1);
        h.translation = {value(rng), value(rng)};
        gt.object_transforms[o] = h;
      }
      for (int f = 0; f < 12; ++f)
        gt.object_assignment[f] = (f % (objects + 1)) - 1;  // includes background
      gt.pixel_tolerance = 1.0 + trial;

      std::ostringstream out;
      save_ground_truth(out, gt);
      std::istringstream in(out.str());
      SceneGroundTruth loaded = load_ground_truth(in, "roundtrip");
      CHECK(loaded.object_assignment == gt.object_assignment);
      CHECK(loaded.pixel_tolerance == gt.pixel_tolerance);
      REQUIRE(loaded.object_transforms.size() == gt.object_transforms.size());
      for (const auto& [o, h] : gt.object_transforms) {
        const auto& l = loaded.object_transforms.at(o);
        CHECK(l.linear.a11 == h.linear.a11);
        CHECK(l.linear.a12 == h.linear.a12);
        CHECK(l.linear.a21 == h.linear.a21);
        CHECK(l.linear.a22 == h.linear.a22);
        CHECK(l.translation.x == h.translation.x);
        CHECK(l.translation.y == h.translation.y);
      }
    }
  }
}

TEST_CASE("match report files", "[feature_io]") {
  std::vector<ReportEntry> entries = {
      {3, 10, 0.75, "sift", Correctness::yes},
      {1, 12, 0.25, "sift,liop", Correctness::no},
      {2, 11, -0.5, "liop", Correctness::unknown},
  };
  std::ostringstream out;
  save_match_report(out, entries, {"config r 5"});
  std::istringstream in(out.str());
  auto loaded = load_match_report(in, "report");
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].p_id == 3);
  CHECK(loaded[0].score == 0.75);
  CHECK(loaded[1].tag == "sift,liop");
  CHECK(loaded[2].correct == Correctness::unknown);

  SECTION("scores must be non-increasing") {
    std::istringstream bad(
        "1 2 0.5 d 1\n"
        "3 4 0.9 d 0\n");
    CHECK_THROWS_AS(load_match_report(bad, "report"), DataError);
  }
}
