#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "defuse/geodesic.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace defuse;
using namespace testing_helpers;
using Catch::Matchers::WithinAbs;

namespace {

CandidateSet three_corrs(double x0, double x1, double x2) {
  CandidateSet c;
  c.flat.push_back(make_corr(make_frame(0, x0, 0), 0, make_frame(10, x0 + 5, 0), 0));
  c.flat.push_back(make_corr(make_frame(1, x1, 0), 1, make_frame(11, x1 + 5, 0), 1));
  c.flat.push_back(make_corr(make_frame(2, x2, 0), 2, make_frame(12, x2 + 5, 0), 2));
  return c;
}

bool adjacent(const CorrespondenceGraph& g, int a, int b) {
  for (const auto& [v, w] : g.adjacency[a])
    if (v == b) return true;
  return false;
}

CorrespondenceGraph random_graph(std::mt19937& rng, int n, double edge_prob,
                                 std::vector<oracle::Edge>& edges) {
  std::uniform_real_distribution<double> weight(0.0, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  CorrespondenceGraph g;
  g.n = n;
  g.k = 0;
  g.adjacency.assign(n, {});
  edges.clear();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng) > edge_prob) continue;
      double w = weight(rng);
      g.adjacency[i].push_back({j, w});
      g.adjacency[j].push_back({i, w});
      edges.push_back({i, j, w});
    }
  return g;
}

}  // namespace

TEST_CASE("graph construction", "[geodesic]") {
  SECTION("correspondences sharing a p-feature are always adjacent") {
    CandidateSet c;
    auto fp = make_frame(0, 50, 50);
    c.flat.push_back(make_corr(fp, 0, make_frame(10, 0, 0), 0));
    c.flat.push_back(make_corr(fp, 0, make_frame(11, 90, 90), 1));
    // a far-away third point soaks up the k budget
    c.flat.push_back(make_corr(make_frame(1, 0, 0), 1, make_frame(12, 1, 1), 2));
    CorrespondenceGraph g = build_graph(c, 1);
    CHECK(adjacent(g, 0, 1));
    CHECK(adjacent(g, 1, 0));
  }

  SECTION("collinear endpoints with k=1 follow the union rule") {
    CorrespondenceGraph g = build_graph(three_corrs(0, 1, 10), 1);
    CHECK(adjacent(g, 0, 1));
    CHECK(adjacent(g, 1, 2));  // 10's nearest neighbor is 1
    CHECK_FALSE(adjacent(g, 0, 2));
    CHECK_FALSE(adjacent(g, 0, 0));  // no self loops
  }

  SECTION("identical homographies give zero edge weight") {
    // both correspondences are the same translation by (5,0)
    CandidateSet c;
    c.flat.push_back(make_corr(make_frame(0, 0, 0), 0, make_frame(10, 5, 0), 0));
    c.flat.push_back(make_corr(make_frame(1, 1, 0), 1, make_frame(11, 6, 0), 1));
    CorrespondenceGraph g = build_graph(c, 1);
    REQUIRE(adjacent(g, 0, 1));
    CHECK_THAT(g.adjacency[0][0].second, WithinAbs(0.0, 1e-9));
  }
}

TEST_CASE("geodesic distances on a chain", "[geodesic]") {
  CorrespondenceGraph g;
  g.n = 4;
  g.k = 1;
  g.adjacency = {{{1, 1.0}}, {{0, 1.0}, {2, 2.0}}, {{1, 2.0}}, {}};
  SquareMatrix d = geodesic_all_pairs(g, GeodesicMode::exact);
  CHECK_THAT(d(0, 2), WithinAbs(3.0, 1e-12));  // exhaustive: only path 0-1-2
  CHECK(d(0, 3) == kInf);                      // disconnected
  for (int i = 0; i < 4; ++i) CHECK(d(i, i) == 0.0);
}

TEST_CASE("exact mode matches Floyd-Warshall", "[geodesic]") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + trial % 49;
    std::vector<oracle::Edge> edges;
    CorrespondenceGraph g = random_graph(rng, n, 0.15, edges);
    SquareMatrix d = geodesic_all_pairs(g, GeodesicMode::exact);
    auto expected = oracle::floyd_warshall(n, edges);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (std::isinf(expected[i][j]))
          CHECK(d(i, j) == kInf);
        else
          CHECK_THAT(d(i, j), WithinAbs(expected[i][j], 1e-9));
      }
  }
}

TEST_CASE("capped mode properties", "[geodesic]") {
  std::mt19937 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 5 + trial * 2;
    std::vector<oracle::Edge> edges;
    CorrespondenceGraph g = random_graph(rng, n, 0.3, edges);
    SquareMatrix exact = geodesic_all_pairs(g, GeodesicMode::exact);

    SquareMatrix full_cap = geodesic_all_pairs(g, GeodesicMode::capped, n + 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(full_cap(i, j) == exact(i, j));

    SquareMatrix capped = geodesic_all_pairs(g, GeodesicMode::capped, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        CHECK(capped(i, j) >= exact(i, j));
        CHECK(capped(i, j) == capped(j, i));  // symmetrized by min
      }
  }
}

TEST_CASE("exact output is symmetric and triangular", "[geodesic]") {
  std::mt19937 rng(41);
  std::vector<oracle::Edge> edges;
  CorrespondenceGraph g = random_graph(rng, 25, 0.25, edges);
  SquareMatrix d = geodesic_all_pairs(g, GeodesicMode::exact);
  for (int i = 0; i < 25; ++i)
    for (int j = 0; j < 25; ++j) {
      CHECK(d(i, j) == d(j, i));
      for (int k = 0; k < 25; ++k) {
        if (std::isfinite(d(i, k)) && std::isfinite(d(k, j)))
          CHECK(d(i, j) <= d(i, k) + d(k, j) + 1e-9);
      }
    }
}
