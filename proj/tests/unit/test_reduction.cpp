#include <doctest.h>

#include <algorithm>
#include <set>

#include "error.hpp"
#include "oracles.hpp"
#include "reduction.hpp"

using namespace sparft;

namespace {

// Feature matrix with every row in cluster 0 around the given centroid.
struct Single {
  FeatureMatrix features;
  ClusterModel model;
};

Single single_cluster(const oracle::Rows& pts, const std::vector<double>& centroid) {
  Single s;
  s.features.rows = Matrix::from_rows(pts);
  s.features.pca_components = pts.front().size() - 1;
  for (std::size_t i = 0; i < pts.size(); ++i) s.features.ids.push_back("r" + std::to_string(i));
  s.model.k = 1;
  s.model.centroids = Matrix::from_rows({centroid});
  s.model.assignment.assign(pts.size(), 0);
  return s;
}

oracle::Rows line(std::size_t n) {
  oracle::Rows r;
  for (std::size_t i = 0; i < n; ++i) r.push_back({static_cast<double>(i)});
  return r;
}

}  // namespace

TEST_CASE("default examples per cluster") { CHECK(kDefaultPerCluster == 10); }

TEST_CASE("centroid distances on a 1-D cluster") {
  auto s = single_cluster(line(4), {1.5});
  const auto d = centroid_distances(s.features, s.model, 0);
  REQUIRE(d.size() == 4);
  CHECK(d[0].index == 1);
  CHECK(d[1].index == 2);
  CHECK(d[2].index == 0);
  CHECK(d[3].index == 3);
  CHECK(d[0].distance == 0.5);
  CHECK(d[3].distance == 1.5);
}

TEST_CASE("a point at the centroid comes first") {
  auto s = single_cluster({{3.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}}, {0.0, 0.0});
  const auto d = centroid_distances(s.features, s.model, 0);
  CHECK(d[0].index == 1);
  CHECK(d[0].distance == 0.0);
}

TEST_CASE("centroid distances match a naive loop") {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = oracle::random_rows(gen, 30, 4);
    const auto c = oracle::random_rows(gen, 1, 4)[0];
    auto s = single_cluster(pts, c);
    const auto d = centroid_distances(s.features, s.model, 0);
    std::vector<std::pair<double, std::size_t>> naive;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 4; ++j) acc += (pts[i][j] - c[j]) * (pts[i][j] - c[j]);
      naive.push_back({std::sqrt(acc), i});
    }
    std::sort(naive.begin(), naive.end());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d[i].index == naive[i].second);
      CHECK(std::abs(d[i].distance - naive[i].first) <= 1e-12);
    }
  }
}

TEST_CASE("diverse selection on positions 0..9") {
  auto s = single_cluster(line(10), {4.5});
  CHECK(select_diverse(s.features, s.model, 0, 3) == std::vector<std::size_t>{4, 9, 0});
}

TEST_CASE("diverse selection exhausts a small cluster") {
  auto s = single_cluster(line(5), {2.0});
  const auto pick = select_diverse(s.features, s.model, 0, 10);
  CHECK(pick.size() == 5);
  CHECK(pick == oracle::greedy_fps(line(5), {0, 1, 2, 3, 4}, {2.0}, 10));
}

TEST_CASE("diverse selection equals the brute-force oracle across clusters") {
  std::mt19937_64 gen(2);
  std::uniform_int_distribution<std::size_t> nd(2, 120), dd(2, 12), ld(1, 15), kd(1, 4);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = nd(gen), d = dd(gen), k = std::min(kd(gen), n);
    const auto pts = oracle::random_rows(gen, n, d);
    FeatureMatrix fm;
    fm.rows = Matrix::from_rows(pts);
    for (std::size_t i = 0; i < n; ++i) fm.ids.push_back(std::to_string(i));
    const auto model = kmeans(fm, {k, static_cast<std::uint64_t>(trial), 300, 1e-6});
    const std::size_t l = ld(gen);
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> cent(model.centroids.row(c).begin(), model.centroids.row(c).end());
      CHECK(select_diverse(fm, model, c, l) == oracle::greedy_fps(pts, model.members(c), cent, l));
    }
  }
}

TEST_CASE("diverse sets are at least as spread as closest sets") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> nd(3, 80), ld(2, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = nd(gen);
    const auto pts = oracle::random_rows(gen, n, 3);
    auto s = single_cluster(pts, oracle::column_means(pts));
    const std::size_t l = std::min(ld(gen), n);
    const auto diverse = select_diverse(s.features, s.model, 0, l);
    const auto closest = select_closest(s.features, s.model, 0, l);
    CHECK(oracle::min_pairwise(pts, diverse) >= oracle::min_pairwise(pts, closest));
  }
}

TEST_CASE("closest selection is the distance-sorted prefix") {
  std::mt19937_64 gen(4);
  const auto pts = oracle::random_rows(gen, 25, 3);
  auto s = single_cluster(pts, {0.1, 0.2, 0.3});
  const auto d = centroid_distances(s.features, s.model, 0);
  CHECK(select_closest(s.features, s.model, 0, 1) == std::vector<std::size_t>{d[0].index});
  const auto seven = select_closest(s.features, s.model, 0, 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(seven[i] == d[i].index);

  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return oracle::dist(pts[a], {0.1, 0.2, 0.3}) < oracle::dist(pts[b], {0.1, 0.2, 0.3});
  });
  order.resize(7);
  CHECK(seven == order);
}

TEST_CASE("random selection") {
  auto s = single_cluster(line(5), {2.0});
  auto all = select_random(s.features, s.model, 0, 9, 17);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(select_random(s.features, s.model, 0, 2, 99) == select_random(s.features, s.model, 0, 2, 99));

  std::vector<int> counts(5, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed)
    for (auto i : select_random(s.features, s.model, 0, 2, seed)) ++counts[i];
  for (int c : counts) CHECK(std::abs(c - 4000) <= 200);
}

TEST_CASE("l must be positive") {
  auto s = single_cluster(line(3), {1.0});
  CHECK_THROWS_AS(select_diverse(s.features, s.model, 0, 0), Error);
  CHECK_THROWS_AS(select_closest(s.features, s.model, 0, 0), Error);
  CHECK_THROWS_AS(select_random(s.features, s.model, 0, 0, 1), Error);
  CHECK_THROWS_AS(select_diverse(s.features, s.model, 1, 2), Error);
}

TEST_CASE("reduce produces seven lists of at most ten unique members") {
  std::mt19937_64 gen(5);
  FeatureMatrix fm;
  fm.rows = Matrix::from_rows(oracle::random_rows(gen, 150, 6));
  fm.pca_components = 5;
  for (std::size_t i = 0; i < 150; ++i) {
    fm.ids.push_back("q" + std::to_string(i));
    fm.difficulty.push_back(static_cast<double>(i % 101));
  }
  const auto model = kmeans(fm, {7, 3, 300, 1e-6});
  for (auto strategy : {SelectionStrategy::Diverse, SelectionStrategy::Random, SelectionStrategy::Closest}) {
    const auto r = reduce(fm, model, strategy, 10, 8);
    REQUIRE(r.cluster_count() == 7);
    std::set<std::string> seen;
    for (std::size_t c = 0; c < 7; ++c) {
      const auto members = model.members(c);
      CHECK(r.clusters[c].size() == std::min<std::size_t>(10, members.size()));
      for (const auto& id : r.clusters[c]) {
        CHECK(seen.insert(id).second);
        const auto row = static_cast<std::size_t>(std::stoul(id.substr(1)));
        CHECK(model.assignment[row] == c);
      }
    }
    CHECK(r.mean_difficulty.size() == 7);

    const auto back = parse_reduced_set(serialize_reduced_set(r));
    CHECK(back.clusters == r.clusters);
    CHECK(back.strategy == strategy);
    CHECK(back.mean_difficulty == r.mean_difficulty);
    CHECK(serialize_reduced_set(back) == serialize_reduced_set(r));
  }
}

TEST_CASE("manifest validation") {
  auto r = synthetic_reduced_set(2, 3);
  CHECK(r.clusters[1][2] == "c1_2");
  std::string text = serialize_reduced_set(r);
  CHECK_THROWS_AS(parse_reduced_set(text.substr(0, 10)), Error);
  r.clusters[1][0] = "c0_0";
  try {
    parse_reduced_set(serialize_reduced_set(r));
    FAIL("expected a duplicate id error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptArtifact);
  }
  CHECK(parse_strategy("closest") == SelectionStrategy::Closest);
  CHECK_THROWS_AS(parse_strategy("greedy"), Error);
}
