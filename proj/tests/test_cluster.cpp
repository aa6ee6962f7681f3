#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "faircf/cluster.hpp"
#include "faircf/errors.hpp"

using namespace faircf;

namespace {

// Three tight blobs in 2-D plus a trailing protected column.
std::vector<Instance> blobs(std::size_t per_blob, std::uint64_t seed, std::vector<int>* truth) {
  const double centers[3][2] = {{0.1, 0.1}, {0.9, 0.2}, {0.5, 0.9}};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.03);
  std::vector<Instance> pts;
  for (int b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      pts.push_back({centers[b][0] + n(rng), centers[b][1] + n(rng), static_cast<double>(i % 2)});
      if (truth) truth->push_back(b);
    }
  }
  return pts;
}

double inertia_of(const std::vector<Instance>& pts, const Clustering& c) {
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto p = c.project(pts[i]);
    const auto& m = c.centroids[static_cast<std::size_t>(c.assignment[i])];
    for (std::size_t j = 0; j < p.size(); ++j) total += (p[j] - m[j]) * (p[j] - m[j]);
  }
  return total;
}

const std::size_t kProtected[] = {2};

}  // namespace

TEST_CASE("well separated blobs are recovered exactly") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<int> truth;
    const auto pts = blobs(40, seed, &truth);
    const Clustering c = kmeans_fit(pts, 3, seed, 300, kProtected);
    CHECK(c.converged);
    for (int b = 0; b < 3; ++b) {
      std::set<int> labels;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (truth[i] == b) labels.insert(c.assignment[i]);
      }
      CHECK(labels.size() == 1);
    }
    std::set<int> used(c.assignment.begin(), c.assignment.end());
    CHECK(used.size() == 3);
  }
}

TEST_CASE("protected column is left out of the clustering space") {
  const auto pts = blobs(10, 1, nullptr);
  const Clustering c = kmeans_fit(pts, 3, 1, 300, kProtected);
  CHECK(c.columns == std::vector<std::size_t>{0, 1});
  CHECK(c.centroids[0].size() == 2);
  CHECK(c.project(pts[0]) == std::vector<double>{pts[0][0], pts[0][1]});
}

TEST_CASE("k equal to the number of points gives zero inertia") {
  std::vector<Instance> pts = {{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.1}, {0.3, 0.8}};
  const Clustering c = kmeans_fit(pts, 4, 7);
  CHECK(c.inertia == 0.0);
  std::set<int> used(c.assignment.begin(), c.assignment.end());
  CHECK(used.size() == 4);
}

TEST_CASE("duplicate points with spare clusters still terminate") {
  std::vector<Instance> pts(6, Instance{0.4, 0.4});
  pts.push_back({0.9, 0.9});
  const Clustering c = kmeans_fit(pts, 3, 2);
  CHECK(c.assignment.size() == pts.size());
  CHECK(c.inertia == doctest::Approx(0.0));
}

TEST_CASE("inertia never increases across iterations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Instance> pts;
    for (int i = 0; i < 200; ++i) pts.push_back({u(rng), u(rng), u(rng)});
    const Clustering c = kmeans_fit(pts, 2 + trial % 4, trial);
    REQUIRE(c.inertia_history.size() >= 1);
    for (std::size_t i = 1; i < c.inertia_history.size(); ++i) {
      CHECK(c.inertia_history[i] <= c.inertia_history[i - 1] + 1e-12);
    }
    CHECK(c.inertia == doctest::Approx(inertia_of(pts, c)).epsilon(1e-12));
  }
}

TEST_CASE("every point sits with its nearest centroid") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> pts;
  for (int i = 0; i < 150; ++i) pts.push_back({u(rng), u(rng)});
  const Clustering c = kmeans_fit(pts, 4, 4);
  REQUIRE(c.converged);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(c.nearest(pts[i]) == c.assignment[i]);
}

TEST_CASE("clusters partition the population") {
  const auto pts = blobs(30, 5, nullptr);
  const Clustering c = kmeans_fit(pts, 3, 5, 300, kProtected);
  std::vector<std::size_t> all;
  for (int k = 0; k < c.k; ++k) {
    const auto m = c.members(k);
    CHECK_FALSE(m.empty());
    all.insert(all.end(), m.begin(), m.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> whole(pts.size());
  for (std::size_t i = 0; i < whole.size(); ++i) whole[i] = i;
  CHECK(all == whole);
}

TEST_CASE("same seed, same clustering") {
  const auto pts = blobs(30, 6, nullptr);
  const Clustering a = kmeans_fit(pts, 3, 9, 300, kProtected);
  const Clustering b = kmeans_fit(pts, 3, 9, 300, kProtected);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
}

TEST_CASE("assignment export and argument errors") {
  std::vector<Instance> pts = {{0.0}, {1.0}, {0.1}};
  const Clustering c = kmeans_fit(pts, 2, 1);
  std::ostringstream out;
  const std::vector<std::size_t> rows = {10, 11, 12};
  write_assignments(out, c, rows);
  CHECK(out.str().rfind("row_index,cluster_id\n10,", 0) == 0);
  CHECK_THROWS_AS(write_assignments(out, c, std::vector<std::size_t>{1}), ShapeError);

  CHECK_THROWS_AS(kmeans_fit(pts, 4, 1), DataError);
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 1), ConfigError);
  std::vector<Instance> ragged = {{0.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(kmeans_fit(ragged, 1, 1), ShapeError);
}
