#include "faircf/cluster.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <random>

#include "faircf/errors.hpp"

namespace faircf {

namespace {

using Point = std::vector<double>;

double sq_dist(const Point& a, const Point& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d += (a[j] - b[j]) * (a[j] - b[j]);
  return d;
}

struct Nearest {
  int cluster = 0;
  double dist = 0.0;
};

Nearest nearest_of(const Point& p, const std::vector<Point>& centroids) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best.dist) best = {static_cast<int>(c), d};
  }
  return best;
}

// Assigns every point, returns inertia and whether anything moved.
std::pair<double, bool> assign(const std::vector<Point>& pts, const std::vector<Point>& centroids,
                               std::vector<int>& assignment, std::vector<double>& dist) {
  double inertia = 0.0;
  bool changed = false;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Nearest n = nearest_of(pts[i], centroids);
    if (n.cluster != assignment[i]) changed = true;
    assignment[i] = n.cluster;
    dist[i] = n.dist;
    inertia += n.dist;
  }
  return {inertia, changed};
}

}  // namespace

std::vector<std::size_t> Clustering::members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == cluster) out.push_back(i);
  }
  return out;
}

std::vector<double> Clustering::project(std::span<const double> x) const {
  std::vector<double> p;
  p.reserve(columns.size());
  for (std::size_t j : columns) p.push_back(x[j]);
  return p;
}

int Clustering::nearest(std::span<const double> x) const { return nearest_of(project(x), centroids).cluster; }

Clustering kmeans_fit(std::span<const Instance> points, int k, std::uint64_t seed, int max_iter,
                      std::span<const std::size_t> excluded) {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (points.size() < static_cast<std::size_t>(k)) {
    throw DataError("k-means needs at least k = " + std::to_string(k) + " points, got " +
                    std::to_string(points.size()));
  }
  Clustering out;
  out.k = k;
  const std::size_t dims = points.front().size();
  for (std::size_t j = 0; j < dims; ++j) {
    if (std::find(excluded.begin(), excluded.end(), j) == excluded.end()) out.columns.push_back(j);
  }
  std::vector<Point> pts;
  pts.reserve(points.size());
  for (const auto& p : points) {
    if (p.size() != dims) throw ShapeError("k-means points differ in dimension");
    pts.push_back(out.project(p));
  }

  // k-means++ seeding
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> first(0, pts.size() - 1);
  std::vector<Point> centroids{pts[first(rng)]};
  std::vector<double> dist(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = sq_dist(pts[i], centroids[0]);
  while (centroids.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      chosen = pts.size() - 1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        target -= dist[i];
        if (target < 0.0 && dist[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      // Every point coincides with a centroid: take any not yet chosen index.
      chosen = centroids.size() % pts.size();
    }
    centroids.push_back(pts[chosen]);
    for (std::size_t i = 0; i < pts.size(); ++i) dist[i] = std::min(dist[i], sq_dist(pts[i], centroids.back()));
  }

  std::vector<int> assignment(pts.size(), -1);
  auto [inertia, changed] = assign(pts, centroids, assignment, dist);
  out.inertia_history.push_back(inertia);

  const std::size_t cdims = out.columns.size();
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    // Update step.
    std::vector<Point> sums(static_cast<std::size_t>(k), Point(cdims, 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto c = static_cast<std::size_t>(assignment[i]);
      ++counts[c];
      for (std::size_t j = 0; j < cdims; ++j) sums[c][j] += pts[i][j];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (counts[c] == 0) {
        // Re-seed at the point farthest from its own centroid.
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        centroids[c] = pts[far];
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < cdims; ++j) centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
    }
    // Assignment step.
    auto [next_inertia, moved] = assign(pts, centroids, assignment, dist);
    out.inertia_history.push_back(next_inertia);
    inertia = next_inertia;
    if (!moved) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }
  out.centroids = std::move(centroids);
  out.assignment = std::move(assignment);
  out.inertia = inertia;
  return out;
}

void write_assignments(std::ostream& out, const Clustering& c, std::span<const std::size_t> row_indices) {
  if (row_indices.size() != c.assignment.size()) throw ShapeError("row index count does not match assignment");
  out << "row_index,cluster_id\n";
  for (std::size_t i = 0; i < row_indices.size(); ++i) out << row_indices[i] << ',' << c.assignment[i] << '\n';
}

}  // namespace faircf
