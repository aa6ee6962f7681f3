#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "faircf/tabular.hpp"

namespace faircf {

struct Clustering {
  int k = 0;
  // Centroids live in the clustering space: the input columns minus the
  // excluded ones, in their original order.
  std::vector<std::vector<double>> centroids;
  std::vector<std::size_t> columns;
  std::vector<int> assignment;
  double inertia = 0.0;
  // Inertia after every assignment step, starting with the k-means++ seeding.
  std::vector<double> inertia_history;
  int iterations = 0;
  bool converged = false;

  std::vector<std::size_t> members(int cluster) const;
  std::vector<double> project(std::span<const double> x) const;
  int nearest(std::span<const double> x) const;
};

// k-means++ seeding, then Lloyd iterations until the assignment stops
// changing or `max_iter` is reached. Columns in `excluded` (protected
// attribute, typically) are ignored. An empty cluster is re-seeded at the
// point farthest from its current centroid.
Clustering kmeans_fit(std::span<const Instance> points, int k, std::uint64_t seed, int max_iter = 300,
                      std::span<const std::size_t> excluded = {});

// CSV export: row_index,cluster_id
void write_assignments(std::ostream& out, const Clustering& c, std::span<const std::size_t> row_indices);

}  // namespace faircf
