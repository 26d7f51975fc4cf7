#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hypermine {

struct KMeansResult {
  /// Cluster index in [0, K) per input vector.
  std::vector<std::uint32_t> assignment;
  /// Row-major K x d centroids.
  std::vector<double> centroids;
  /// Sum of squared distances after each assignment step.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t non_empty_clusters() const;
};

/// Lloyd's algorithm with k-means++ seeding. `vectors` is row-major n x dim.
/// An empty cluster is re-seeded at the point farthest from its centroid.
KMeansResult kmeans(std::span<const double> vectors, std::size_t dim, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters);

/// Sum of squared Euclidean distances of each vector to its centroid.
double kmeans_objective(std::span<const double> vectors, std::size_t dim,
                        std::span<const double> centroids,
                        std::span<const std::uint32_t> assignment);

}  // namespace hypermine
