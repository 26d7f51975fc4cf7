#include "hypermine/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hypermine/error.hpp"
#include "hypermine/util.hpp"

namespace hypermine {
namespace {

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double sum = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    double diff = a[j] - b[j];
    sum += diff * diff;
  }
  return sum;
}

std::vector<double> seed_centroids(std::span<const double> vectors, std::size_t n, std::size_t dim,
                                   std::size_t k, Rng& rng) {
  std::vector<double> centroids(k * dim);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t first = uniform_index(rng, n);
  std::copy_n(vectors.data() + first * dim, dim, centroids.begin());
  for (std::size_t c = 1; c < k; ++c) {
    const double* prev = centroids.data() + (c - 1) * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squared_distance(vectors.data() + i * dim, prev, dim));
      total += nearest[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform_unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += nearest[i];
        if (acc > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    std::copy_n(vectors.data() + pick * dim, dim, centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  }
  return centroids;
}

}  // namespace

std::size_t KMeansResult::non_empty_clusters() const {
  std::vector<bool> used(centroids.size(), false);
  std::size_t count = 0;
  for (auto a : assignment) {
    if (!used[a]) {
      used[a] = true;
      ++count;
    }
  }
  return count;
}

double kmeans_objective(std::span<const double> vectors, std::size_t dim,
                        std::span<const double> centroids,
                        std::span<const std::uint32_t> assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    total += squared_distance(vectors.data() + i * dim, centroids.data() + assignment[i] * dim, dim);
  }
  return total;
}

KMeansResult kmeans(std::span<const double> vectors, std::size_t dim, std::size_t k,
                    std::uint64_t seed, std::size_t max_iters) {
  if (dim == 0) throw ValidationError("kmeans: dimension must be positive");
  if (vectors.size() % dim != 0) throw ValidationError("kmeans: ragged input");
  const std::size_t n = vectors.size() / dim;
  if (k == 0) throw ValidationError("kmeans: K must be positive");
  if (k > n) {
    throw ValidationError("kmeans: K=" + std::to_string(k) + " exceeds the number of vectors (" +
                          std::to_string(n) + ")");
  }
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (!std::isfinite(vectors[i])) {
      throw ValidationError("kmeans: non-finite value in vector " + std::to_string(i / dim));
    }
  }
  if (max_iters == 0) throw ValidationError("kmeans: max_iters must be positive");

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_centroids(vectors, n, dim, k, rng);
  result.assignment.assign(n, 0);
  std::vector<double> distance(n, 0.0);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* point = vectors.data() + i * dim;
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double d = squared_distance(point, result.centroids.data() + c * dim, dim);
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      if (iter == 0 || best != result.assignment[i]) changed = true;
      result.assignment[i] = best;
      distance[i] = best_d;
      objective += best_d;
    }
    result.objective_trace.push_back(objective);
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }

    // Update step.
    std::vector<double> sums(k * dim, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* point = vectors.data() + i * dim;
      double* sum = sums.data() + result.assignment[i] * dim;
      for (std::size_t j = 0; j < dim; ++j) sum[j] += point[j];
      ++counts[result.assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        result.centroids[c * dim + j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      distance[i] = squared_distance(vectors.data() + i * dim,
                                     result.centroids.data() + result.assignment[i] * dim, dim);
    }
    // Re-seed empty clusters at the farthest points, one point per cluster.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (distance[i] > far_d) {
          far_d = distance[i];
          far = i;
        }
      }
      if (far == n) break;  // every point sits on its centroid
      std::copy_n(vectors.data() + far * dim, dim,
                  result.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
      distance[far] = 0.0;
    }
  }
  return result;
}

}  // namespace hypermine
