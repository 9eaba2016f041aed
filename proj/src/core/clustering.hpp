#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "features.hpp"
#include "matrix.hpp"
#include "rng.hpp"

namespace sparft {

inline constexpr std::size_t kDefaultMaxIters = 300;
inline constexpr double kDefaultTol = 1e-6;

struct KMeansParams {
  std::size_t k = 7;
  std::uint64_t seed = 0;
  std::size_t max_iters = kDefaultMaxIters;
  double tol = kDefaultTol;  // on the largest centroid displacement
};

struct ClusterModel {
  std::size_t k = 0;
  Matrix centroids;                     // k x width
  std::vector<std::size_t> assignment;  // per feature row, in [0, k)
  double inertia = 0.0;

  std::uint64_t seed = 0;
  std::size_t max_iters = 0;
  double tol = 0.0;
  std::size_t iterations = 0;
  std::vector<double> inertia_history;  // inertia after every assignment pass
  std::vector<std::string> ids;         // feature row ids, when known

  std::vector<std::size_t> sizes() const;
  // Row indices assigned to cluster c, ascending.
  std::vector<std::size_t> members(std::size_t c) const;
};

// Nearest centroid by Euclidean distance; ties go to the lowest index.
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point);
std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point);

// Sum of squared distances of each row to its assigned centroid.
double compute_inertia(const Matrix& points, const Matrix& centroids,
                       std::span<const std::size_t> assignment);

// D^2-weighted seeding.
Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng);

// Lloyd iterations from the given centroids. An empty cluster takes the point
// farthest from its own centroid (among clusters with more than one member)
// as its new centroid, followed by a full reassignment.
ClusterModel lloyd(const Matrix& points, Matrix centroids, std::size_t max_iters, double tol);

ClusterModel kmeans(const Matrix& points, const KMeansParams& params);
ClusterModel kmeans(const FeatureMatrix& features, const KMeansParams& params);

std::string serialize_cluster_model(const ClusterModel& model);
ClusterModel parse_cluster_model(const std::string& text);
void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace sparft
