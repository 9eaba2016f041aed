#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "clustering.hpp"
#include "features.hpp"

namespace sparft {

inline constexpr std::size_t kDefaultPerCluster = 10;

enum class SelectionStrategy { Diverse, Random, Closest };

std::string_view to_string(SelectionStrategy s);
SelectionStrategy parse_strategy(std::string_view name);

struct CentroidDistance {
  std::size_t index;  // feature row
  double distance;
};

// Members of cluster c with their distance to its centroid, ascending by
// distance, ties broken by lower row index.
std::vector<CentroidDistance> centroid_distances(const FeatureMatrix& features,
                                                 const ClusterModel& model, std::size_t c);

// Row indices in selection order.
std::vector<std::size_t> select_diverse(const FeatureMatrix& features, const ClusterModel& model,
                                        std::size_t c, std::size_t l);
std::vector<std::size_t> select_random(const FeatureMatrix& features, const ClusterModel& model,
                                       std::size_t c, std::size_t l, std::uint64_t seed);
std::vector<std::size_t> select_closest(const FeatureMatrix& features, const ClusterModel& model,
                                        std::size_t c, std::size_t l);

struct ReducedSet {
  SelectionStrategy strategy = SelectionStrategy::Diverse;
  std::size_t per_cluster = kDefaultPerCluster;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::string>> clusters;  // selection order preserved
  std::vector<double> mean_difficulty;             // per cluster over the selection; may be empty

  std::size_t cluster_count() const noexcept { return clusters.size(); }
  std::size_t total() const noexcept;
};

ReducedSet reduce(const FeatureMatrix& features, const ClusterModel& model,
                  SelectionStrategy strategy, std::size_t l, std::uint64_t seed);

// Synthetic manifest with ids "c<k>_<i>", used by simulations without a corpus.
ReducedSet synthetic_reduced_set(std::size_t clusters, std::size_t per_cluster);

std::string serialize_reduced_set(const ReducedSet& set);
ReducedSet parse_reduced_set(const std::string& text);
void save_reduced_set(const ReducedSet& set, const std::filesystem::path& path);
ReducedSet load_reduced_set(const std::filesystem::path& path);

}  // namespace sparft
