#include "reduction.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace sparft {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void check_inputs(const FeatureMatrix& features, const ClusterModel& model, std::size_t c) {
  require(c < model.k, "cluster index " + std::to_string(c) + " out of range");
  if (model.assignment.size() != features.size())
    fail(ErrorCode::DimensionMismatch, "cluster model and features have different row counts");
  if (model.centroids.cols() != features.width())
    fail(ErrorCode::DimensionMismatch, "cluster model and features have different widths");
}

}  // namespace

std::string_view to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::Diverse: return "diverse";
    case SelectionStrategy::Random: return "random";
    case SelectionStrategy::Closest: return "closest";
  }
  return "diverse";
}

SelectionStrategy parse_strategy(std::string_view name) {
  if (name == "diverse") return SelectionStrategy::Diverse;
  if (name == "random") return SelectionStrategy::Random;
  if (name == "closest") return SelectionStrategy::Closest;
  fail(ErrorCode::InvalidArgument,
       "unknown selection strategy '" + std::string(name) + "' (expected diverse, random or closest)");
}

std::vector<CentroidDistance> centroid_distances(const FeatureMatrix& features,
                                                 const ClusterModel& model, std::size_t c) {
  check_inputs(features, model, c);
  std::vector<CentroidDistance> out;
  for (std::size_t i : model.members(c))
    out.push_back({i, distance(features.rows.row(i), model.centroids.row(c))});
  if (out.empty()) fail(ErrorCode::Internal, "cluster " + std::to_string(c) + " is empty");
  std::stable_sort(out.begin(), out.end(),
                   [](const CentroidDistance& a, const CentroidDistance& b) { return a.distance < b.distance; });
  return out;
}

std::vector<std::size_t> select_diverse(const FeatureMatrix& features, const ClusterModel& model,
                                        std::size_t c, std::size_t l) {
  require(l >= 1, "select_diverse: l must be at least 1");
  const auto ranked = centroid_distances(features, model, c);
  std::vector<std::size_t> members = model.members(c);  // ascending row index
  const std::size_t take = std::min(l, members.size());

  std::vector<std::size_t> picked{ranked.front().index};
  std::vector<bool> used(members.size(), false);
  std::vector<double> min_dist(members.size());
  for (std::size_t m = 0; m < members.size(); ++m) {
    used[m] = members[m] == picked.front();
    min_dist[m] = distance(features.rows.row(members[m]), features.rows.row(picked.front()));
  }

  while (picked.size() < take) {
    std::size_t best = members.size();
    for (std::size_t m = 0; m < members.size(); ++m) {
      if (used[m]) continue;
      if (best == members.size() || min_dist[m] > min_dist[best]) best = m;
    }
    used[best] = true;
    picked.push_back(members[best]);
    auto chosen = features.rows.row(members[best]);
    for (std::size_t m = 0; m < members.size(); ++m)
      if (!used[m]) min_dist[m] = std::min(min_dist[m], distance(features.rows.row(members[m]), chosen));
  }
  return picked;
}

std::vector<std::size_t> select_random(const FeatureMatrix& features, const ClusterModel& model,
                                       std::size_t c, std::size_t l, std::uint64_t seed) {
  require(l >= 1, "select_random: l must be at least 1");
  check_inputs(features, model, c);
  std::vector<std::size_t> members = model.members(c);
  const std::size_t take = std::min(l, members.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.index(members.size() - i));
    std::swap(members[i], members[j]);
  }
  members.resize(take);
  return members;
}

std::vector<std::size_t> select_closest(const FeatureMatrix& features, const ClusterModel& model,
                                        std::size_t c, std::size_t l) {
  require(l >= 1, "select_closest: l must be at least 1");
  const auto ranked = centroid_distances(features, model, c);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(l, ranked.size()); ++i) out.push_back(ranked[i].index);
  return out;
}

std::size_t ReducedSet::total() const noexcept {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.size();
  return n;
}

ReducedSet reduce(const FeatureMatrix& features, const ClusterModel& model,
                  SelectionStrategy strategy, std::size_t l, std::uint64_t seed) {
  require(l >= 1, "reduce: examples per cluster must be at least 1");
  if (!model.ids.empty() && model.ids != features.ids)
    fail(ErrorCode::InvalidArgument, "cluster model was fit on a different feature matrix");

  ReducedSet out;
  out.strategy = strategy;
  out.per_cluster = l;
  out.seed = seed;
  const bool has_difficulty = features.difficulty.size() == features.size();
  for (std::size_t c = 0; c < model.k; ++c) {
    std::vector<std::size_t> rows;
    switch (strategy) {
      case SelectionStrategy::Diverse: rows = select_diverse(features, model, c, l); break;
      case SelectionStrategy::Random: rows = select_random(features, model, c, l, derive_seed(seed, c)); break;
      case SelectionStrategy::Closest: rows = select_closest(features, model, c, l); break;
    }
    std::vector<std::string> ids;
    double dsum = 0.0;
    for (std::size_t r : rows) {
      ids.push_back(features.ids.at(r));
      if (has_difficulty) dsum += features.difficulty[r];
    }
    if (has_difficulty) out.mean_difficulty.push_back(dsum / static_cast<double>(rows.size()));
    out.clusters.push_back(std::move(ids));
  }
  return out;
}

ReducedSet synthetic_reduced_set(std::size_t clusters, std::size_t per_cluster) {
  require(clusters >= 1 && per_cluster >= 1, "synthetic manifest needs at least one id per cluster");
  ReducedSet out;
  out.per_cluster = per_cluster;
  for (std::size_t c = 0; c < clusters; ++c) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < per_cluster; ++i)
      ids.push_back("c" + std::to_string(c) + "_" + std::to_string(i));
    out.clusters.push_back(std::move(ids));
  }
  return out;
}

std::string serialize_reduced_set(const ReducedSet& set) {
  json j;
  j["format"] = "sparft.reduced";
  j["version"] = kFormatVersion;
  j["strategy"] = std::string(to_string(set.strategy));
  j["l"] = set.per_cluster;
  j["seed"] = set.seed;
  j["k"] = set.cluster_count();
  j["clusters"] = set.clusters;
  if (!set.mean_difficulty.empty()) j["mean_difficulty"] = set.mean_difficulty;
  return j.dump() + "\n";
}

ReducedSet parse_reduced_set(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::CorruptArtifact, std::string("manifest: ") + e.what());
  }
  try {
    if (j.at("format") != "sparft.reduced") fail(ErrorCode::CorruptArtifact, "not a reduced-set manifest");
    if (j.at("version") != kFormatVersion) fail(ErrorCode::VersionMismatch, "unsupported manifest version");
    ReducedSet s;
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.per_cluster = j.at("l").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.clusters = j.at("clusters").get<std::vector<std::vector<std::string>>>();
    if (j.contains("mean_difficulty")) s.mean_difficulty = j["mean_difficulty"].get<std::vector<double>>();
    if (j.at("k").get<std::size_t>() != s.clusters.size())
      fail(ErrorCode::CorruptArtifact, "manifest k does not match its cluster lists");
    if (!s.mean_difficulty.empty() && s.mean_difficulty.size() != s.clusters.size())
      fail(ErrorCode::CorruptArtifact, "manifest mean_difficulty has the wrong length");
    std::set<std::string> seen;
    for (const auto& c : s.clusters)
      for (const auto& id : c)
        if (!seen.insert(id).second) fail(ErrorCode::CorruptArtifact, "manifest repeats id '" + id + "'");
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArtifact, std::string("manifest: ") + e.what());
  }
}

void save_reduced_set(const ReducedSet& set, const std::filesystem::path& path) {
  write_file(path, serialize_reduced_set(set));
}

ReducedSet load_reduced_set(const std::filesystem::path& path) {
  return parse_reduced_set(read_file(path));
}

}  // namespace sparft
