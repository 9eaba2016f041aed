#include "clustering.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

void assign_all(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& assignment) {
  for (std::size_t i = 0; i < points.rows(); ++i)
    assignment[i] = nearest_centroid(centroids, points.row(i));
}

// Fills empty clusters until none remain; returns after a final reassignment.
void repair_empty(const Matrix& points, Matrix& centroids, std::vector<std::size_t>& assignment) {
  const std::size_t k = centroids.rows();
  for (;;) {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignment) ++sizes[a];
    auto empty = std::find(sizes.begin(), sizes.end(), std::size_t{0});
    if (empty == sizes.end()) return;

    std::size_t far = points.rows();
    double far_d2 = -1.0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      if (sizes[assignment[i]] < 2) continue;
      const double d2 = squared_distance(points.row(i), centroids.row(assignment[i]));
      if (d2 > far_d2) {
        far_d2 = d2;
        far = i;
      }
    }
    if (far == points.rows() || far_d2 <= 0.0)
      fail(ErrorCode::InvalidArgument, "kmeans: fewer distinct points than clusters");

    const auto e = static_cast<std::size_t>(empty - sizes.begin());
    auto src = points.row(far);
    std::copy(src.begin(), src.end(), centroids.row(e).begin());
    assign_all(points, centroids, assignment);
  }
}

Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k) {
  Matrix sums(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  // Fixed row order keeps the floating-point sums reproducible.
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto dst = sums.row(assignment[i]);
    auto src = points.row(i);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  return sums;
}

}  // namespace

std::vector<std::size_t> ClusterModel::sizes() const {
  std::vector<std::size_t> s(k, 0);
  for (auto a : assignment) ++s[a];
  return s;
}

std::vector<std::size_t> ClusterModel::members(std::size_t c) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == c) out.push_back(i);
  return out;
}

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> point) {
  if (point.size() != centroids.cols())
    fail(ErrorCode::DimensionMismatch, "nearest_centroid: point has dimension " +
                                           std::to_string(point.size()) + ", centroids " +
                                           std::to_string(centroids.cols()));
  require(centroids.rows() > 0, "nearest_centroid: no centroids");
  std::size_t best = 0;
  double best_d2 = squared_distance(point, centroids.row(0));
  for (std::size_t c = 1; c < centroids.rows(); ++c) {
    const double d2 = squared_distance(point, centroids.row(c));
    if (d2 < best_d2) {
      best_d2 = d2;
      best = c;
    }
  }
  return best;
}

std::size_t nearest_centroid(const ClusterModel& model, std::span<const double> point) {
  return nearest_centroid(model.centroids, point);
}

double compute_inertia(const Matrix& points, const Matrix& centroids,
                       std::span<const std::size_t> assignment) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    s += squared_distance(points.row(i), centroids.row(assignment[i]));
  return s;
}

Matrix kmeans_plus_plus(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  require(k >= 1 && k <= n, "kmeans++: k must be in [1, N]");
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);

  auto take = [&](std::size_t c, std::size_t i) {
    auto src = points.row(i);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    chosen[i] = true;
  };

  take(0, static_cast<std::size_t>(rng.index(n)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        cum += d2[i];
        pick = i;
        if (cum > target) break;
      }
    } else {
      // Every point coincides with a chosen centroid.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    take(c, pick);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points.row(i), centroids.row(c)));
  }
  return centroids;
}

ClusterModel lloyd(const Matrix& points, Matrix centroids, std::size_t max_iters, double tol) {
  const std::size_t n = points.rows();
  const std::size_t k = centroids.rows();
  require(k >= 1 && k <= n, "kmeans: k must be in [1, N]");
  require(max_iters >= 1, "kmeans: max_iters must be at least 1");
  require(tol >= 0.0, "kmeans: tol must be nonnegative");
  if (centroids.cols() != points.cols())
    fail(ErrorCode::DimensionMismatch, "kmeans: centroid width does not match features");

  ClusterModel model;
  model.k = k;
  model.max_iters = max_iters;
  model.tol = tol;
  model.assignment.assign(n, 0);

  assign_all(points, centroids, model.assignment);
  repair_empty(points, centroids, model.assignment);
  model.inertia_history.push_back(compute_inertia(points, centroids, model.assignment));

  for (std::size_t iter = 1; iter <= max_iters; ++iter) {
    Matrix next = cluster_means(points, model.assignment, k);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) shift = std::max(shift, distance(next.row(c), centroids.row(c)));
    centroids = std::move(next);
    assign_all(points, centroids, model.assignment);
    repair_empty(points, centroids, model.assignment);
    model.inertia_history.push_back(compute_inertia(points, centroids, model.assignment));
    model.iterations = iter;
    if (shift < tol || shift == 0.0) break;
  }

  model.centroids = std::move(centroids);
  model.inertia = model.inertia_history.back();
  return model;
}

ClusterModel kmeans(const Matrix& points, const KMeansParams& params) {
  require(params.k >= 1, "kmeans: k must be at least 1");
  require(params.k <= points.rows(), "kmeans: k = " + std::to_string(params.k) +
                                         " exceeds the number of points " +
                                         std::to_string(points.rows()));
  Rng rng(params.seed);
  Matrix init = kmeans_plus_plus(points, params.k, rng);
  ClusterModel model = lloyd(points, std::move(init), params.max_iters, params.tol);
  model.seed = params.seed;
  return model;
}

ClusterModel kmeans(const FeatureMatrix& features, const KMeansParams& params) {
  ClusterModel model = kmeans(features.rows, params);
  model.ids = features.ids;
  return model;
}

std::string serialize_cluster_model(const ClusterModel& model) {
  json j;
  j["format"] = "sparft.clusters";
  j["version"] = kFormatVersion;
  j["k"] = model.k;
  j["seed"] = model.seed;
  j["max_iters"] = model.max_iters;
  j["tol"] = model.tol;
  j["iterations"] = model.iterations;
  j["inertia"] = model.inertia;
  j["inertia_history"] = model.inertia_history;
  json centroids = json::array();
  for (std::size_t c = 0; c < model.centroids.rows(); ++c) {
    auto r = model.centroids.row(c);
    centroids.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["centroids"] = std::move(centroids);
  j["assignment"] = model.assignment;
  j["ids"] = model.ids;
  return j.dump() + "\n";
}

ClusterModel parse_cluster_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::CorruptArtifact, std::string("cluster artifact: ") + e.what());
  }
  try {
    if (j.at("format") != "sparft.clusters") fail(ErrorCode::CorruptArtifact, "not a cluster artifact");
    if (j.at("version") != kFormatVersion)
      fail(ErrorCode::VersionMismatch, "unsupported cluster artifact version");
    ClusterModel m;
    m.k = j.at("k").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.max_iters = j.at("max_iters").get<std::size_t>();
    m.tol = j.at("tol").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.inertia = j.at("inertia").get<double>();
    m.inertia_history = j.at("inertia_history").get<std::vector<double>>();
    m.centroids = Matrix::from_rows(j.at("centroids").get<std::vector<std::vector<double>>>());
    m.assignment = j.at("assignment").get<std::vector<std::size_t>>();
    m.ids = j.at("ids").get<std::vector<std::string>>();
    if (m.centroids.rows() != m.k) fail(ErrorCode::CorruptArtifact, "centroid count does not match k");
    for (auto a : m.assignment)
      if (a >= m.k) fail(ErrorCode::CorruptArtifact, "assignment index out of range");
    if (!m.ids.empty() && m.ids.size() != m.assignment.size())
      fail(ErrorCode::CorruptArtifact, "ids do not align with assignment");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArtifact, std::string("cluster artifact: ") + e.what());
  }
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_cluster_model(model));
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  return parse_cluster_model(read_file(path));
}

}  // namespace sparft
