#pragma once

// Independent reference implementations used by the tests. Nothing here
// calls into the library: matrices are plain nested vectors and randomness
// comes from std::mt19937_64 with standard distributions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline Rows random_rows(std::mt19937_64& gen, std::size_t n, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  Rows out(n, std::vector<double>(d));
  for (auto& r : out)
    for (auto& x : r) x = dist(gen);
  return out;
}

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) { return std::sqrt(sq_dist(a, b)); }

inline std::vector<double> column_means(const Rows& x) {
  std::vector<double> m(x.front().size(), 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < r.size(); ++j) m[j] += r[j];
  for (auto& v : m) v /= static_cast<double>(x.size());
  return m;
}

inline std::vector<double> column_stds(const Rows& x) {
  const auto m = column_means(x);
  std::vector<double> s(m.size(), 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < r.size(); ++j) s[j] += (r[j] - m[j]) * (r[j] - m[j]);
  for (auto& v : s) v = std::sqrt(v / static_cast<double>(x.size()));
  return s;
}

// Population covariance, two-pass.
inline Rows covariance(const Rows& x) {
  const auto m = column_means(x);
  const std::size_t d = m.size();
  Rows c(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (r[i] - m[i]) * (r[j] - m[j]);
  for (auto& row : c)
    for (auto& v : row) v /= static_cast<double>(x.size());
  return c;
}

struct Eigen {
  std::vector<double> values;  // descending
  Rows vectors;                // vectors[i] pairs with values[i]
};

// Cyclic Jacobi rotations on a symmetric matrix.
inline Eigen jacobi(Rows a) {
  const std::size_t n = a.size();
  Rows v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  Eigen e;
  for (auto i : order) {
    e.values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    e.vectors.push_back(col);
  }
  return e;
}

// Greedy farthest-point selection recomputing every minimum distance from
// scratch: start at the member closest to the centroid, then repeatedly take
// the member whose nearest selected point is farthest. Ties go to the member
// listed first; members must be in ascending index order.
inline std::vector<std::size_t> greedy_fps(const Rows& points, const std::vector<std::size_t>& members,
                                           const std::vector<double>& centroid, std::size_t l) {
  std::vector<std::size_t> picked;
  if (members.empty()) return picked;
  std::size_t first = members[0];
  for (auto i : members)
    if (dist(points[i], centroid) < dist(points[first], centroid)) first = i;
  picked.push_back(first);
  while (picked.size() < std::min(l, members.size())) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (auto i : members) {
      if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
      double md = std::numeric_limits<double>::infinity();
      for (auto j : picked) md = std::min(md, dist(points[i], points[j]));
      if (md > best_d) {
        best_d = md;
        best = i;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

inline double min_pairwise(const Rows& points, const std::vector<std::size_t>& set) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < set.size(); ++a)
    for (std::size_t b = a + 1; b < set.size(); ++b) m = std::min(m, dist(points[set[a]], points[set[b]]));
  return m;
}

inline double harmonic(std::uint64_t n) {
  double s = 0.0;
  for (std::uint64_t i = n; i >= 1; --i) s += 1.0 / static_cast<double>(i);
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("sparft_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
