#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "matrix.hpp"

namespace sparft {

inline constexpr std::size_t kDefaultPcaComponents = 50;

struct PcaModel {
  std::vector<double> mean;                 // length D
  Matrix components;                        // p x D, orthonormal rows
  std::vector<double> explained_variance;   // length p, nonincreasing
  double total_variance = 0.0;              // trace of the covariance

  std::size_t dim() const noexcept { return mean.size(); }
  std::size_t rank() const noexcept { return components.rows(); }
};

// Population covariance eigendecomposition of the embeddings. Each component
// is oriented so that its largest-magnitude coordinate is positive.
PcaModel fit_pca(const Corpus& corpus, std::size_t p);
PcaModel fit_pca(const Matrix& data, std::size_t p);

Matrix transform_pca(const PcaModel& model, const Corpus& corpus);
Matrix transform_pca(const PcaModel& model, const Matrix& data);

// Per-column zero-mean / unit-variance map with population std.
// Degenerate columns (no spread) map to zero.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;
  std::vector<bool> degenerate;

  std::vector<double> apply(std::span<const double> row) const;
};

struct FeatureMatrix {
  std::vector<std::string> ids;
  std::size_t pca_components = 0;  // columns [0, p) are semantic, column p is difficulty
  std::vector<bool> degenerate;    // length p + 1
  std::vector<double> difficulty;  // raw difficulty per row, for reporting
  Matrix rows;                     // N x (p + 1)

  std::size_t size() const noexcept { return rows.rows(); }
  std::size_t width() const noexcept { return rows.cols(); }
};

struct FusedFeatures {
  Standardizer standardizer;
  FeatureMatrix features;
};

// Standardizes the reduced embedding and the difficulty score independently
// and concatenates them: row i = standardized(reduced_i) ++ standardized(d_i).
FusedFeatures fuse_features(const Matrix& reduced, std::span<const double> difficulties);

// fit_pca + transform_pca + fuse_features over an annotated corpus.
FeatureMatrix featurize(const Corpus& corpus, std::size_t p);

std::string serialize_features(const FeatureMatrix& fm);
FeatureMatrix parse_features(const std::string& text);
void save_features(const FeatureMatrix& fm, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace sparft
