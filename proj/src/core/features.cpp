#include "features.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "error.hpp"

namespace sparft {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;
// A column whose std is below this fraction of its reference scale is treated
// as having no spread.
constexpr double kDegenerateRelTol = 1e-10;

Matrix corpus_matrix(const Corpus& corpus) {
  Matrix m(corpus.size(), corpus.dim());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    std::copy(corpus[i].embedding.begin(), corpus[i].embedding.end(), m.row(i).begin());
  return m;
}

struct ColumnStats {
  double mean = 0.0;
  double std = 0.0;
  bool constant = true;
};

ColumnStats column_stats(const Matrix& m, std::size_t c) {
  ColumnStats s;
  const std::size_t n = m.rows();
  for (std::size_t r = 0; r < n; ++r) {
    s.mean += m(r, c);
    if (m(r, c) != m(0, c)) s.constant = false;
  }
  s.mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double d = m(r, c) - s.mean;
    ss += d * d;
  }
  s.std = std::sqrt(ss / static_cast<double>(n));
  return s;
}

}  // namespace

PcaModel fit_pca(const Corpus& corpus, std::size_t p) {
  require(!corpus.empty(), "fit_pca: corpus is empty");
  return fit_pca(corpus_matrix(corpus), p);
}

PcaModel fit_pca(const Matrix& data, std::size_t p) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  require(n > 0 && d > 0, "fit_pca: empty data");
  require(p >= 1 && p <= std::min(n, d),
          "fit_pca: component count " + std::to_string(p) + " outside [1, " +
              std::to_string(std::min(n, d)) + "]");

  bool identical = true;
  for (std::size_t i = 1; i < n && identical; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (data(i, j) != data(0, j)) {
        identical = false;
        break;
      }
  if (identical) fail(ErrorCode::DegenerateVariance, "fit_pca: all embeddings are identical");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(data.data().data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) fail(ErrorCode::Internal, "fit_pca: eigendecomposition failed");

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.total_variance = cov.trace();
  if (!(model.total_variance > 0.0))
    fail(ErrorCode::DegenerateVariance, "fit_pca: embeddings have zero variance");

  model.components = Matrix(p, d);
  model.explained_variance.resize(p);
  // Eigen returns eigenvalues in increasing order.
  for (std::size_t k = 0; k < p; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - k);
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < v.size(); ++j)
      if (std::abs(v[j]) > std::abs(v[pivot])) pivot = j;
    if (v[pivot] < 0.0) v = -v;
    for (std::size_t j = 0; j < d; ++j) model.components(k, j) = v[static_cast<Eigen::Index>(j)];
    model.explained_variance[k] = std::max(0.0, eig.eigenvalues()[col]);
  }
  return model;
}

Matrix transform_pca(const PcaModel& model, const Corpus& corpus) {
  if (corpus.dim() != model.dim() && !corpus.empty())
    fail(ErrorCode::DimensionMismatch, "transform_pca: corpus dimension " +
                                           std::to_string(corpus.dim()) + " vs model " +
                                           std::to_string(model.dim()));
  return transform_pca(model, corpus_matrix(corpus));
}

Matrix transform_pca(const PcaModel& model, const Matrix& data) {
  if (data.cols() != model.dim() && data.rows() > 0)
    fail(ErrorCode::DimensionMismatch, "transform_pca: dimension mismatch");
  const std::size_t p = model.rank();
  Matrix out(data.rows(), p);
  std::vector<double> centered(model.dim());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    auto row = data.row(i);
    for (std::size_t j = 0; j < centered.size(); ++j) centered[j] = row[j] - model.mean[j];
    for (std::size_t k = 0; k < p; ++k) {
      auto comp = model.components.row(k);
      double s = 0.0;
      for (std::size_t j = 0; j < centered.size(); ++j) s += comp[j] * centered[j];
      out(i, k) = s;
    }
  }
  return out;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  require(row.size() == means.size(), "Standardizer::apply: width mismatch");
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j)
    out[j] = degenerate[j] ? 0.0 : (row[j] - means[j]) / stds[j];
  return out;
}

FusedFeatures fuse_features(const Matrix& reduced, std::span<const double> difficulties) {
  const std::size_t n = reduced.rows();
  const std::size_t p = reduced.cols();
  require(n >= 2, "fuse_features: at least two rows are required to standardize");
  if (difficulties.size() != n)
    fail(ErrorCode::DimensionMismatch, "fuse_features: difficulty count does not match rows");

  Matrix joined(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto src = reduced.row(i);
    std::copy(src.begin(), src.end(), joined.row(i).begin());
    joined(i, p) = difficulties[i];
  }

  std::vector<ColumnStats> stats(p + 1);
  for (std::size_t c = 0; c <= p; ++c) stats[c] = column_stats(joined, c);

  // Semantic columns share units, so their spread is judged against the
  // widest of them; the difficulty column is judged against its own scale.
  double semantic_scale = 0.0;
  for (std::size_t c = 0; c < p; ++c) semantic_scale = std::max(semantic_scale, stats[c].std);
  const double difficulty_scale = std::max(std::abs(stats[p].mean), stats[p].std);

  FusedFeatures out;
  Standardizer& st = out.standardizer;
  st.means.resize(p + 1);
  st.stds.resize(p + 1);
  st.degenerate.resize(p + 1);
  for (std::size_t c = 0; c <= p; ++c) {
    const double scale = c < p ? semantic_scale : difficulty_scale;
    st.means[c] = stats[c].mean;
    st.stds[c] = stats[c].std;
    st.degenerate[c] = stats[c].constant || stats[c].std <= kDegenerateRelTol * scale;
  }

  FeatureMatrix& fm = out.features;
  fm.pca_components = p;
  fm.degenerate = st.degenerate;
  fm.difficulty.assign(difficulties.begin(), difficulties.end());
  fm.rows = Matrix(n, p + 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto z = st.apply(joined.row(i));
    std::copy(z.begin(), z.end(), fm.rows.row(i).begin());
  }
  return out;
}

FeatureMatrix featurize(const Corpus& corpus, std::size_t p) {
  require(!corpus.empty(), "featurize: corpus is empty");
  const PcaModel pca = fit_pca(corpus, p);
  const Matrix reduced = transform_pca(pca, corpus);
  const std::vector<double> d = corpus.difficulties();
  FeatureMatrix fm = fuse_features(reduced, d).features;
  fm.ids.reserve(corpus.size());
  for (const auto& ex : corpus.examples()) fm.ids.push_back(ex.id);
  return fm;
}

std::string serialize_features(const FeatureMatrix& fm) {
  json j;
  j["format"] = "sparft.features";
  j["version"] = kFormatVersion;
  j["p"] = fm.pca_components;
  j["ids"] = fm.ids;
  j["degenerate"] = fm.degenerate;
  j["difficulty"] = fm.difficulty;
  json rows = json::array();
  for (std::size_t i = 0; i < fm.size(); ++i) {
    auto r = fm.rows.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["rows"] = std::move(rows);
  return j.dump() + "\n";
}

FeatureMatrix parse_features(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::CorruptArtifact, std::string("feature artifact: ") + e.what());
  }
  try {
    if (j.at("format") != "sparft.features")
      fail(ErrorCode::CorruptArtifact, "not a feature artifact");
    if (j.at("version") != kFormatVersion)
      fail(ErrorCode::VersionMismatch, "unsupported feature artifact version");
    FeatureMatrix fm;
    fm.pca_components = j.at("p").get<std::size_t>();
    fm.ids = j.at("ids").get<std::vector<std::string>>();
    fm.degenerate = j.at("degenerate").get<std::vector<bool>>();
    fm.difficulty = j.at("difficulty").get<std::vector<double>>();
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    const std::size_t width = fm.pca_components + 1;
    if (rows.size() != fm.ids.size() || fm.degenerate.size() != width ||
        fm.difficulty.size() != fm.ids.size())
      fail(ErrorCode::CorruptArtifact, "feature artifact has inconsistent sizes");
    for (const auto& r : rows)
      if (r.size() != width) fail(ErrorCode::CorruptArtifact, "feature row has wrong width");
    fm.rows = rows.empty() ? Matrix(0, width) : Matrix::from_rows(rows);
    return fm;
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptArtifact, std::string("feature artifact: ") + e.what());
  }
}

void save_features(const FeatureMatrix& fm, const std::filesystem::path& path) {
  write_file(path, serialize_features(fm));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  return parse_features(read_file(path));
}

}  // namespace sparft
