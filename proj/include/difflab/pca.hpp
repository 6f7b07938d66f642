#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "difflab/corpus.hpp"
#include "difflab/io.hpp"
#include "difflab/rng.hpp"

namespace difflab {

// Per-class Gaussian model: class mean plus the top principal directions of
// the population covariance. Together the class models form the easily
// sampled approximate image distribution.
struct PcaClassModel {
  int class_id = 0;
  Eigen::VectorXd mean;          // d
  Eigen::MatrixXd components;    // d x k_max, orthonormal columns
  Eigen::VectorXd eigenvalues;   // k_max, descending, each >= 0 (variance units)

  long d() const { return mean.size(); }
  int k_max() const { return static_cast<int>(eigenvalues.size()); }

  void check_k(int k) const {
    if (k < 0 || k > k_max())
      throw std::invalid_argument("K = " + std::to_string(k) + " outside [0, " +
                                  std::to_string(k_max()) + "]");
  }
};

struct PcaMixture {
  std::vector<PcaClassModel> classes;

  long d() const { return classes.empty() ? 0 : classes.front().d(); }
  int k_max() const { return classes.empty() ? 0 : classes.front().k_max(); }

  const PcaClassModel& for_class(int class_id) const {
    for (const auto& m : classes)
      if (m.class_id == class_id) return m;
    throw std::runtime_error("no PCA model for class " + std::to_string(class_id));
  }
  bool has_class(int class_id) const {
    for (const auto& m : classes)
      if (m.class_id == class_id) return true;
    return false;
  }
};

namespace detail {

// Fill columns [filled, k) with canonical basis vectors orthogonalized
// against everything already in place. Used when the data rank is below
// k and eigenvectors for the zero directions are arbitrary.
inline void complete_orthonormal(Eigen::MatrixXd& P, int filled) {
  const long d = P.rows();
  const int k = static_cast<int>(P.cols());
  long next_axis = 0;
  for (int j = filled; j < k; ++j) {
    while (true) {
      if (next_axis >= d) throw std::runtime_error("failed to complete orthonormal basis");
      Eigen::VectorXd v = Eigen::VectorXd::Unit(d, next_axis++);
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i < j; ++i) v -= P.col(i).dot(v) * P.col(i);
      const double norm = v.norm();
      if (norm > 0.5) {
        P.col(j) = v / norm;
        break;
      }
    }
  }
}

// One sweep of modified Gram-Schmidt over the first `cols` columns to keep
// cross terms at rounding level.
inline void reorthonormalize(Eigen::MatrixXd& P, int cols) {
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < j; ++i) P.col(j) -= P.col(i).dot(P.col(j)) * P.col(i);
    const double norm = P.col(j).norm();
    if (norm > 0.0) P.col(j) /= norm;
  }
}

}  // namespace detail

// Top-k_max eigenpairs of the population covariance of the given samples.
// When n <= d the decomposition runs on the n x n Gram matrix and lifts the
// eigenvectors, which is exact and much cheaper at small sample counts.
inline PcaClassModel fit_pca(const std::vector<Eigen::VectorXd>& samples, int class_id, int k_max) {
  const long n = static_cast<long>(samples.size());
  if (n < 2) throw std::invalid_argument("fit_pca requires at least 2 samples");
  const long d = samples.front().size();
  if (k_max < 0 || k_max > std::min(d, n - 1))
    throw std::invalid_argument("k_max must satisfy 0 <= k_max <= min(d, n-1)");

  Eigen::MatrixXd X(n, d);
  for (long i = 0; i < n; ++i) {
    if (samples[static_cast<std::size_t>(i)].size() != d)
      throw std::invalid_argument("fit_pca samples must share one dimension");
    X.row(i) = samples[static_cast<std::size_t>(i)];
  }

  PcaClassModel model;
  model.class_id = class_id;
  model.mean = X.colwise().mean();
  Eigen::MatrixXd B = X.rowwise() - model.mean.transpose();

  model.components.resize(d, k_max);
  model.eigenvalues.resize(k_max);
  if (k_max == 0) return model;

  if (n <= d) {
    const Eigen::MatrixXd gram = (B * B.transpose()) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const double lambda_max = std::max(es.eigenvalues().maxCoeff(), 0.0);
    const double tol = std::max(lambda_max * 1e-12, 1e-15);
    int filled = 0;
    for (int i = 0; i < k_max; ++i) {
      const long src = n - 1 - i;  // ascending order -> take from the top
      const double lambda = std::max(es.eigenvalues()[src], 0.0);
      model.eigenvalues[i] = lambda;
      if (lambda > tol) {
        Eigen::VectorXd v = B.transpose() * es.eigenvectors().col(src);
        model.components.col(i) = v / v.norm();
        filled = i + 1;
      } else {
        model.eigenvalues[i] = 0.0;
      }
    }
    detail::reorthonormalize(model.components, filled);
    detail::complete_orthonormal(model.components, filled);
  } else {
    const Eigen::MatrixXd cov = (B.transpose() * B) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    for (int i = 0; i < k_max; ++i) {
      const long src = d - 1 - i;
      model.eigenvalues[i] = std::max(es.eigenvalues()[src], 0.0);
      model.components.col(i) = es.eigenvectors().col(src);
    }
  }
  return model;
}

inline PcaClassModel fit_pca(const Corpus& corpus, int class_id, int k_max) {
  std::vector<Eigen::VectorXd> samples;
  for (const auto& rec : corpus.records)
    if (rec.condition.class_id == class_id) samples.push_back(rec.pixels);
  return fit_pca(samples, class_id, k_max);
}

inline PcaMixture fit_mixture(const Corpus& corpus, int k_max) {
  PcaMixture mixture;
  for (int c = 0; c < kNumClasses; ++c) mixture.classes.push_back(fit_pca(corpus, c, k_max));
  return mixture;
}

// Draw x = mean + sum_{i<K} xi_i p_i with xi_i ~ N(0, lambda_i). K = 0
// returns the class mean exactly and consumes no randomness.
inline Eigen::VectorXd sample_init(const PcaClassModel& model, int k, Rng& rng) {
  model.check_k(k);
  Eigen::VectorXd x = model.mean;
  for (int i = 0; i < k; ++i) {
    const double xi = std::sqrt(model.eigenvalues[i]) * rng.normal();
    x += xi * model.components.col(i);
  }
  return x;
}

// Orthogonal projection onto the affine span of the first K components.
inline Eigen::VectorXd project(const PcaClassModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                               int k) {
  model.check_k(k);
  if (x.size() != model.d()) throw std::invalid_argument("project: dimension mismatch");
  Eigen::VectorXd centered = x - model.mean;
  Eigen::VectorXd out = model.mean;
  for (int i = 0; i < k; ++i) out += model.components.col(i).dot(centered) * model.components.col(i);
  return out;
}

// --- persistence ---------------------------------------------------------
//
// Text manifest terminated by a "---" line, then per class (in manifest
// order) raw little-endian f32 blobs: mean[d], components[d*k_max]
// (column-major), eigenvalues[k_max].

inline void save_mixture(const PcaMixture& mixture, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "format: pca-mixture\nversion: 1\n";
  os << "d: " << mixture.d() << "\nk_max: " << mixture.k_max() << "\n";
  os << "dtype: float32\nendianness: little\nlayout: column-major\n";
  os << "blob_order: mean,components,eigenvalues\n";
  for (const auto& m : mixture.classes) os << "class_id: " << m.class_id << "\n";
  os << "---\n";
  std::vector<float> buf;
  for (const auto& m : mixture.classes) {
    buf.resize(static_cast<std::size_t>(m.d()));
    for (long i = 0; i < m.d(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(m.mean[i]);
    io::write_f32_block(os, buf.data(), buf.size());
    buf.resize(static_cast<std::size_t>(m.d()) * static_cast<std::size_t>(m.k_max()));
    for (long j = 0; j < m.k_max(); ++j)
      for (long i = 0; i < m.d(); ++i)
        buf[static_cast<std::size_t>(j * m.d() + i)] = static_cast<float>(m.components(i, j));
    io::write_f32_block(os, buf.data(), buf.size());
    buf.resize(static_cast<std::size_t>(m.k_max()));
    for (int i = 0; i < m.k_max(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(m.eigenvalues[i]);
    io::write_f32_block(os, buf.data(), buf.size());
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

inline PcaMixture load_mixture(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open mixture file " + path.string());
  std::string manifest_text, line;
  while (std::getline(is, line)) {
    if (line == "---") break;
    manifest_text += line;
    manifest_text += '\n';
  }
  auto manifest = io::parse_key_values(manifest_text);
  if (manifest.get_or("format", "") != "pca-mixture")
    throw std::runtime_error(path.string() + ": not a pca-mixture file");
  if (manifest.get("dtype") != "float32" || manifest.get("endianness") != "little")
    throw std::runtime_error(path.string() + ": unsupported dtype/endianness");
  const long d = std::stol(manifest.get("d"));
  const int k_max = std::stoi(manifest.get("k_max"));

  PcaMixture mixture;
  for (const auto& cls : manifest.get_all("class_id")) {
    PcaClassModel m;
    m.class_id = std::stoi(cls);
    std::vector<float> buf(static_cast<std::size_t>(d));
    io::read_f32_block(is, buf.data(), buf.size());
    m.mean.resize(d);
    for (long i = 0; i < d; ++i) m.mean[i] = buf[static_cast<std::size_t>(i)];
    buf.resize(static_cast<std::size_t>(d) * static_cast<std::size_t>(k_max));
    io::read_f32_block(is, buf.data(), buf.size());
    m.components.resize(d, k_max);
    for (long j = 0; j < k_max; ++j)
      for (long i = 0; i < d; ++i) m.components(i, j) = buf[static_cast<std::size_t>(j * d + i)];
    buf.resize(static_cast<std::size_t>(k_max));
    io::read_f32_block(is, buf.data(), buf.size());
    m.eigenvalues.resize(k_max);
    for (int i = 0; i < k_max; ++i) m.eigenvalues[i] = buf[static_cast<std::size_t>(i)];
    mixture.classes.push_back(std::move(m));
  }
  if (mixture.classes.empty()) throw std::runtime_error(path.string() + ": no class models");
  return mixture;
}

}  // namespace difflab
