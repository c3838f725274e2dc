#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "oodgate/feature_table.hpp"

namespace oodgate {

struct ScoreSet;

/// Class-conditional Gaussians with a shared covariance, fitted on
/// prelogit features.
///
/// `covariance` is the raw pooled within-class scatter divided by the total
/// sample count. Scoring uses the Cholesky factor of the regularized matrix
///   covariance + ridge * (trace / d) * I,
/// falling back to an absolute 1e-6 * I when the trace is zero. Class means
/// are pre-whitened through the same factor so that scoring a row costs one
/// triangular solve plus c distance evaluations.
class GaussianClassModel {
 public:
  static constexpr double kAbsoluteRidgeFloor = 1e-6;

  /// Rebuilds a model from stored parts and factorizes.
  GaussianClassModel(RowMatrixD means, Eigen::MatrixXd covariance,
                     std::vector<std::uint64_t> per_class_counts, double ridge);

  std::size_t c() const noexcept { return static_cast<std::size_t>(means_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(means_.cols()); }
  double ridge() const noexcept { return ridge_; }
  const RowMatrixD& means() const noexcept { return means_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  const Eigen::MatrixXd& regularized_covariance() const noexcept { return regularized_; }
  /// Lower-triangular L with L L^T = regularized covariance.
  Eigen::MatrixXd precision_factor() const { return factor_.matrixL(); }
  std::span<const std::uint64_t> per_class_counts() const noexcept { return counts_; }

  /// Squared Mahalanobis distance from x to every class mean.
  Eigen::VectorXd squared_distances(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  RowMatrixD means_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd regularized_;
  std::vector<std::uint64_t> counts_;
  double ridge_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  Eigen::MatrixXd whitened_means_;  // d x c, column k = L^-1 mu_k
};

/// Fits class means and the pooled covariance (divisor N) from labeled
/// features. Every class in [0, class_count) must have a sample.
GaussianClassModel fit_mahalanobis(const FeatureTable& fit_table, double ridge = 1e-6);

/// max_k -(x - mu_k)^T Sigma^-1 (x - mu_k) per row; always <= 0.
ScoreSet score_mahalanobis(const GaussianClassModel& model,
                           const Eigen::Ref<const RowMatrixD>& features);
ScoreSet score_mahalanobis(const GaussianClassModel& model, const FeatureTable& table);

/// OODM container (little-endian):
///   magic "OODM", u32 version (1), u64 c, u64 d, f64 ridge,
///   u8 dtype (1 = binary64), 7 reserved zero bytes,
///   means c*d, covariance d*d (row-major), per-class counts as u64.
std::vector<std::uint8_t> encode_model(const GaussianClassModel& model);
GaussianClassModel decode_model(std::span<const std::uint8_t> bytes);
void write_model(const GaussianClassModel& model, const std::filesystem::path& path);
GaussianClassModel read_model(const std::filesystem::path& path);

}  // namespace oodgate
