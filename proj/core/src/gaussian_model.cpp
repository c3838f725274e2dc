#include "oodgate/gaussian_model.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "binary_io.hpp"
#include "oodgate/detectors.hpp"
#include "oodgate/errors.hpp"

namespace oodgate {
namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr double kSymmetryTolerance = 1e-9;
// Squared ratio of the smallest to the largest Cholesky pivot below which
// the factorization is treated as having failed.
constexpr double kMinPivotRatio = 1e-14;

}  // namespace

GaussianClassModel::GaussianClassModel(RowMatrixD means, Eigen::MatrixXd covariance,
                                       std::vector<std::uint64_t> per_class_counts,
                                       double ridge)
    : means_(std::move(means)),
      covariance_(std::move(covariance)),
      counts_(std::move(per_class_counts)),
      ridge_(ridge) {
  const auto d = means_.cols();
  if (means_.rows() < 1 || d < 1) throw ValidationError("model needs c >= 1 and d >= 1");
  if (covariance_.rows() != d || covariance_.cols() != d) {
    throw ValidationError(fmt::format("covariance must be {0}x{0}", d));
  }
  if (counts_.size() != static_cast<std::size_t>(means_.rows())) {
    throw ValidationError("per-class counts must have one entry per class");
  }
  if (!(ridge_ >= 0.0) || !std::isfinite(ridge_)) {
    throw ValidationError(fmt::format("ridge must be finite and >= 0, got {}", ridge_));
  }
  if (!means_.allFinite() || !covariance_.allFinite()) {
    throw ValidationError("model parameters must be finite");
  }
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw ValidationError("covariance is not symmetric");
  }

  const double trace = covariance_.trace();
  const double shift =
      trace > 0.0 ? ridge_ * trace / static_cast<double>(d) : kAbsoluteRidgeFloor;
  regularized_ = covariance_;
  regularized_.diagonal().array() += shift;
  factor_.compute(regularized_);

  const Eigen::VectorXd pivots = factor_.matrixLLT().diagonal();
  const bool ok = factor_.info() == Eigen::Success && pivots.allFinite() &&
                  pivots.minCoeff() > 0.0 &&
                  pivots.minCoeff() * pivots.minCoeff() >=
                      kMinPivotRatio * pivots.maxCoeff() * pivots.maxCoeff();
  if (!ok) {
    throw NumericalError(fmt::format(
        "covariance is not positive definite after regularization (ridge = {}); "
        "use a larger ridge",
        ridge_));
  }
  whitened_means_ = factor_.matrixL().solve(means_.transpose());
}

Eigen::VectorXd GaussianClassModel::squared_distances(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd y = factor_.matrixL().solve(x);
  return (whitened_means_.colwise() - y).colwise().squaredNorm().transpose();
}

GaussianClassModel fit_mahalanobis(const FeatureTable& fit_table, double ridge) {
  if (!fit_table.fully_labeled()) {
    throw ValidationError("Mahalanobis fit needs a fully labeled table");
  }
  const auto c = fit_table.class_count();
  const auto d = fit_table.d();
  const auto n = fit_table.n();
  if (c == 0) throw ValidationError("Mahalanobis fit needs at least one class");
  if (n <= d) {
    spdlog::warn("Mahalanobis fit with n = {} <= d = {}; covariance is rank deficient", n, d);
  }

  const auto labels = fit_table.labels();
  std::vector<std::uint64_t> counts(c, 0);
  RowMatrixD means = RowMatrixD::Zero(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(labels[i]);
    ++counts[k];
    means.row(static_cast<Eigen::Index>(k)) +=
        fit_table.features().row(static_cast<Eigen::Index>(i)).cast<double>();
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] == 0) {
      throw ValidationError(fmt::format("class {} has no samples in the fit table", k));
    }
    means.row(static_cast<Eigen::Index>(k)) /= static_cast<double>(counts[k]);
  }

  RowMatrixD centered = fit_table.features().cast<double>();
  for (std::size_t i = 0; i < n; ++i) {
    centered.row(static_cast<Eigen::Index>(i)) -= means.row(labels[i]);
  }
  Eigen::MatrixXd covariance = centered.transpose() * centered;
  covariance /= static_cast<double>(n);
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  return GaussianClassModel(std::move(means), std::move(covariance), std::move(counts),
                            ridge);
}

ScoreSet score_mahalanobis(const GaussianClassModel& model,
                           const Eigen::Ref<const RowMatrixD>& features) {
  if (static_cast<std::size_t>(features.cols()) != model.d()) {
    throw ValidationError(fmt::format("dimension mismatch: model d = {}, features d = {}",
                                      model.d(), features.cols()));
  }
  ScoreSet out{Method::kMahalanobis, std::vector<double>(static_cast<std::size_t>(features.rows()))};
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const Eigen::VectorXd x = features.row(i).transpose();
    out.scores[static_cast<std::size_t>(i)] = -model.squared_distances(x).minCoeff();
  }
  out.validate();
  return out;
}

ScoreSet score_mahalanobis(const GaussianClassModel& model, const FeatureTable& table) {
  return score_mahalanobis(model, table.features().cast<double>());
}

std::vector<std::uint8_t> encode_model(const GaussianClassModel& model) {
  detail::ByteWriter w;
  w.bytes("OODM");
  w.scalar<std::uint32_t>(kModelVersion);
  w.scalar<std::uint64_t>(model.c());
  w.scalar<std::uint64_t>(model.d());
  w.scalar<double>(model.ridge());
  w.scalar<std::uint8_t>(1);
  w.zeros(7);
  w.array(model.means().data(), static_cast<std::size_t>(model.means().size()));
  const RowMatrixD cov = model.covariance();
  w.array(cov.data(), static_cast<std::size_t>(cov.size()));
  w.array(model.per_class_counts().data(), model.per_class_counts().size());
  return w.take();
}

GaussianClassModel decode_model(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "OODM");
  if (r.bytes(4) != "OODM") throw ValidationError("OODM: bad magic");
  if (const auto v = r.scalar<std::uint32_t>(); v != kModelVersion) {
    throw ValidationError(fmt::format("OODM: unsupported version {}", v));
  }
  const auto c = r.scalar<std::uint64_t>();
  const auto d = r.scalar<std::uint64_t>();
  const auto ridge = r.scalar<double>();
  if (const auto dtype = r.scalar<std::uint8_t>(); dtype != 1) {
    throw ValidationError(fmt::format("OODM: unsupported dtype {}", dtype));
  }
  r.bytes(7);
  if (c == 0 || d == 0 || c > (1U << 24) || d > (1U << 16)) {
    throw ValidationError(fmt::format("OODM: implausible dimensions c={} d={}", c, d));
  }
  if (r.remaining() != 8 * (c * d + d * d + c)) {
    throw ValidationError("OODM: payload size does not match header");
  }
  RowMatrixD means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
  RowMatrixD cov(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  std::vector<std::uint64_t> counts(c);
  r.array(means.data(), c * d);
  r.array(cov.data(), d * d);
  r.array(counts.data(), c);
  return GaussianClassModel(std::move(means), Eigen::MatrixXd(cov), std::move(counts), ridge);
}

void write_model(const GaussianClassModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_model(model));
}

GaussianClassModel read_model(const std::filesystem::path& path) {
  try {
    return decode_model(read_file_bytes(path));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace oodgate
