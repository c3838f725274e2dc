#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodgate/feature_table.hpp"
#include "oodgate/gaussian_model.hpp"

namespace oodgate {

enum class Method { kMsp, kEnergy, kMahalanobis };

/// "MSP", "EBM", "MAH".
std::string_view to_string(Method method);
/// Case-insensitive; also accepts "energy" and "mahalanobis".
Method parse_method(std::string_view text);

/// Scores are always oriented so that larger means more in-distribution.
enum class Orientation { kHigherIsId };

struct DetectorConfig {
  Method method = Method::kMsp;
  double temperature = 1.0;  // energy only
  double ridge = 1e-6;       // Mahalanobis only, relative to trace / d

  void validate() const;
};

struct ScoreSet {
  Method method = Method::kMsp;
  std::vector<double> scores;
  static constexpr Orientation orientation = Orientation::kHigherIsId;

  std::size_t size() const noexcept { return scores.size(); }
  /// Throws unless every score is finite.
  void validate() const;
};

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> logits_row);

/// log(sum(exp(x))) with the maximum factored out.
double log_sum_exp(std::span<const double> values);

/// Maximum softmax probability per row. Requires c >= 2.
ScoreSet score_msp(const Eigen::Ref<const RowMatrixD>& logits);
ScoreSet score_msp(const FeatureTable& table);

/// Negated free energy, T * logsumexp(logits / T), per row.
ScoreSet score_energy(const Eigen::Ref<const RowMatrixD>& logits, double temperature = 1.0);
ScoreSet score_energy(const FeatureTable& table, double temperature = 1.0);

/// A configured detector. Mahalanobis detectors carry their fitted model;
/// MSP and energy have nothing to fit.
class Detector {
 public:
  static Detector fit(const DetectorConfig& config, const FeatureTable& fit_table);
  static Detector with_model(const DetectorConfig& config, GaussianClassModel model);
  static Detector logit_based(const DetectorConfig& config);

  ScoreSet score(const FeatureTable& table) const;

  const DetectorConfig& config() const noexcept { return config_; }
  const std::optional<GaussianClassModel>& model() const noexcept { return model_; }

 private:
  Detector(DetectorConfig config, std::optional<GaussianClassModel> model)
      : config_(config), model_(std::move(model)) {}

  DetectorConfig config_;
  std::optional<GaussianClassModel> model_;
};

/// CSV `index,score` with 17 significant digits.
std::string format_scores_csv(const ScoreSet& scores);
ScoreSet parse_scores_csv(std::string_view text, Method method);
void write_scores_csv(const ScoreSet& scores, const std::filesystem::path& path);
ScoreSet read_scores_csv(const std::filesystem::path& path, Method method);

}  // namespace oodgate
