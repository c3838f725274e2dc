#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oodgate/detectors.hpp"

namespace oodgate {

/// ROC operating points, ID taken as the positive class. A sample is
/// classified ID when score >= threshold. thresholds[0] is +inf (nothing
/// accepted); then every distinct observed score in descending order; the
/// last entry is -inf (everything accepted). Tied ID/OOD scores share one
/// point, so both rates move together across a tie group.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> tpr;
  std::vector<double> fpr;
  std::vector<std::uint64_t> true_positives;
  std::vector<std::uint64_t> false_positives;
  std::uint64_t n_id = 0;
  std::uint64_t n_ood = 0;

  std::size_t size() const noexcept { return thresholds.size(); }
};

RocCurve roc_curve(std::span<const double> id_scores, std::span<const double> ood_scores);
/// Both sets must carry the same method.
RocCurve roc_curve(const ScoreSet& id_scores, const ScoreSet& ood_scores);

/// Trapezoidal area, computed on integer counts; equals the Mann-Whitney
/// probability P(id > ood) + P(id == ood) / 2.
double auroc(const RocCurve& curve);

inline constexpr double kDefaultTargetTpr = 0.95;

/// Smallest FPR over operating points with TPR >= target, without
/// interpolating between points.
double fpr_at_tpr(const RocCurve& curve, double target_tpr = kDefaultTargetTpr);

struct ThresholdCriterion {
  enum class Kind { kYouden, kFprAtTpr };
  Kind kind = Kind::kYouden;
  double target_tpr = kDefaultTargetTpr;

  static ThresholdCriterion youden() { return {Kind::kYouden, kDefaultTargetTpr}; }
  static ThresholdCriterion fpr_at_tpr(double target) { return {Kind::kFprAtTpr, target}; }
};

std::string to_string(const ThresholdCriterion& criterion);

struct Calibration {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

/// Picks a cut among the observed scores. Youden maximizes TPR - FPR and
/// breaks ties toward the smaller threshold; FPR_AT_TPR returns the largest
/// threshold whose TPR reaches the target.
Calibration calibrate_threshold(std::span<const double> id_scores,
                                std::span<const double> ood_scores,
                                const ThresholdCriterion& criterion);
Calibration calibrate_threshold(const RocCurve& curve, const ThresholdCriterion& criterion);

/// (|id >= t| + |ood < t|) / (n_id + n_ood).
double accuracy_at_threshold(std::span<const double> id_scores,
                             std::span<const double> ood_scores, double threshold);

struct FiveNumberSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Quantiles by linear interpolation at zero-based position p * (n - 1).
FiveNumberSummary five_number_summary(std::span<const double> scores);
double quantile(std::span<const double> sorted_scores, double p);

struct EvalReport {
  std::string method;
  double auroc = 0.0;
  double fpr95 = 0.0;
  double threshold = 0.0;
  double tpr_at_threshold = 0.0;
  double fpr_at_threshold = 0.0;
  double accuracy_at_threshold = 0.0;
  FiveNumberSummary id_quartiles;
  FiveNumberSummary ood_quartiles;
  std::uint64_t n_id = 0;
  std::uint64_t n_ood = 0;
};

EvalReport evaluate(const ScoreSet& id_scores, const ScoreSet& ood_scores,
                    const ThresholdCriterion& criterion = ThresholdCriterion::youden(),
                    double fpr_target_tpr = kDefaultTargetTpr);

/// One JSON object with keys, in order: method, auroc, fpr95, threshold,
/// tpr_at_threshold, fpr_at_threshold, accuracy_at_threshold, id_quartiles,
/// ood_quartiles, n_id, n_ood. Quartiles are [min, q1, median, q3, max].
std::string to_json(const EvalReport& report, int indent = 2);
std::string calibration_to_json(const Calibration& calibration,
                                const ThresholdCriterion& criterion, int indent = 2);

/// Standalone SVG: unit square axes, staircase polyline, dashed diagonal.
std::string render_roc_svg(const RocCurve& curve, const std::string& title = "ROC");

}  // namespace oodgate
