#include "oodgate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "oodgate/errors.hpp"
#include "svg.hpp"

namespace oodgate {
namespace {

// Absorbs the rounding in tp / n_id when comparing a rate against a target.
constexpr double kRateSlack = 1e-12;

void require_nonempty_finite(std::span<const double> scores, const char* what) {
  if (scores.empty()) throw ValidationError(fmt::format("{} scores are empty", what));
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw ValidationError(fmt::format("{} score at index {} is not finite", what, i));
    }
  }
}

void check_target(double target) {
  if (!(target > 0.0 && target <= 1.0)) {
    throw ValidationError(fmt::format("target TPR must lie in (0, 1], got {}", target));
  }
}

nlohmann::ordered_json quartiles_json(const FiveNumberSummary& s) {
  return nlohmann::ordered_json::array({s.min, s.q1, s.median, s.q3, s.max});
}

}  // namespace

RocCurve roc_curve(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_nonempty_finite(id_scores, "ID");
  require_nonempty_finite(ood_scores, "OOD");

  std::vector<std::pair<double, bool>> tagged;
  tagged.reserve(id_scores.size() + ood_scores.size());
  for (double s : id_scores) tagged.emplace_back(s, true);
  for (double s : ood_scores) tagged.emplace_back(s, false);
  std::sort(tagged.begin(), tagged.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  RocCurve curve;
  curve.n_id = id_scores.size();
  curve.n_ood = ood_scores.size();
  const auto push = [&](double threshold, std::uint64_t tp, std::uint64_t fp) {
    curve.thresholds.push_back(threshold);
    curve.true_positives.push_back(tp);
    curve.false_positives.push_back(fp);
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(curve.n_id));
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(curve.n_ood));
  };

  push(std::numeric_limits<double>::infinity(), 0, 0);
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t i = 0; i < tagged.size();) {
    const double score = tagged[i].first;
    for (; i < tagged.size() && tagged[i].first == score; ++i) {
      (tagged[i].second ? tp : fp) += 1;
    }
    push(score, tp, fp);
  }
  push(-std::numeric_limits<double>::infinity(), tp, fp);
  return curve;
}

RocCurve roc_curve(const ScoreSet& id_scores, const ScoreSet& ood_scores) {
  if (id_scores.method != ood_scores.method) {
    throw ValidationError(fmt::format("ID scores are {} but OOD scores are {}",
                                      to_string(id_scores.method),
                                      to_string(ood_scores.method)));
  }
  return roc_curve(id_scores.scores, ood_scores.scores);
}

double auroc(const RocCurve& curve) {
  if (curve.size() < 2 || curve.n_id == 0 || curve.n_ood == 0) {
    throw ValidationError("AUROC needs a curve built from nonempty score sets");
  }
  // Twice the area in units of 1 / (n_id * n_ood); every term is an integer,
  // so the sum is exact while it stays below 2^53.
  double doubled = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto dfp = curve.false_positives[i] - curve.false_positives[i - 1];
    doubled += static_cast<double>(dfp) *
               static_cast<double>(curve.true_positives[i] + curve.true_positives[i - 1]);
  }
  return doubled / (2.0 * static_cast<double>(curve.n_id) * static_cast<double>(curve.n_ood));
}

double fpr_at_tpr(const RocCurve& curve, double target_tpr) {
  check_target(target_tpr);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.tpr[i] + kRateSlack >= target_tpr) return curve.fpr[i];
  }
  return 1.0;
}

std::string to_string(const ThresholdCriterion& criterion) {
  if (criterion.kind == ThresholdCriterion::Kind::kYouden) return "YOUDEN";
  return fmt::format("FPR_AT_TPR({})", criterion.target_tpr);
}

Calibration calibrate_threshold(const RocCurve& curve, const ThresholdCriterion& criterion) {
  if (curve.size() < 3) throw ValidationError("calibration needs a nonempty ROC curve");
  const auto last_observed = curve.size() - 2;
  std::size_t pick = last_observed;

  if (criterion.kind == ThresholdCriterion::Kind::kYouden) {
    const auto n_id = static_cast<std::int64_t>(curve.n_id);
    const auto n_ood = static_cast<std::int64_t>(curve.n_ood);
    pick = 1;
    for (std::size_t i = 2; i <= last_observed; ++i) {
      // J_i >= J_pick  <=>  (tp_i - tp_p) * n_ood >= (fp_i - fp_p) * n_id
      const auto dtp = static_cast<std::int64_t>(curve.true_positives[i]) -
                       static_cast<std::int64_t>(curve.true_positives[pick]);
      const auto dfp = static_cast<std::int64_t>(curve.false_positives[i]) -
                       static_cast<std::int64_t>(curve.false_positives[pick]);
      if (dtp * n_ood >= dfp * n_id) pick = i;
    }
  } else {
    check_target(criterion.target_tpr);
    for (std::size_t i = 1; i <= last_observed; ++i) {
      if (curve.tpr[i] + kRateSlack >= criterion.target_tpr) {
        pick = i;
        break;
      }
    }
  }
  return Calibration{curve.thresholds[pick], curve.tpr[pick], curve.fpr[pick]};
}

Calibration calibrate_threshold(std::span<const double> id_scores,
                                std::span<const double> ood_scores,
                                const ThresholdCriterion& criterion) {
  return calibrate_threshold(roc_curve(id_scores, ood_scores), criterion);
}

double accuracy_at_threshold(std::span<const double> id_scores,
                             std::span<const double> ood_scores, double threshold) {
  if (id_scores.empty() || ood_scores.empty()) {
    throw ValidationError("accuracy needs nonempty ID and OOD scores");
  }
  const auto accepted = std::count_if(id_scores.begin(), id_scores.end(),
                                      [&](double s) { return s >= threshold; });
  const auto rejected = std::count_if(ood_scores.begin(), ood_scores.end(),
                                      [&](double s) { return s < threshold; });
  return static_cast<double>(accepted + rejected) /
         static_cast<double>(id_scores.size() + ood_scores.size());
}

double quantile(std::span<const double> sorted_scores, double p) {
  if (sorted_scores.empty()) throw ValidationError("quantile of an empty set");
  const double pos = p * static_cast<double>(sorted_scores.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted_scores.size() || frac == 0.0) return sorted_scores[lo];
  return sorted_scores[lo] + frac * (sorted_scores[lo + 1] - sorted_scores[lo]);
}

FiveNumberSummary five_number_summary(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("five-number summary of an empty set");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return FiveNumberSummary{sorted.front(), quantile(sorted, 0.25), quantile(sorted, 0.5),
                           quantile(sorted, 0.75), sorted.back()};
}

EvalReport evaluate(const ScoreSet& id_scores, const ScoreSet& ood_scores,
                    const ThresholdCriterion& criterion, double fpr_target_tpr) {
  const auto curve = roc_curve(id_scores, ood_scores);
  const auto cut = calibrate_threshold(curve, criterion);
  EvalReport report;
  report.method = std::string(to_string(id_scores.method));
  report.auroc = auroc(curve);
  report.fpr95 = fpr_at_tpr(curve, fpr_target_tpr);
  report.threshold = cut.threshold;
  report.tpr_at_threshold = cut.tpr;
  report.fpr_at_threshold = cut.fpr;
  report.accuracy_at_threshold =
      accuracy_at_threshold(id_scores.scores, ood_scores.scores, cut.threshold);
  report.id_quartiles = five_number_summary(id_scores.scores);
  report.ood_quartiles = five_number_summary(ood_scores.scores);
  report.n_id = curve.n_id;
  report.n_ood = curve.n_ood;
  return report;
}

std::string to_json(const EvalReport& report, int indent) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["auroc"] = report.auroc;
  j["fpr95"] = report.fpr95;
  j["threshold"] = report.threshold;
  j["tpr_at_threshold"] = report.tpr_at_threshold;
  j["fpr_at_threshold"] = report.fpr_at_threshold;
  j["accuracy_at_threshold"] = report.accuracy_at_threshold;
  j["id_quartiles"] = quartiles_json(report.id_quartiles);
  j["ood_quartiles"] = quartiles_json(report.ood_quartiles);
  j["n_id"] = report.n_id;
  j["n_ood"] = report.n_ood;
  return j.dump(indent) + "\n";
}

std::string calibration_to_json(const Calibration& calibration,
                                const ThresholdCriterion& criterion, int indent) {
  nlohmann::ordered_json j;
  j["criterion"] = to_string(criterion);
  j["threshold"] = calibration.threshold;
  j["tpr"] = calibration.tpr;
  j["fpr"] = calibration.fpr;
  return j.dump(indent) + "\n";
}

std::string render_roc_svg(const RocCurve& curve, const std::string& title) {
  detail::LineChart chart;
  chart.title = fmt::format("{} (AUROC {:.4f})", title, auroc(curve));
  chart.x_label = "False positive rate (OOD accepted)";
  chart.y_label = "True positive rate (ID accepted)";
  detail::Series diagonal{"chance", {{0.0, 0.0}, {1.0, 1.0}}, true};
  detail::Series roc{"ROC", {}, false};
  for (std::size_t i = 0; i < curve.size(); ++i) {
    roc.points.emplace_back(curve.fpr[i], curve.tpr[i]);
  }
  chart.series = {std::move(roc), std::move(diagonal)};
  return chart.render();
}

}  // namespace oodgate
