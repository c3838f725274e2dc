#include "oodgate/detectors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "oodgate/errors.hpp"

namespace oodgate {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kMsp: return "MSP";
    case Method::kEnergy: return "EBM";
    case Method::kMahalanobis: return "MAH";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "msp") return Method::kMsp;
  if (lower == "ebm" || lower == "energy") return Method::kEnergy;
  if (lower == "mah" || lower == "mahalanobis") return Method::kMahalanobis;
  throw ValidationError(fmt::format("unknown detector method '{}'", text));
}

void DetectorConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ValidationError(fmt::format("temperature must be > 0, got {}", temperature));
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ValidationError(fmt::format("ridge must be >= 0, got {}", ridge));
  }
}

void ScoreSet::validate() const {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericalError(fmt::format("non-finite {} score at index {}", to_string(method), i));
    }
  }
}

std::vector<double> softmax(std::span<const double> logits_row) {
  if (logits_row.empty()) throw ValidationError("softmax of an empty vector");
  const double top = *std::max_element(logits_row.begin(), logits_row.end());
  std::vector<double> out(logits_row.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::exp(logits_row[k] - top);
    total += out[k];
  }
  for (auto& p : out) p /= total;
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw ValidationError("log-sum-exp of an empty vector");
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

ScoreSet score_msp(const Eigen::Ref<const RowMatrixD>& logits) {
  if (logits.cols() < 2) {
    throw ValidationError(fmt::format("MSP needs c >= 2 logits, got {}", logits.cols()));
  }
  ScoreSet out{Method::kMsp, std::vector<double>(static_cast<std::size_t>(logits.rows()))};
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double top = row.maxCoeff();
    double total = 0.0;
    for (Eigen::Index k = 0; k < row.size(); ++k) total += std::exp(row(k) - top);
    out.scores[static_cast<std::size_t>(i)] = 1.0 / total;
  }
  out.validate();
  return out;
}

ScoreSet score_msp(const FeatureTable& table) {
  if (!table.has_logits()) throw ValidationError("MSP needs logits but the table has none");
  return score_msp(table.logits().cast<double>());
}

ScoreSet score_energy(const Eigen::Ref<const RowMatrixD>& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ValidationError(fmt::format("temperature must be > 0, got {}", temperature));
  }
  if (logits.cols() < 1) throw ValidationError("energy score needs at least one logit");
  ScoreSet out{Method::kEnergy, std::vector<double>(static_cast<std::size_t>(logits.rows()))};
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double top = row.maxCoeff();
    double total = 0.0;
    for (Eigen::Index k = 0; k < row.size(); ++k) {
      total += std::exp((row(k) - top) / temperature);
    }
    out.scores[static_cast<std::size_t>(i)] = top + temperature * std::log(total);
  }
  out.validate();
  return out;
}

ScoreSet score_energy(const FeatureTable& table, double temperature) {
  if (!table.has_logits()) {
    throw ValidationError("energy score needs logits but the table has none");
  }
  return score_energy(table.logits().cast<double>(), temperature);
}

Detector Detector::fit(const DetectorConfig& config, const FeatureTable& fit_table) {
  config.validate();
  if (config.method != Method::kMahalanobis) return Detector(config, std::nullopt);
  return Detector(config, fit_mahalanobis(fit_table, config.ridge));
}

Detector Detector::with_model(const DetectorConfig& config, GaussianClassModel model) {
  config.validate();
  if (config.method != Method::kMahalanobis) {
    throw ValidationError("only Mahalanobis detectors take a fitted model");
  }
  return Detector(config, std::move(model));
}

Detector Detector::logit_based(const DetectorConfig& config) {
  config.validate();
  if (config.method == Method::kMahalanobis) {
    throw ValidationError("Mahalanobis detectors must be fitted first");
  }
  return Detector(config, std::nullopt);
}

ScoreSet Detector::score(const FeatureTable& table) const {
  switch (config_.method) {
    case Method::kMsp: return score_msp(table);
    case Method::kEnergy: return score_energy(table, config_.temperature);
    case Method::kMahalanobis: return score_mahalanobis(*model_, table);
  }
  throw ValidationError("unknown detector method");
}

std::string format_scores_csv(const ScoreSet& scores) {
  std::string out = "index,score\n";
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    out += fmt::format("{},{:.17g}\n", i, scores.scores[i]);
  }
  return out;
}

ScoreSet parse_scores_csv(std::string_view text, Method method) {
  ScoreSet out{method, {}};
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    ++line_no;
    if (line_no == 1) {
      if (line != "index,score") throw ValidationError("score CSV: expected header 'index,score'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw ValidationError(fmt::format("score CSV line {}: missing comma", line_no));
    }
    std::size_t index = 0;
    double score = 0.0;
    const auto idx = line.substr(0, comma);
    const auto val = line.substr(comma + 1);
    const auto r1 = std::from_chars(idx.data(), idx.data() + idx.size(), index);
    const auto r2 = std::from_chars(val.data(), val.data() + val.size(), score);
    if (r1.ec != std::errc{} || r1.ptr != idx.data() + idx.size() || r2.ec != std::errc{} ||
        r2.ptr != val.data() + val.size()) {
      throw ValidationError(fmt::format("score CSV line {}: unparsable row", line_no));
    }
    if (index != out.scores.size()) {
      throw ValidationError(fmt::format("score CSV line {}: expected index {}, found {}",
                                        line_no, out.scores.size(), index));
    }
    out.scores.push_back(score);
  }
  if (line_no == 0) throw ValidationError("score CSV: missing header");
  try {
    out.validate();
  } catch (const NumericalError& e) {
    throw ValidationError(e.what());
  }
  return out;
}

void write_scores_csv(const ScoreSet& scores, const std::filesystem::path& path) {
  write_text_file(path, format_scores_csv(scores));
}

ScoreSet read_scores_csv(const std::filesystem::path& path, Method method) {
  return parse_scores_csv(read_text_file(path), method);
}

}  // namespace oodgate
