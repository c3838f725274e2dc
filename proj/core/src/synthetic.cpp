#include "oodgate/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "oodgate/errors.hpp"
#include "oodgate/rng.hpp"

namespace oodgate {
namespace {

Eigen::VectorXd random_unit_vector(Rng& rng, std::size_t dim) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  double norm = 0.0;
  while (norm < 1e-12) {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = rng.normal();
    norm = v.norm();
  }
  return v / norm;
}

std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t total) {
  const std::size_t c = weights.size();
  if (total < c) {
    throw ValidationError(
        fmt::format("total {} is smaller than the class count {}", total, c));
  }
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> sizes(c);
  std::vector<double> fractional(c);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < c; ++k) {
    const double exact = weights[k] / sum * static_cast<double>(total);
    sizes[k] = static_cast<std::size_t>(std::floor(exact));
    fractional[k] = exact - std::floor(exact);
    assigned += sizes[k];
  }
  std::vector<std::size_t> order(c);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fractional[a] > fractional[b]; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++sizes[order[r % c]];
  for (auto& size : sizes) {
    if (size != 0) continue;
    auto largest = std::max_element(sizes.begin(), sizes.end());
    --*largest;
    ++size;
  }
  return sizes;
}

RowMatrixF class_logits(const RowMatrixF& features, const RowMatrixD& centers, double sigma) {
  const auto n = features.rows();
  const auto c = centers.rows();
  const double d = static_cast<double>(features.cols());
  const double log_norm =
      -0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma) - std::log(static_cast<double>(c));
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  RowMatrixF logits(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd x = features.row(i).cast<double>();
    for (Eigen::Index k = 0; k < c; ++k) {
      logits(i, k) =
          static_cast<float>(log_norm - (x - centers.row(k)).squaredNorm() * inv_two_var);
    }
  }
  return logits;
}

}  // namespace

std::size_t SampleLaw::total_for(std::size_t classes) const {
  return kind == Kind::kBalanced ? per_class * classes : total;
}

std::string SampleLaw::label() const {
  switch (kind) {
    case Kind::kBalanced: return fmt::format("balanced:{}", per_class);
    case Kind::kPowerLaw: return fmt::format("powerlaw:{}:{}", alpha, total);
    case Kind::kUniform: return fmt::format("uniform:{}", total);
  }
  return "?";
}

SampleLaw SampleLaw::parse(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  const auto bad = [&] {
    return ValidationError(fmt::format(
        "bad sample law '{}': expected balanced:N, powerlaw:ALPHA:TOTAL or uniform:TOTAL",
        text));
  };
  const auto to_size = [&](std::string_view s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw bad();
    return v;
  };
  const auto to_real = [&](std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw bad();
    return v;
  };
  if (parts[0] == "balanced" && parts.size() == 2) return balanced(to_size(parts[1]));
  if (parts[0] == "powerlaw" && parts.size() == 3) {
    return power_law(to_real(parts[1]), to_size(parts[2]));
  }
  if (parts[0] == "uniform" && parts.size() == 2) return uniform(to_size(parts[1]));
  throw bad();
}

std::vector<std::size_t> class_sizes(const SampleLaw& law, std::size_t classes,
                                     std::uint64_t seed) {
  if (classes == 0) throw ValidationError("class_sizes needs at least one class");
  switch (law.kind) {
    case SampleLaw::Kind::kBalanced:
      if (law.per_class == 0) throw ValidationError("balanced law needs n >= 1 per class");
      return std::vector<std::size_t>(classes, law.per_class);
    case SampleLaw::Kind::kPowerLaw: {
      if (!(law.alpha >= 0.0) || !std::isfinite(law.alpha)) {
        throw ValidationError(fmt::format("power-law alpha must be >= 0, got {}", law.alpha));
      }
      std::vector<double> weights(classes);
      for (std::size_t k = 0; k < classes; ++k) {
        weights[k] = std::pow(static_cast<double>(k + 1), -law.alpha);
      }
      return apportion(weights, law.total);
    }
    case SampleLaw::Kind::kUniform: {
      Rng rng(seed, Stream::kClassSizes);
      std::vector<double> weights(classes);
      for (auto& w : weights) w = 1.0 - rng.uniform01();
      return apportion(weights, law.total);
    }
  }
  throw ValidationError("unknown sample law");
}

FeatureTable sample_imbalanced(const FeatureTable& table, const SampleLaw& law,
                               std::uint64_t seed) {
  if (!table.fully_labeled()) {
    throw ValidationError("imbalanced sampling needs a fully labeled table");
  }
  const auto c = table.class_count();
  const auto sizes = class_sizes(law, c, seed);
  std::vector<std::vector<std::size_t>> by_class(c);
  const auto labels = table.labels();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(law.total_for(c));
  for (std::size_t k = 0; k < c; ++k) {
    auto& rows = by_class[k];
    if (rows.size() < sizes[k]) {
      throw ValidationError(fmt::format("class {} has {} samples but {} were requested", k,
                                        rows.size(), sizes[k]));
    }
    Rng rng(seed, Stream::kImbalance, k);
    rng.shuffle(std::span(rows));
    chosen.insert(chosen.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(sizes[k]));
  }
  std::sort(chosen.begin(), chosen.end());
  return table.select_rows(chosen);
}

void SyntheticSpec::validate() const {
  if (classes < 2) throw ValidationError(fmt::format("need c >= 2 classes, got {}", classes));
  if (dim < 2) throw ValidationError(fmt::format("need d >= 2 dimensions, got {}", dim));
  if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
    throw ValidationError("class separation must be > 0");
  }
  if (!(within_class_sigma > 0.0) || !std::isfinite(within_class_sigma)) {
    throw ValidationError("within-class sigma must be > 0");
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    throw ValidationError(fmt::format("label noise must lie in [0, 1), got {}", label_noise));
  }
  for (double distance : ood_distances) {
    if (!(distance >= 0.0) || !std::isfinite(distance)) {
      throw ValidationError(fmt::format("OOD distance must be >= 0, got {}", distance));
    }
  }
  split_policy().validate();
}

std::string ood_table_name(double distance) { return fmt::format("ood_d{}", distance); }

SyntheticWorld generate_world(const SyntheticSpec& spec) {
  spec.validate();
  const auto c = spec.classes;
  const auto d = static_cast<Eigen::Index>(spec.dim);
  const double sigma = spec.within_class_sigma;

  RowMatrixD means(static_cast<Eigen::Index>(c), d);
  {
    Rng rng(spec.seed, Stream::kClassMeans);
    for (std::size_t k = 0; k < c; ++k) {
      means.row(static_cast<Eigen::Index>(k)) =
          spec.class_separation * random_unit_vector(rng, spec.dim).transpose();
    }
  }

  // ID rows, grouped by class, with true and flipped labels.
  const auto sizes = class_sizes(spec.n_per_class, c, spec.seed);
  const auto n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  RowMatrixF features(static_cast<Eigen::Index>(n), d);
  std::vector<Label> true_labels(n);
  std::vector<Label> noisy_labels(n);
  std::size_t row = 0;
  for (std::size_t k = 0; k < c; ++k) {
    Rng samples(spec.seed, Stream::kIdSamples, k);
    Rng noise(spec.seed, Stream::kLabelNoise, k);
    for (std::size_t s = 0; s < sizes[k]; ++s, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) {
        features(static_cast<Eigen::Index>(row), j) =
            static_cast<float>(means(static_cast<Eigen::Index>(k), j) + sigma * samples.normal());
      }
      // Both draws happen for every sample so the flipped set grows
      // monotonically with label_noise at a fixed seed.
      const double u = noise.uniform01();
      auto other = noise.uniform_index(c - 1);
      if (other >= k) ++other;
      true_labels[row] = static_cast<Label>(k);
      noisy_labels[row] = u < spec.label_noise ? static_cast<Label>(other) : static_cast<Label>(k);
    }
  }

  const auto parts = split_indices(true_labels, spec.split_policy());
  for (std::size_t p = 0; p < 3; ++p) {
    if (parts[p].empty()) throw ValidationError("synthetic split produced an empty part");
  }

  // Classifier centers from the flipped classifier-train labels.
  RowMatrixD centers = RowMatrixD::Zero(static_cast<Eigen::Index>(c), d);
  std::vector<std::size_t> center_counts(c, 0);
  Eigen::RowVectorXd train_mean = Eigen::RowVectorXd::Zero(d);
  for (std::size_t i : parts[0]) {
    const auto k = static_cast<Eigen::Index>(noisy_labels[i]);
    const Eigen::RowVectorXd x = features.row(static_cast<Eigen::Index>(i)).cast<double>();
    centers.row(k) += x;
    train_mean += x;
    ++center_counts[static_cast<std::size_t>(k)];
  }
  train_mean /= static_cast<double>(parts[0].size());
  for (std::size_t k = 0; k < c; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    if (center_counts[k] == 0) {
      centers.row(kk) = train_mean;
    } else {
      centers.row(kk) /= static_cast<double>(center_counts[k]);
    }
  }

  RowMatrixF logits = class_logits(features, centers, sigma);
  for (std::size_t i = 0; i < n; ++i) {
    if (noisy_labels[i] != true_labels[i]) {
      std::swap(logits(static_cast<Eigen::Index>(i), true_labels[i]),
                logits(static_cast<Eigen::Index>(i), noisy_labels[i]));
    }
  }

  const auto id_table = [&](const std::vector<std::size_t>& rows, bool flipped) {
    RowMatrixF f(static_cast<Eigen::Index>(rows.size()), d);
    RowMatrixF l(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(c));
    std::vector<Label> y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      f.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r]));
      l.row(static_cast<Eigen::Index>(r)) = logits.row(static_cast<Eigen::Index>(rows[r]));
      y[r] = flipped ? noisy_labels[rows[r]] : true_labels[rows[r]];
    }
    return FeatureTable::create(std::move(f), std::move(l), std::move(y));
  };

  SyntheticWorld world{
      IdSplit{id_table(parts[0], true), id_table(parts[1], true), id_table(parts[2], false)},
      {},
      means,
      0.0};

  std::size_t correct = 0;
  const auto& test = world.id.test;
  for (std::size_t i = 0; i < test.n(); ++i) {
    Eigen::Index arg = 0;
    test.logits().row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    if (arg == test.labels()[i]) ++correct;
  }
  world.classifier_accuracy = static_cast<double>(correct) / static_cast<double>(test.n());

  const auto ood_n = spec.ood_samples > 0 ? spec.ood_samples : test.n();
  for (std::size_t j = 0; j < spec.ood_distances.size(); ++j) {
    const double distance = spec.ood_distances[j];
    Rng direction_rng(spec.seed, Stream::kOodDirection, j);
    const Eigen::RowVectorXd shift =
        distance * spec.class_separation * random_unit_vector(direction_rng, spec.dim).transpose();
    Rng rng(spec.seed, Stream::kOodSamples, j);
    RowMatrixF f(static_cast<Eigen::Index>(ood_n), d);
    for (std::size_t s = 0; s < ood_n; ++s) {
      const auto k = static_cast<Eigen::Index>(rng.uniform_index(c));
      for (Eigen::Index q = 0; q < d; ++q) {
        f(static_cast<Eigen::Index>(s), q) =
            static_cast<float>(means(k, q) + shift(q) + sigma * rng.normal());
      }
    }
    RowMatrixF l = class_logits(f, centers, sigma);
    world.ood.push_back(OodTable{
        ood_table_name(distance), distance,
        FeatureTable::create(std::move(f), std::move(l), std::vector<Label>(ood_n, kUnlabeled))});
  }
  return world;
}

}  // namespace oodgate
