#include "oodgate/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "json.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/manifest.hpp"
#include "oodgate/metrics.hpp"
#include "oodgate/rng.hpp"
#include "svg.hpp"

namespace oodgate {

std::size_t presets::size_preset(std::string_view name) {
  for (const auto& preset : kSizePresets) {
    if (preset.name == name) return preset.size;
  }
  throw ValidationError(fmt::format("unknown size preset '{}'", name));
}

namespace {

using Json = nlohmann::ordered_json;

struct TestSets {
  FeatureTable id;
  std::vector<FeatureTable> ood;
};

double measured_accuracy(const FeatureTable& table) {
  if (!table.has_logits() || !table.fully_labeled()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < table.n(); ++i) {
    Eigen::Index arg = 0;
    table.logits().row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    if (arg == table.labels()[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(table.n());
}

// Subsamples the ID test table and every OOD table to one common size.
TestSets size_matched(const FeatureTable& id, const std::vector<const FeatureTable*>& ood,
                      std::size_t cap, std::uint64_t seed) {
  std::size_t side = id.n();
  for (const auto* t : ood) side = std::min(side, t->n());
  if (cap > 0) side = std::min(side, cap);
  const auto shrink = [&](const FeatureTable& t, std::uint64_t stream) {
    if (t.n() == side) return t;
    return t.select_rows(subsample_indices(t.n(), side, seed, stream));
  };
  TestSets sets{shrink(id, 0), {}};
  for (std::size_t j = 0; j < ood.size(); ++j) sets.ood.push_back(shrink(*ood[j], j + 1));
  return sets;
}

SweepRow make_row(std::string axis_value, double axis_number, const ScoreSet& id,
                  const ScoreSet& ood, double accuracy) {
  const auto curve = roc_curve(id, ood);
  SweepRow row;
  row.axis_value = std::move(axis_value);
  row.axis_number = axis_number;
  row.method = id.method;
  row.classifier_accuracy = accuracy;
  row.auroc = auroc(curve);
  row.fpr95 = fpr_at_tpr(curve);
  row.n_id = curve.n_id;
  row.n_ood = curve.n_ood;
  return row;
}

std::string format_number(double value) { return fmt::format("{}", value); }

Json law_json(const SampleLaw& law) { return law.label(); }

Json world_json(const SyntheticSpec& w) {
  Json j;
  j["classes"] = w.classes;
  j["dim"] = w.dim;
  j["class_separation"] = w.class_separation;
  j["within_class_sigma"] = w.within_class_sigma;
  j["label_noise"] = w.label_noise;
  j["ood_distances"] = w.ood_distances;
  j["n_per_class"] = law_json(w.n_per_class);
  j["ood_samples"] = w.ood_samples;
  j["train_fraction"] = w.train_fraction;
  j["detector_vs_test_fraction"] = w.detector_vs_test_fraction;
  j["seed"] = w.seed;
  return j;
}

struct ManifestTables {
  FeatureTable fit;
  FeatureTable test;
  std::vector<std::pair<std::string, FeatureTable>> ood;
};

ManifestTables load_manifest_tables(const std::filesystem::path& path) {
  const auto manifest = read_manifest(path);
  manifest.validate_for_evaluation();
  const auto fits = manifest.with_role(Role::kIdFitDetector);
  if (fits.empty()) throw ValidationError("manifest has no ID_FIT_DETECTOR entry");
  const auto load = [&](const ManifestEntry& e) {
    return read_feature_table(manifest.resolve(e), e.format);
  };
  ManifestTables tables{load(*fits.front()), load(manifest.id_test()), {}};
  for (const auto* e : manifest.with_role(Role::kOodTest)) {
    tables.ood.emplace_back(e->ood_name, load(*e));
  }
  return tables;
}

}  // namespace

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed,
                                           std::uint64_t stream_index) {
  if (k > n) throw ValidationError(fmt::format("cannot draw {} of {} rows", k, n));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  Rng rng(seed, Stream::kSubsample, stream_index);
  rng.shuffle(std::span(all));
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kAccuracy: return "ACCURACY";
    case SweepAxis::kDomainDistance: return "DOMAIN_DISTANCE";
    case SweepAxis::kImbalance: return "IMBALANCE";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "accuracy") return SweepAxis::kAccuracy;
  if (lower == "distance" || lower == "domain_distance" || lower == "domain-distance") {
    return SweepAxis::kDomainDistance;
  }
  if (lower == "imbalance") return SweepAxis::kImbalance;
  throw ValidationError(fmt::format("unknown sweep axis '{}'", text));
}

void SweepSpec::validate() const {
  if (detectors.empty()) throw ValidationError("sweep needs at least one detector");
  for (const auto& det : detectors) det.validate();
  if (!manifest) base_world.validate();
  switch (axis) {
    case SweepAxis::kAccuracy:
      if (manifest) throw ValidationError("the accuracy axis needs a synthetic world");
      [[fallthrough]];
    case SweepAxis::kDomainDistance:
      if (manifest) break;
      if (grid.empty()) throw ValidationError("sweep grid is empty");
      for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
          throw ValidationError("sweep grid must be strictly increasing");
        }
      }
      break;
    case SweepAxis::kImbalance:
      if (laws.empty()) throw ValidationError("imbalance sweep needs at least one law");
      break;
  }
}

SweepResult run_accuracy_sweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kAccuracy) throw ValidationError("expected an accuracy sweep");
  spec.validate();
  SweepResult result{spec, {}};
  for (double noise : spec.grid) {
    auto world_spec = spec.base_world;
    world_spec.label_noise = noise;
    if (world_spec.ood_distances.empty()) throw ValidationError("world has no OOD distance");
    world_spec.ood_distances.resize(1);
    const auto world = generate_world(world_spec);
    const auto sets =
        size_matched(world.id.test, {&world.ood.front().table}, spec.test_size, spec.seed);
    for (const auto& config : spec.detectors) {
      const auto detector = Detector::fit(config, world.id.detector_fit);
      result.rows.push_back(make_row(format_number(noise), noise, detector.score(sets.id),
                                     detector.score(sets.ood.front()),
                                     world.classifier_accuracy));
    }
  }
  return result;
}

SweepResult run_domain_shift_sweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kDomainDistance) {
    throw ValidationError("expected a domain-distance sweep");
  }
  spec.validate();
  SweepResult result{spec, {}};

  std::vector<std::string> names;
  std::vector<double> numbers;
  std::optional<FeatureTable> fit;
  std::optional<FeatureTable> id_test;
  std::vector<FeatureTable> ood_tables;
  double accuracy = 0.0;
  if (spec.manifest) {
    auto tables = load_manifest_tables(*spec.manifest);
    fit = std::move(tables.fit);
    id_test = std::move(tables.test);
    for (std::size_t j = 0; j < tables.ood.size(); ++j) {
      names.push_back(tables.ood[j].first);
      numbers.push_back(static_cast<double>(j));
      ood_tables.push_back(std::move(tables.ood[j].second));
    }
    accuracy = measured_accuracy(*id_test);
  } else {
    auto world_spec = spec.base_world;
    world_spec.ood_distances = spec.grid;
    auto world = generate_world(world_spec);
    fit = world.id.detector_fit;
    id_test = world.id.test;
    for (auto& ood : world.ood) {
      names.push_back(format_number(ood.distance));
      numbers.push_back(ood.distance);
      ood_tables.push_back(std::move(ood.table));
    }
    accuracy = world.classifier_accuracy;
  }

  std::vector<const FeatureTable*> ood_ptrs;
  for (const auto& t : ood_tables) ood_ptrs.push_back(&t);
  const auto sets = size_matched(*id_test, ood_ptrs, spec.test_size, spec.seed);

  std::vector<Detector> detectors;
  std::vector<ScoreSet> id_scores;
  for (const auto& config : spec.detectors) {
    detectors.push_back(Detector::fit(config, *fit));
    id_scores.push_back(detectors.back().score(sets.id));
  }
  for (std::size_t j = 0; j < sets.ood.size(); ++j) {
    for (std::size_t m = 0; m < detectors.size(); ++m) {
      result.rows.push_back(make_row(names[j], numbers[j], id_scores[m],
                                     detectors[m].score(sets.ood[j]), accuracy));
    }
  }
  return result;
}

SweepResult run_imbalance_sweep(const SweepSpec& spec) {
  if (spec.axis != SweepAxis::kImbalance) throw ValidationError("expected an imbalance sweep");
  spec.validate();
  SweepResult result{spec, {}};

  std::optional<FeatureTable> fit_pool;
  std::optional<FeatureTable> id_test;
  std::optional<FeatureTable> ood;
  double accuracy = 0.0;
  if (spec.manifest) {
    auto tables = load_manifest_tables(*spec.manifest);
    fit_pool = std::move(tables.fit);
    id_test = std::move(tables.test);
    ood = std::move(tables.ood.front().second);
    accuracy = measured_accuracy(*id_test);
  } else {
    auto world_spec = spec.base_world;
    if (world_spec.ood_distances.empty()) throw ValidationError("world has no OOD distance");
    world_spec.ood_distances.resize(1);
    auto world = generate_world(world_spec);
    fit_pool = std::move(world.id.detector_fit);
    id_test = std::move(world.id.test);
    ood = std::move(world.ood.front().table);
    accuracy = world.classifier_accuracy;
  }

  const auto classes = fit_pool->class_count();
  const auto total = spec.laws.front().total_for(classes);
  for (const auto& law : spec.laws) {
    if (law.total_for(classes) != total) {
      throw ValidationError(fmt::format(
          "imbalance laws must share one fit total: {} gives {}, expected {}", law.label(),
          law.total_for(classes), total));
    }
  }

  const auto sets = size_matched(*id_test, {&*ood}, spec.test_size, spec.seed);

  // Logit-based detectors do not depend on the detector-fit data.
  std::map<std::size_t, std::pair<ScoreSet, ScoreSet>> logit_scores;
  for (std::size_t m = 0; m < spec.detectors.size(); ++m) {
    if (spec.detectors[m].method == Method::kMahalanobis) continue;
    const auto detector = Detector::logit_based(spec.detectors[m]);
    logit_scores.emplace(m, std::pair{detector.score(sets.id), detector.score(sets.ood.front())});
  }

  for (std::size_t g = 0; g < spec.laws.size(); ++g) {
    const auto& law = spec.laws[g];
    std::optional<Detector> mahalanobis;
    std::optional<FeatureTable> fit;
    for (std::size_t m = 0; m < spec.detectors.size(); ++m) {
      const auto& config = spec.detectors[m];
      if (config.method == Method::kMahalanobis) {
        if (!fit) fit = sample_imbalanced(*fit_pool, law, spec.seed);
        const auto detector = Detector::fit(config, *fit);
        result.rows.push_back(make_row(law.label(), static_cast<double>(g),
                                       detector.score(sets.id), detector.score(sets.ood.front()),
                                       accuracy));
      } else {
        const auto& [id_s, ood_s] = logit_scores.at(m);
        result.rows.push_back(make_row(law.label(), static_cast<double>(g), id_s, ood_s, accuracy));
      }
    }
  }
  return result;
}

SweepResult run_sweep(const SweepSpec& spec) {
  switch (spec.axis) {
    case SweepAxis::kAccuracy: return run_accuracy_sweep(spec);
    case SweepAxis::kDomainDistance: return run_domain_shift_sweep(spec);
    case SweepAxis::kImbalance: return run_imbalance_sweep(spec);
  }
  throw ValidationError("unknown sweep axis");
}

std::string to_json_lines(const SweepResult& result) {
  std::string out;
  const bool numeric = result.spec.axis != SweepAxis::kImbalance && !result.spec.manifest;
  for (const auto& row : result.rows) {
    Json j;
    j["axis"] = to_string(result.spec.axis);
    if (numeric) {
      j["axis_value"] = row.axis_number;
    } else {
      j["axis_value"] = row.axis_value;
    }
    j["method"] = to_string(row.method);
    j["classifier_accuracy"] = row.classifier_accuracy;
    j["auroc"] = row.auroc;
    j["fpr95"] = row.fpr95;
    j["n_id"] = row.n_id;
    j["n_ood"] = row.n_ood;
    out += j.dump() + "\n";
  }
  return out;
}

std::string summary_json(const SweepResult& result, std::string_view timestamp) {
  const auto& spec = result.spec;
  Json j;
  j["axis"] = to_string(spec.axis);
  if (spec.axis == SweepAxis::kImbalance) {
    Json laws = Json::array();
    for (const auto& law : spec.laws) laws.push_back(law.label());
    j["grid"] = laws;
  } else {
    j["grid"] = spec.grid;
  }
  Json detectors = Json::array();
  for (const auto& d : spec.detectors) {
    Json dj;
    dj["method"] = to_string(d.method);
    dj["temperature"] = d.temperature;
    dj["ridge"] = d.ridge;
    detectors.push_back(dj);
  }
  j["detectors"] = detectors;
  j["metrics"] = Json::array({"AUROC", "FPR95"});
  if (spec.manifest) {
    j["manifest"] = spec.manifest->generic_string();
  } else {
    j["base_world"] = world_json(spec.base_world);
  }
  j["test_size"] = spec.test_size;
  j["seed"] = spec.seed;
  j["rows"] = result.rows.size();
  if (!timestamp.empty()) j["generated_at"] = timestamp;
  return j.dump(2) + "\n";
}

std::string render_sweep_svg(const SweepResult& result) {
  detail::LineChart chart;
  chart.title = fmt::format("AUROC across the {} axis", to_string(result.spec.axis));
  chart.y_label = "AUROC";
  chart.y_min = 0.0;
  chart.y_max = 1.0;

  std::vector<std::string> categories;
  std::map<std::string, std::size_t> category_index;
  for (const auto& row : result.rows) {
    if (category_index.emplace(row.axis_value, categories.size()).second) {
      categories.push_back(row.axis_value);
    }
  }
  const bool numeric = result.spec.axis != SweepAxis::kImbalance && !result.spec.manifest;
  if (numeric) {
    chart.x_label = result.spec.axis == SweepAxis::kAccuracy ? "label noise" : "OOD distance";
    chart.x_min = result.rows.empty() ? 0.0 : result.rows.front().axis_number;
    chart.x_max = result.rows.empty() ? 1.0 : result.rows.back().axis_number;
  } else {
    chart.x_label = result.spec.axis == SweepAxis::kImbalance ? "fit-set law" : "OOD set";
    chart.x_tick_labels = categories;
    chart.x_min = -0.5;
    chart.x_max = static_cast<double>(categories.size()) - 0.5;
  }
  for (const auto& config : result.spec.detectors) {
    const auto name = std::string(to_string(config.method));
    detail::Series series{name, {}, false};
    for (const auto& row : result.rows) {
      if (row.method != config.method) continue;
      const double x = numeric ? row.axis_number
                               : static_cast<double>(category_index.at(row.axis_value));
      series.points.emplace_back(x, row.auroc);
    }
    chart.series.push_back(std::move(series));
  }
  return chart.render();
}

}  // namespace oodgate
