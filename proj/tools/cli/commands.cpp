#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "cli/config_file.hpp"
#include "json.hpp"
#include "oodgate/detectors.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/experiments.hpp"
#include "oodgate/gaussian_model.hpp"
#include "oodgate/manifest.hpp"
#include "oodgate/metrics.hpp"
#include "oodgate/synthetic.hpp"

namespace oodgate::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr std::uint64_t kDefaultSeed = 42;

struct WorldOptions {
  std::size_t classes = 10;
  std::size_t dim = 8;
  double separation = 4.0;
  double sigma = 1.0;
  double label_noise = 0.0;
  std::vector<double> ood_distances{2.0};
  std::string law = "balanced:300";
  std::size_t ood_samples = 0;
  double train_fraction = 0.7;
  double detector_fraction = 0.5;

  void add_to(CLI::App& app) {
    app.add_option("--classes", classes, "Number of ID classes (c >= 2)")->capture_default_str();
    app.add_option("--dim", dim, "Feature dimension (d >= 2)")->capture_default_str();
    app.add_option("--separation", separation, "Radius of the sphere holding class means")
        ->capture_default_str();
    app.add_option("--sigma", sigma, "Within-class standard deviation")->capture_default_str();
    app.add_option("--label-noise", label_noise,
                   "Probability a training label is flipped to another class")
        ->capture_default_str();
    app.add_option("--ood-distance", ood_distances,
                   "OOD shift(s) in units of --separation; comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--law", law,
                   "Class-size law: balanced:N | powerlaw:ALPHA:TOTAL | uniform:TOTAL")
        ->capture_default_str();
    app.add_option("--ood-samples", ood_samples, "Rows per OOD table (0 = ID test size)")
        ->capture_default_str();
    app.add_option("--train-fraction", train_fraction, "Classifier-train share of each class")
        ->capture_default_str();
    app.add_option("--detector-fraction", detector_fraction,
                   "Detector-fit share of the held-out rows")
        ->capture_default_str();
  }

  SyntheticSpec spec(std::uint64_t seed) const {
    SyntheticSpec s;
    s.classes = classes;
    s.dim = dim;
    s.class_separation = separation;
    s.within_class_sigma = sigma;
    s.label_noise = label_noise;
    s.ood_distances = ood_distances;
    s.n_per_class = SampleLaw::parse(law);
    s.ood_samples = ood_samples;
    s.train_fraction = train_fraction;
    s.detector_vs_test_fraction = detector_fraction;
    s.seed = seed;
    return s;
  }
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(fmt::format("{} path is required", what));
  if (!fs::is_regular_file(path)) {
    throw IoError(fmt::format("{} '{}' does not exist", what, path));
  }
}

void ensure_parent(const fs::path& path) {
  const auto parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", parent.string(), ec.message()));
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  ensure_parent(out_path);
  write_text_file(out_path, text);
}

FeatureTable load_table(const std::string& path, const std::string& format) {
  require_file(path, "input table");
  const auto fmt_kind =
      format == "auto" ? format_from_extension(path) : parse_table_format(format);
  return read_feature_table(path, fmt_kind);
}

ThresholdCriterion parse_criterion(const std::string& name, double target) {
  if (name == "youden") return ThresholdCriterion::youden();
  if (name == "fpr-at-tpr") return ThresholdCriterion::fpr_at_tpr(target);
  throw ValidationError(fmt::format("unknown criterion '{}'", name));
}

std::string preset_footer() {
  std::string text = "Dataset-size presets (sweep --size-preset):\n";
  for (const auto& p : presets::kSizePresets) {
    text += fmt::format("  {:<13}{:>7}  {}\n", p.name, p.size, p.use);
  }
  text += fmt::format("  balanced fit law for {} classes: balanced:{} ({} rows)\n",
                      presets::kInsectClassCount, presets::kBalancedPerClass,
                      presets::kBalancedFitTotal);
  text +=
      "\nExit status: 0 success, 2 usage/validation, 3 I/O, 4 numerical.\n"
      "OODGATE_SEED overrides the default seed (42). Every command accepts\n"
      "--config FILE with flat `key = value` lines; command-line flags win.\n";
  return text;
}

struct Cli {
  CLI::App app{"oodgate: post-hoc out-of-distribution detection toolkit", "oodgate"};
  std::string log_level = "warn";

  // synth
  WorldOptions synth_world;
  std::string synth_out;
  std::string synth_format = "oodf";
  std::uint64_t synth_seed = kDefaultSeed;
  bool synth_no_timestamp = false;

  // fit
  std::string fit_input;
  std::string fit_manifest;
  std::string fit_format = "auto";
  std::string fit_method = "mah";
  double fit_ridge = 1e-6;
  std::string fit_out;

  // score
  std::string score_input;
  std::string score_format = "auto";
  std::string score_method;
  std::string score_model;
  double score_temperature = 1.0;
  std::string score_out;

  // calibrate / eval
  std::string id_scores;
  std::string ood_scores;
  std::string criterion = "youden";
  double target_tpr = kDefaultTargetTpr;
  std::string calib_out;
  std::string eval_method;
  double eval_fpr_tpr = kDefaultTargetTpr;
  std::string eval_out;
  std::string eval_svg;

  // sweep
  WorldOptions sweep_world;
  std::string sweep_axis;
  std::vector<double> sweep_grid;
  std::vector<std::string> sweep_laws;
  std::vector<std::string> sweep_detectors{"msp", "ebm", "mah"};
  std::size_t sweep_test_size = presets::kDeskSideSize;
  std::string sweep_size_preset;
  std::string sweep_manifest;
  double sweep_temperature = 1.0;
  double sweep_ridge = 1e-6;
  std::uint64_t sweep_seed = kDefaultSeed;
  std::string sweep_out;
  bool sweep_svg = false;
  bool sweep_no_timestamp = false;

  CLI::App* synth = nullptr;
  CLI::App* fit = nullptr;
  CLI::App* score = nullptr;
  CLI::App* calibrate = nullptr;
  CLI::App* eval = nullptr;
  CLI::App* sweep = nullptr;

  Cli() {
    app.require_subcommand(1);
    app.footer(preset_footer());
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
        ->capture_default_str();

    const auto add_config = [](CLI::App* sub) {
      sub->add_option("--config", "Flat key = value file supplying defaults for flags");
    };

    synth = app.add_subcommand("synth", "Generate a synthetic world: OODF tables + manifest");
    synth_world.add_to(*synth);
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--format", synth_format, "Table format: oodf | csv")
        ->capture_default_str();
    synth->add_option("--seed", synth_seed, "Random seed")
        ->envname("OODGATE_SEED")
        ->capture_default_str();
    synth->add_flag("--no-timestamp", synth_no_timestamp, "Omit generated_at from world.json");
    add_config(synth);

    fit = app.add_subcommand("fit", "Fit a Mahalanobis detector on labeled ID features");
    fit->add_option("--input", fit_input, "Detector-fit table");
    fit->add_option("--manifest", fit_manifest, "Use the manifest's ID_FIT_DETECTOR entry");
    fit->add_option("--format", fit_format, "auto | oodf | csv")->capture_default_str();
    fit->add_option("--method", fit_method, "Detector method (only mah has a fit)")
        ->capture_default_str();
    fit->add_option("--ridge", fit_ridge, "Covariance ridge, relative to trace / d")
        ->capture_default_str();
    fit->add_option("--out", fit_out, "Model file (OODM)")->required();
    add_config(fit);

    score = app.add_subcommand("score", "Score a feature table with one detector");
    score->add_option("--input", score_input, "Feature table to score")->required();
    score->add_option("--format", score_format, "auto | oodf | csv")->capture_default_str();
    score->add_option("--method", score_method, "msp | ebm | mah")->required();
    score->add_option("--model", score_model, "OODM model (mah only)");
    score->add_option("--temperature", score_temperature, "Energy temperature T")
        ->capture_default_str();
    score->add_option("--out", score_out, "Score CSV (index,score); stdout if omitted");
    add_config(score);

    const auto add_score_inputs = [this](CLI::App* sub) {
      sub->add_option("--id", id_scores, "ID score CSV")->required();
      sub->add_option("--ood", ood_scores, "OOD score CSV")->required();
      sub->add_option("--criterion", criterion, "youden | fpr-at-tpr")->capture_default_str();
      sub->add_option("--target-tpr", target_tpr, "Target TPR for fpr-at-tpr")
          ->capture_default_str();
    };
    calibrate = app.add_subcommand("calibrate", "Pick an operating threshold");
    add_score_inputs(calibrate);
    calibrate->add_option("--out", calib_out, "Calibration JSON; stdout if omitted");
    add_config(calibrate);

    eval = app.add_subcommand("eval", "AUROC, FPR95, threshold and quartiles as JSON");
    add_score_inputs(eval);
    eval->add_option("--method", eval_method, "Method the scores came from: msp | ebm | mah")
        ->required();
    eval->add_option("--fpr-tpr", eval_fpr_tpr, "TPR level for the fpr95 field")
        ->capture_default_str();
    eval->add_option("--out", eval_out, "EvalReport JSON; stdout if omitted");
    eval->add_option("--svg", eval_svg, "Also write the ROC curve as SVG");
    add_config(eval);

    sweep = app.add_subcommand("sweep", "Run an accuracy, domain-distance or imbalance sweep");
    sweep_world.add_to(*sweep);
    sweep->add_option("--axis", sweep_axis, "accuracy | distance | imbalance")->required();
    sweep->add_option("--grid", sweep_grid,
                      "Label-noise levels (accuracy) or OOD distances (distance)")
        ->delimiter(',');
    sweep->add_option("--laws", sweep_laws, "Fit-set laws for the imbalance axis")
        ->delimiter(',');
    sweep->add_option("--detectors", sweep_detectors, "Detectors to evaluate")
        ->delimiter(',')
        ->capture_default_str();
    sweep->add_option("--test-size", sweep_test_size, "Rows per side after size matching")
        ->capture_default_str();
    sweep->add_option("--size-preset", sweep_size_preset,
                      "Named per-side size; overrides --test-size (see presets below)");
    sweep->add_option("--manifest", sweep_manifest, "Use exported dumps instead of a world");
    sweep->add_option("--temperature", sweep_temperature, "Energy temperature T")
        ->capture_default_str();
    sweep->add_option("--ridge", sweep_ridge, "Mahalanobis ridge")->capture_default_str();
    sweep->add_option("--seed", sweep_seed, "Random seed")
        ->envname("OODGATE_SEED")
        ->capture_default_str();
    sweep->add_option("--out", sweep_out, "Output directory")->required();
    sweep->add_flag("--svg", sweep_svg, "Also write auroc.svg");
    sweep->add_flag("--no-timestamp", sweep_no_timestamp, "Omit generated_at from summary.json");
    add_config(sweep);
  }

  void configure_logging() const {
    auto logger = spdlog::get("oodgate");
    if (!logger) logger = spdlog::stderr_color_mt("oodgate");
    spdlog::set_default_logger(logger);
    const auto level = spdlog::level::from_str(log_level);
    if (level == spdlog::level::off && log_level != "off") {
      throw ValidationError(fmt::format("unknown log level '{}'", log_level));
    }
    spdlog::set_level(level);
  }

  int dispatch() {
    if (synth->parsed()) return run_synth();
    if (fit->parsed()) return run_fit();
    if (score->parsed()) return run_score();
    if (calibrate->parsed()) return run_calibrate();
    if (eval->parsed()) return run_eval();
    if (sweep->parsed()) return run_sweep_cmd();
    return kExitUsage;
  }

  int run_synth() {
    const auto spec = synth_world.spec(synth_seed);
    spec.validate();
    const auto format = parse_table_format(synth_format);
    const auto ext = format == TableFormat::kCsv ? ".csv" : ".oodf";
    const auto world = generate_world(spec);

    const fs::path out(synth_out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", out.string(), ec.message()));

    DatasetManifest manifest;
    manifest.name = fmt::format("synthetic c={} d={} seed={}", spec.classes, spec.dim, spec.seed);
    const auto put = [&](const FeatureTable& t, const std::string& stem, Role role,
                         const std::string& ood_name) {
      const auto file = stem + ext;
      write_feature_table(t, out / file, format);
      manifest.entries.push_back(ManifestEntry{file, role, ood_name, format});
    };
    put(world.id.classifier_train, "id_train", Role::kIdTrainClassifier, {});
    put(world.id.detector_fit, "id_fit", Role::kIdFitDetector, {});
    put(world.id.test, "id_test", Role::kIdTest, {});
    for (const auto& ood : world.ood) put(ood.table, ood.name, Role::kOodTest, ood.name);
    write_manifest(manifest, out / "manifest.tsv");

    Json summary;
    summary["classes"] = spec.classes;
    summary["dim"] = spec.dim;
    summary["class_separation"] = spec.class_separation;
    summary["within_class_sigma"] = spec.within_class_sigma;
    summary["label_noise"] = spec.label_noise;
    summary["ood_distances"] = spec.ood_distances;
    summary["n_per_class"] = spec.n_per_class.label();
    summary["seed"] = spec.seed;
    summary["classifier_accuracy"] = world.classifier_accuracy;
    Json sizes;
    sizes["id_train"] = world.id.classifier_train.n();
    sizes["id_fit"] = world.id.detector_fit.n();
    sizes["id_test"] = world.id.test.n();
    for (const auto& ood : world.ood) sizes[ood.name] = ood.table.n();
    summary["sizes"] = sizes;
    if (!synth_no_timestamp) summary["generated_at"] = utc_timestamp();
    write_text_file(out / "world.json", summary.dump(2) + "\n");
    spdlog::info("wrote world to {}", out.string());
    return kExitOk;
  }

  int run_fit() {
    const auto method = parse_method(fit_method);
    if (method != Method::kMahalanobis) {
      throw ValidationError(
          fmt::format("{} has no fit step; score it directly", to_string(method)));
    }
    FeatureTable table = [&] {
      if (!fit_manifest.empty()) {
        require_file(fit_manifest, "manifest");
        const auto manifest = read_manifest(fit_manifest);
        const auto fits = manifest.with_role(Role::kIdFitDetector);
        if (fits.size() != 1) {
          throw ValidationError("manifest must have exactly one ID_FIT_DETECTOR entry");
        }
        return read_feature_table(manifest.resolve(*fits.front()), fits.front()->format);
      }
      return load_table(fit_input, fit_format);
    }();
    DetectorConfig config{method, 1.0, fit_ridge};
    config.validate();
    const auto model = fit_mahalanobis(table, fit_ridge);
    ensure_parent(fit_out);
    write_model(model, fit_out);
    return kExitOk;
  }

  int run_score() {
    const auto method = parse_method(score_method);
    DetectorConfig config{method, score_temperature, 1e-6};
    config.validate();
    if (method == Method::kMahalanobis) require_file(score_model, "model");
    const auto table = load_table(score_input, score_format);
    const auto detector = method == Method::kMahalanobis
                              ? Detector::with_model(config, read_model(score_model))
                              : Detector::logit_based(config);
    emit(format_scores_csv(detector.score(table)), score_out);
    return kExitOk;
  }

  std::pair<ScoreSet, ScoreSet> load_scores(Method method) const {
    require_file(id_scores, "ID scores");
    require_file(ood_scores, "OOD scores");
    return {read_scores_csv(id_scores, method), read_scores_csv(ood_scores, method)};
  }

  int run_calibrate() {
    const auto crit = parse_criterion(criterion, target_tpr);
    const auto [id, ood] = load_scores(Method::kMsp);
    emit(calibration_to_json(calibrate_threshold(id.scores, ood.scores, crit), crit), calib_out);
    return kExitOk;
  }

  int run_eval() {
    const auto method = parse_method(eval_method);
    const auto crit = parse_criterion(criterion, target_tpr);
    const auto [id, ood] = load_scores(method);
    const auto report = evaluate(id, ood, crit, eval_fpr_tpr);
    emit(to_json(report), eval_out);
    if (!eval_svg.empty()) {
      ensure_parent(eval_svg);
      write_text_file(eval_svg, render_roc_svg(roc_curve(id, ood), report.method));
    }
    return kExitOk;
  }

  int run_sweep_cmd() {
    SweepSpec spec;
    spec.axis = parse_axis(sweep_axis);
    spec.seed = sweep_seed;
    if (!sweep_manifest.empty()) {
      require_file(sweep_manifest, "manifest");
      spec.manifest = sweep_manifest;
    } else {
      spec.base_world = sweep_world.spec(sweep_seed);
    }
    spec.grid = sweep_grid;
    for (const auto& law : sweep_laws) spec.laws.push_back(SampleLaw::parse(law));
    for (const auto& name : sweep_detectors) {
      spec.detectors.push_back(DetectorConfig{parse_method(name), sweep_temperature, sweep_ridge});
    }
    spec.test_size = sweep_size_preset.empty() ? sweep_test_size
                                               : presets::size_preset(sweep_size_preset);
    spec.validate();
    const auto result = run_sweep(spec);

    const fs::path out(sweep_out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", out.string(), ec.message()));
    write_text_file(out / "rows.jsonl", to_json_lines(result));
    write_text_file(out / "summary.json",
                    summary_json(result, sweep_no_timestamp ? "" : utc_timestamp()));
    if (sweep_svg) write_text_file(out / "auroc.svg", render_sweep_svg(result));
    return kExitOk;
  }
};

}  // namespace

std::string help_text() {
  Cli cli;
  return cli.app.help();
}

int run(const std::vector<std::string>& raw_args) {
  Cli cli;
  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      cli.app.parse(args);
    } catch (const CLI::ParseError& e) {
      const int code = cli.app.exit(e);
      return code == 0 ? kExitOk : kExitUsage;
    }
    cli.configure_logging();
    return cli.dispatch();
  } catch (const ValidationError& e) {
    std::cerr << "oodgate: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "oodgate: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "oodgate: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "oodgate: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace oodgate::cli
