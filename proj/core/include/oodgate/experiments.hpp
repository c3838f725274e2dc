#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oodgate/detectors.hpp"
#include "oodgate/synthetic.hpp"

namespace oodgate {

/// Dataset sizes of the original insect study, kept as named presets for
/// runs on real exported dumps. Synthetic sweeps default to kDeskSideSize.
namespace presets {
inline constexpr std::size_t kInsectClassCount = 142;
inline constexpr std::size_t kBalancedPerClass = 411;
inline constexpr std::size_t kBalancedFitTotal = 58'362;  // 411 * 142
inline constexpr std::size_t kNonInsectaSize = 74'740;    // accuracy-sweep test size
inline constexpr std::size_t kHumanFaceSize = 3'059;      // smallest OOD set
inline constexpr std::size_t kOodInsectSize = 56'487;
inline constexpr std::size_t kImageNetSize = 9'730;
inline constexpr std::size_t kDeskSideSize = 2'000;

struct SizePreset {
  std::string_view name;
  std::size_t size;
  std::string_view use;
};

inline constexpr SizePreset kSizePresets[] = {
    {"desk", kDeskSideSize, "default per-side test size for synthetic sweeps"},
    {"non-insecta", kNonInsectaSize, "per-side test size of the accuracy sweep"},
    {"human-face", kHumanFaceSize, "per-side test size of the domain-shift sweep"},
    {"ood-insect", kOodInsectSize, "size of the unseen-insect OOD set"},
    {"imagenet", kImageNetSize, "size of the ImageNet OOD set"},
    {"balanced-fit", kBalancedFitTotal, "detector-fit total of the imbalance sweep (411 x 142)"},
};

/// Throws ValidationError for unknown names.
std::size_t size_preset(std::string_view name);
}  // namespace presets

enum class SweepAxis { kAccuracy, kDomainDistance, kImbalance };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_axis(std::string_view text);

struct SweepSpec {
  SweepAxis axis = SweepAxis::kAccuracy;
  SyntheticSpec base_world;
  /// When set, tables come from this manifest instead of a synthetic world.
  /// Supported for the domain-distance axis (one grid point per OOD_TEST
  /// entry) and the imbalance axis.
  std::optional<std::filesystem::path> manifest;
  std::vector<double> grid;      // label-noise levels or OOD distances
  std::vector<SampleLaw> laws;   // imbalance grid
  std::vector<DetectorConfig> detectors;
  std::size_t test_size = presets::kDeskSideSize;  // per side; 0 keeps all
  std::uint64_t seed = 42;

  void validate() const;
};

struct SweepRow {
  std::string axis_value;   // printable grid value
  double axis_number = 0.0; // numeric grid value; grid index for categorical axes
  Method method = Method::kMsp;
  double classifier_accuracy = 0.0;
  double auroc = 0.0;
  double fpr95 = 0.0;
  std::uint64_t n_id = 0;
  std::uint64_t n_ood = 0;
};

struct SweepResult {
  SweepSpec spec;
  std::vector<SweepRow> rows;  // grid-major, detector-minor
};

/// Label noise per grid point; MAH fitted on the detector-fit part; ID test
/// and OOD sets subsampled to equal size.
SweepResult run_accuracy_sweep(const SweepSpec& spec);
/// One world with an OOD table per grid distance; every set size-matched
/// to the smallest.
SweepResult run_domain_shift_sweep(const SweepSpec& spec);
/// MAH refitted on each law's subsample of the detector-fit part (all laws
/// must share one total); MSP and energy scored once, since their only fit
/// is the classifier itself.
SweepResult run_imbalance_sweep(const SweepSpec& spec);
SweepResult run_sweep(const SweepSpec& spec);

/// One JSON object per row, newline-terminated.
std::string to_json_lines(const SweepResult& result);
/// Provenance: the full spec, seeds and row count. `timestamp` is included
/// verbatim when nonempty.
std::string summary_json(const SweepResult& result, std::string_view timestamp = {});
/// AUROC per detector across the grid.
std::string render_sweep_svg(const SweepResult& result);

/// Sorted random subset of [0, n) of size k.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t k, std::uint64_t seed,
                                           std::uint64_t stream_index);

}  // namespace oodgate
