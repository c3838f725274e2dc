#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oodgate/feature_table.hpp"

namespace oodgate {

/// Where a table sits in the split protocol: classifier training data,
/// detector fitting data, held-out ID test data, or a named OOD test set.
enum class Role { kIdTrainClassifier, kIdFitDetector, kIdTest, kOodTest };

struct ManifestEntry {
  std::filesystem::path path;  // as written; relative paths resolve against base_dir
  Role role = Role::kIdTest;
  std::string ood_name;        // only for kOodTest
  TableFormat format = TableFormat::kBinaryDump;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// Line-oriented manifest: `role<TAB>format<TAB>path`, `#` comments, and an
/// optional `# name: <label>` line carrying the dataset name. Roles are
/// ID_TRAIN_CLASSIFIER, ID_FIT_DETECTOR, ID_TEST and OOD_TEST(<name>).
struct DatasetManifest {
  std::string name;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& entry) const;

  std::vector<const ManifestEntry*> with_role(Role role) const;
  const ManifestEntry& id_test() const;
  std::optional<ManifestEntry> find_ood(std::string_view name) const;

  /// Exactly one ID_TEST, at least one OOD_TEST, and no path shared between
  /// ID_FIT_DETECTOR and ID_TEST entries.
  void validate_for_evaluation() const;
};

std::string role_to_string(Role role, std::string_view ood_name = {});

DatasetManifest parse_manifest(std::string_view text,
                               const std::filesystem::path& base_dir = {});
std::string format_manifest(const DatasetManifest& manifest);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Content check backing the ID_FIT_DETECTOR / ID_TEST disjointness rule:
/// throws if any row (features, logits, label) appears in both tables.
void check_disjoint_content(const FeatureTable& fit, const FeatureTable& test);

}  // namespace oodgate
