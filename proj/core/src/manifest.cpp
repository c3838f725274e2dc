#include "oodgate/manifest.hpp"

#include <cstring>
#include <unordered_set>

#include <fmt/format.h>

#include "oodgate/errors.hpp"

namespace oodgate {
namespace {

constexpr std::string_view kNamePrefix = "# name:";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::pair<Role, std::string> parse_role(std::string_view text, std::size_t line_no) {
  if (text == "ID_TRAIN_CLASSIFIER") return {Role::kIdTrainClassifier, {}};
  if (text == "ID_FIT_DETECTOR") return {Role::kIdFitDetector, {}};
  if (text == "ID_TEST") return {Role::kIdTest, {}};
  constexpr std::string_view ood = "OOD_TEST(";
  if (text.starts_with(ood) && text.ends_with(')') && text.size() > ood.size() + 1) {
    return {Role::kOodTest, std::string(text.substr(ood.size(), text.size() - ood.size() - 1))};
  }
  throw ValidationError(fmt::format("manifest line {}: unknown role '{}'", line_no, text));
}

std::string row_key(const FeatureTable& t, std::size_t i) {
  const auto row = static_cast<Eigen::Index>(i);
  std::string key(sizeof(float) * (t.d() + t.c()) + sizeof(Label), '\0');
  char* out = key.data();
  for (Eigen::Index j = 0; j < t.features().cols(); ++j) {
    const float v = t.features()(row, j);
    std::memcpy(out, &v, sizeof v);
    out += sizeof v;
  }
  for (Eigen::Index j = 0; j < t.logits().cols(); ++j) {
    const float v = t.logits()(row, j);
    std::memcpy(out, &v, sizeof v);
    out += sizeof v;
  }
  std::memcpy(out, &t.labels()[i], sizeof(Label));
  return key;
}

}  // namespace

std::string role_to_string(Role role, std::string_view ood_name) {
  switch (role) {
    case Role::kIdTrainClassifier: return "ID_TRAIN_CLASSIFIER";
    case Role::kIdFitDetector: return "ID_FIT_DETECTOR";
    case Role::kIdTest: return "ID_TEST";
    case Role::kOodTest: return fmt::format("OOD_TEST({})", ood_name);
  }
  return "?";
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& entry) const {
  if (entry.path.is_absolute() || base_dir.empty()) return entry.path;
  return base_dir / entry.path;
}

std::vector<const ManifestEntry*> DatasetManifest::with_role(Role role) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.role == role) out.push_back(&e);
  }
  return out;
}

const ManifestEntry& DatasetManifest::id_test() const {
  const auto tests = with_role(Role::kIdTest);
  if (tests.size() != 1) {
    throw ValidationError(
        fmt::format("manifest must have exactly one ID_TEST entry, found {}", tests.size()));
  }
  return *tests.front();
}

std::optional<ManifestEntry> DatasetManifest::find_ood(std::string_view name) const {
  for (const auto& e : entries) {
    if (e.role == Role::kOodTest && e.ood_name == name) return e;
  }
  return std::nullopt;
}

void DatasetManifest::validate_for_evaluation() const {
  const auto& test = id_test();
  if (with_role(Role::kOodTest).empty()) {
    throw ValidationError("manifest must have at least one OOD_TEST entry");
  }
  const auto test_path = std::filesystem::weakly_canonical(resolve(test)).lexically_normal();
  for (const auto* fit : with_role(Role::kIdFitDetector)) {
    const auto fit_path = std::filesystem::weakly_canonical(resolve(*fit)).lexically_normal();
    if (fit_path == test_path) {
      throw ValidationError(fmt::format(
          "ID_FIT_DETECTOR and ID_TEST share the same file '{}'", test.path.string()));
    }
  }
}

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest manifest;
  manifest.base_dir = base_dir;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    const auto raw = text.substr(start, end - start);
    start = end + 1;
    const auto line = trim(raw);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '#') {
      if (line.starts_with(kNamePrefix)) {
        manifest.name = std::string(trim(line.substr(kNamePrefix.size())));
      }
      continue;
    }
    const auto tab1 = raw.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : raw.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw ValidationError(fmt::format(
          "manifest line {}: expected role<TAB>format<TAB>path", line_no));
    }
    ManifestEntry entry;
    auto [role, name] = parse_role(trim(raw.substr(0, tab1)), line_no);
    entry.role = role;
    entry.ood_name = std::move(name);
    try {
      entry.format = parse_table_format(trim(raw.substr(tab1 + 1, tab2 - tab1 - 1)));
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("manifest line {}: {}", line_no, e.what()));
    }
    const auto path = trim(raw.substr(tab2 + 1));
    if (path.empty()) {
      throw ValidationError(fmt::format("manifest line {}: empty path", line_no));
    }
    entry.path = std::filesystem::path(std::string(path));
    manifest.entries.push_back(std::move(entry));
    if (end == text.size()) break;
  }
  return manifest;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out;
  if (!manifest.name.empty()) out += fmt::format("{} {}\n", kNamePrefix, manifest.name);
  out += "# role\tformat\tpath\n";
  for (const auto& e : manifest.entries) {
    out += fmt::format("{}\t{}\t{}\n", role_to_string(e.role, e.ood_name),
                       to_string(e.format), e.path.generic_string());
  }
  return out;
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return parse_manifest(text, path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_text_file(path, format_manifest(manifest));
}

void check_disjoint_content(const FeatureTable& fit, const FeatureTable& test) {
  if (fit.d() != test.d() || fit.c() != test.c()) return;
  std::unordered_set<std::string> seen;
  seen.reserve(fit.n());
  for (std::size_t i = 0; i < fit.n(); ++i) seen.insert(row_key(fit, i));
  for (std::size_t i = 0; i < test.n(); ++i) {
    if (seen.contains(row_key(test, i))) {
      throw ValidationError(fmt::format(
          "ID_TEST row {} also appears in the detector-fit table", i));
    }
  }
}

}  // namespace oodgate
