#include "oodgate/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "oodgate/errors.hpp"
#include "oodgate/rng.hpp"

namespace oodgate {
namespace {

// Guards floor() against products such as 0.7 * 10 landing a hair below 7.
constexpr double kFloorSlack = 1e-9;

std::size_t floor_fraction(std::size_t count, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(count) * fraction + kFloorSlack));
}

}  // namespace

void SplitPolicy::validate() const {
  const auto inside = [](double f) { return f > 0.0 && f < 1.0; };
  if (!inside(train_fraction) || !inside(detector_vs_test_fraction)) {
    throw ValidationError(fmt::format(
        "split fractions must lie strictly inside (0, 1), got ({}, {})", train_fraction,
        detector_vs_test_fraction));
  }
}

std::array<std::size_t, 3> stratum_part_sizes(std::size_t stratum_size,
                                              const SplitPolicy& policy) {
  if (stratum_size == 0) return {0, 0, 0};
  if (stratum_size == 1) return {1, 0, 0};
  if (stratum_size == 2) return {1, 0, 1};
  std::array<std::size_t, 3> sizes{};
  sizes[0] = floor_fraction(stratum_size, policy.train_fraction);
  const auto rest = stratum_size - sizes[0];
  sizes[1] = floor_fraction(rest, policy.detector_vs_test_fraction);
  sizes[2] = rest - sizes[1];
  for (auto& part : sizes) {
    if (part != 0) continue;
    // Borrow from the largest part; the first one wins ties.
    auto largest = std::max_element(sizes.begin(), sizes.end());
    --*largest;
    ++part;
  }
  return sizes;
}

std::array<std::vector<std::size_t>, 3> split_indices(std::span<const Label> labels,
                                                      const SplitPolicy& policy) {
  policy.validate();
  std::map<Label, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < labels.size(); ++i) strata[labels[i]].push_back(i);

  std::array<std::vector<std::size_t>, 3> parts;
  for (auto& [label, rows] : strata) {
    if (rows.size() < 3) {
      spdlog::warn("class {} has {} sample(s), fewer than the three split parts", label,
                   rows.size());
    }
    Rng rng(policy.seed, Stream::kSplit, static_cast<std::uint64_t>(label + 1));
    rng.shuffle(std::span(rows));
    const auto sizes = stratum_part_sizes(rows.size(), policy);
    auto it = rows.begin();
    for (std::size_t p = 0; p < 3; ++p) {
      parts[p].insert(parts[p].end(), it, it + static_cast<std::ptrdiff_t>(sizes[p]));
      it += static_cast<std::ptrdiff_t>(sizes[p]);
    }
  }
  for (auto& part : parts) std::sort(part.begin(), part.end());
  return parts;
}

IdSplit split_id_data(const FeatureTable& table, const SplitPolicy& policy) {
  if (table.n() < 3) {
    throw ValidationError(fmt::format("split needs at least 3 rows, got {}", table.n()));
  }
  const auto parts = split_indices(table.labels(), policy);
  constexpr std::array<const char*, 3> kNames{"classifier-train", "detector-fit", "test"};
  for (std::size_t p = 0; p < 3; ++p) {
    if (parts[p].empty()) {
      throw ValidationError(fmt::format("split produced an empty {} part", kNames[p]));
    }
  }
  return IdSplit{table.select_rows(parts[0]), table.select_rows(parts[1]),
                 table.select_rows(parts[2])};
}

}  // namespace oodgate
