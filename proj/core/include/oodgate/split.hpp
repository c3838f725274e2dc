#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "oodgate/feature_table.hpp"

namespace oodgate {

/// Two-stage split: `train_fraction` of each class goes to classifier
/// training (ID1); the remainder is divided `detector_vs_test_fraction` to
/// detector fitting (ID2) and the rest to testing (ID3).
struct SplitPolicy {
  double train_fraction = 0.7;
  double detector_vs_test_fraction = 0.5;
  std::uint64_t seed = 42;

  void validate() const;
};

/// Per-stratum part sizes. Sizes use floor for the earlier part with the
/// remainder flowing on; strata of three or more rows are then adjusted so
/// no part is empty. Strata of one or two rows go to ID1, then ID3.
std::array<std::size_t, 3> stratum_part_sizes(std::size_t stratum_size,
                                              const SplitPolicy& policy);

/// Row indices of each part, ascending. Stratified by label (unlabeled rows
/// form their own stratum) and deterministic in the policy seed.
std::array<std::vector<std::size_t>, 3> split_indices(std::span<const Label> labels,
                                                      const SplitPolicy& policy);

struct IdSplit {
  FeatureTable classifier_train;
  FeatureTable detector_fit;
  FeatureTable test;
};

IdSplit split_id_data(const FeatureTable& table, const SplitPolicy& policy);

}  // namespace oodgate
