#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oodgate/feature_table.hpp"
#include "oodgate/split.hpp"

namespace oodgate {

/// How many samples each class gets.
struct SampleLaw {
  enum class Kind { kBalanced, kPowerLaw, kUniform };

  Kind kind = Kind::kBalanced;
  std::size_t per_class = 0;  // kBalanced
  double alpha = 0.0;         // kPowerLaw
  std::size_t total = 0;      // kPowerLaw, kUniform

  static SampleLaw balanced(std::size_t per_class) {
    return {Kind::kBalanced, per_class, 0.0, 0};
  }
  static SampleLaw power_law(double alpha, std::size_t total) {
    return {Kind::kPowerLaw, 0, alpha, total};
  }
  static SampleLaw uniform(std::size_t total) { return {Kind::kUniform, 0, 0.0, total}; }

  /// Total sample count for c classes.
  std::size_t total_for(std::size_t classes) const;

  /// "balanced:411", "powerlaw:2:1000", "uniform:1000".
  std::string label() const;
  static SampleLaw parse(std::string_view text);

  friend bool operator==(const SampleLaw&, const SampleLaw&) = default;
};

/// Per-class sizes under a law.
///   balanced: per_class each.
///   powerlaw: weight (k + 1)^-alpha for class k.
///   uniform: independent weights drawn from (0, 1] on the kClassSizes stream.
/// Weighted laws scale to `total`, floor, hand the remainder to the largest
/// fractional parts (lower class index first on ties), then lift any empty
/// class to one sample by taking from the currently largest class.
std::vector<std::size_t> class_sizes(const SampleLaw& law, std::size_t classes,
                                     std::uint64_t seed);

/// Subsample a labeled table to the sizes given by `law`. Rows are copied
/// verbatim and keep their original relative order.
FeatureTable sample_imbalanced(const FeatureTable& table, const SampleLaw& law,
                               std::uint64_t seed);

/// Parameters of a Gaussian-mixture world.
struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t dim = 8;
  double class_separation = 4.0;   // radius of the sphere holding class means
  double within_class_sigma = 1.0;
  double label_noise = 0.0;        // probability a label moves to another class
  std::vector<double> ood_distances{2.0};  // in units of class_separation
  SampleLaw n_per_class = SampleLaw::balanced(300);
  std::size_t ood_samples = 0;     // per OOD table; 0 matches the ID test size
  double train_fraction = 0.7;
  double detector_vs_test_fraction = 0.5;
  std::uint64_t seed = 42;

  void validate() const;
  SplitPolicy split_policy() const {
    return {train_fraction, detector_vs_test_fraction, seed};
  }
};

struct OodTable {
  std::string name;
  double distance = 0.0;
  FeatureTable table;
};

struct SyntheticWorld {
  IdSplit id;
  std::vector<OodTable> ood;
  RowMatrixD true_means;
  double classifier_accuracy = 0.0;  // argmax(logits) == label on the ID test part
};

/// Builds a world as a pure function of the spec.
///
/// Class means sit on the sphere of radius class_separation. ID features are
/// mean + sigma * N(0, I). Each label is flipped to a uniformly chosen other
/// class with probability label_noise; the classifier-train and detector-fit
/// parts carry the flipped labels, the test part the true ones.
///
/// The synthetic classifier is the Gaussian model learnt from the flipped
/// classifier-train labels: logit_k(x) = log N(x; m_k, sigma^2 I) - log c,
/// where m_k are the class means under the flipped labels. A sample whose
/// label was flipped also has the logits of its true and flipped class
/// swapped, as a network that memorized its noisy label would.
///
/// OOD table j is the ID mixture translated by distance_j * class_separation
/// along its own random unit direction; at distance 0 it matches the ID
/// distribution. OOD components are drawn uniformly over classes.
SyntheticWorld generate_world(const SyntheticSpec& spec);

std::string ood_table_name(double distance);

}  // namespace oodgate
