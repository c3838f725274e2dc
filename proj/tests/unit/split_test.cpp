#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/split.hpp"

using namespace oodgate;
using oodgate::testing::random_table;

TEST_CASE("part sizes for the default policy") {
  const SplitPolicy policy;
  CHECK(stratum_part_sizes(10, policy) == std::array<std::size_t, 3>{7, 1, 2});
  CHECK(stratum_part_sizes(1000, policy) == std::array<std::size_t, 3>{700, 150, 150});
  CHECK(stratum_part_sizes(3, policy) == std::array<std::size_t, 3>{1, 1, 1});
  CHECK(stratum_part_sizes(2, policy) == std::array<std::size_t, 3>{1, 0, 1});
  CHECK(stratum_part_sizes(1, policy) == std::array<std::size_t, 3>{1, 0, 0});
  // 0.7 * 100 is 69.999... in binary; the slack keeps the intended 70.
  CHECK(stratum_part_sizes(100, policy)[0] == 70);
}

TEST_CASE("policy validation") {
  CHECK_THROWS_AS((SplitPolicy{0.0, 0.5, 1}).validate(), ValidationError);
  CHECK_THROWS_AS((SplitPolicy{0.7, 1.0, 1}).validate(), ValidationError);
  CHECK_NOTHROW(SplitPolicy{}.validate());
}

TEST_CASE("split is a stratified partition and deterministic in the seed") {
  const auto table = random_table(1000, 2, 4, 5);
  const SplitPolicy policy;
  const auto parts = split_indices(table.labels(), policy);
  // Four strata of 250 rows, each split (175, 37, 38).
  CHECK(parts[0].size() == 700);
  CHECK(parts[1].size() == 148);
  CHECK(parts[2].size() == 152);

  std::vector<std::size_t> all;
  for (const auto& p : parts) {
    CHECK(std::is_sorted(p.begin(), p.end()));
    all.insert(all.end(), p.begin(), p.end());
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expected(1000);
  std::iota(expected.begin(), expected.end(), 0);
  CHECK(all == expected);

  for (const auto& p : parts) {
    std::array<std::size_t, 4> per_class{};
    for (auto i : p) ++per_class[static_cast<std::size_t>(table.labels()[i])];
    for (std::size_t k = 1; k < 4; ++k) CHECK(per_class[k] == per_class[0]);
  }

  CHECK(split_indices(table.labels(), policy) == parts);
  SplitPolicy other = policy;
  other.seed = 43;
  CHECK(split_indices(table.labels(), other) != parts);
}

TEST_CASE("tiny classes and unlabeled rows") {
  const std::vector<Label> labels{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 2, kUnlabeled, kUnlabeled,
                                  kUnlabeled};
  const auto parts = split_indices(labels, SplitPolicy{});
  const auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  CHECK(contains(parts[0], 10));
  CHECK((contains(parts[0], 11) != contains(parts[0], 12)));
  CHECK((contains(parts[2], 11) != contains(parts[2], 12)));
  std::size_t unlabeled_seen = 0;
  for (const auto& p : parts) {
    for (auto i : p) unlabeled_seen += i >= 13;
  }
  CHECK(unlabeled_seen == 3);
}

TEST_CASE("split_id_data materialises the three parts") {
  const auto table = random_table(30, 3, 3, 2);
  const auto split = split_id_data(table, SplitPolicy{});
  CHECK(split.classifier_train.n() == 21);
  CHECK(split.detector_fit.n() == 3);
  CHECK(split.test.n() == 6);
  CHECK_THROWS_AS(split_id_data(random_table(2, 3, 2, 1), SplitPolicy{}), ValidationError);
}
