#include "doctest.h"

#include <numeric>

#include "fixtures.hpp"
#include "oodgate/detectors.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/metrics.hpp"
#include "oodgate/synthetic.hpp"

using namespace oodgate;
using oodgate::testing::random_table;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.dim = 6;
  spec.n_per_class = SampleLaw::balanced(200);
  spec.ood_distances = {0.0, 1.0, 3.0};
  return spec;
}

}  // namespace

TEST_CASE("world generation is deterministic in the seed") {
  const auto a = generate_world(small_spec());
  const auto b = generate_world(small_spec());
  CHECK(bit_identical(a.id.classifier_train, b.id.classifier_train));
  CHECK(bit_identical(a.id.test, b.id.test));
  REQUIRE(a.ood.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(bit_identical(a.ood[j].table, b.ood[j].table));
  CHECK(a.classifier_accuracy == b.classifier_accuracy);

  auto other = small_spec();
  other.seed = 43;
  CHECK_FALSE(bit_identical(generate_world(other).id.test, a.id.test));
}

TEST_CASE("world shape") {
  const auto w = generate_world(small_spec());
  CHECK(w.id.classifier_train.n() == 560);
  CHECK(w.id.detector_fit.n() == 120);
  CHECK(w.id.test.n() == 120);
  CHECK(w.id.test.c() == 4);
  CHECK(w.id.test.d() == 6);
  CHECK(w.ood[1].name == "ood_d1");
  CHECK(w.ood[1].table.n() == w.id.test.n());
  for (auto label : w.ood[0].table.labels()) CHECK(label == kUnlabeled);
  CHECK(w.true_means.rows() == 4);
  for (Eigen::Index k = 0; k < 4; ++k) {
    CHECK(w.true_means.row(k).norm() == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("classifier accuracy tracks label noise") {
  auto spec = small_spec();
  spec.within_class_sigma = 1e-3;
  CHECK(generate_world(spec).classifier_accuracy == 1.0);

  SyntheticSpec coin;
  coin.classes = 2;
  coin.n_per_class = SampleLaw::balanced(5000);
  coin.label_noise = 0.5;
  CHECK(generate_world(coin).classifier_accuracy == doctest::Approx(0.5).epsilon(0.08));

  // The flipped set only grows with the noise level, so accuracy cannot rise.
  auto sweep = small_spec();
  sweep.n_per_class = SampleLaw::balanced(1000);
  double last = 2.0;
  for (double rho : {0.0, 0.2, 0.4, 0.6, 0.8}) {
    sweep.label_noise = rho;
    const double acc = generate_world(sweep).classifier_accuracy;
    CHECK(acc <= last);
    if (rho == 0.4) CHECK(acc < 0.75);
    last = acc;
  }
  CHECK(last < 0.4);
}

TEST_CASE("energy separation grows with OOD distance") {
  auto spec = small_spec();
  spec.ood_distances = {0.0, 0.5, 1.0, 2.0, 4.0};
  const auto w = generate_world(spec);
  const auto id = score_energy(w.id.test);
  double last = 0.0;
  for (const auto& ood : w.ood) {
    const double a = auroc(roc_curve(id, score_energy(ood.table)));
    CHECK(a >= last - 0.02);
    last = a;
  }
  CHECK(last > 0.99);
}

TEST_CASE("class sizes under each law") {
  CHECK(class_sizes(SampleLaw::balanced(2), 3, 1) == std::vector<std::size_t>{2, 2, 2});
  const auto uni = class_sizes(SampleLaw::uniform(100), 4, 7);
  CHECK(std::accumulate(uni.begin(), uni.end(), std::size_t{0}) == 100);
  for (auto s : uni) CHECK(s >= 1);
  CHECK(class_sizes(SampleLaw::uniform(100), 4, 7) == uni);

  const auto pl = class_sizes(SampleLaw::power_law(1.0, 100), 4, 0);
  CHECK(std::accumulate(pl.begin(), pl.end(), std::size_t{0}) == 100);
  CHECK(std::is_sorted(pl.rbegin(), pl.rend()));
  CHECK(pl == std::vector<std::size_t>{48, 24, 16, 12});
  const auto steep = class_sizes(SampleLaw::power_law(6.0, 20), 5, 0);
  for (auto s : steep) CHECK(s >= 1);
  CHECK(std::accumulate(steep.begin(), steep.end(), std::size_t{0}) == 20);
  CHECK_THROWS_AS(class_sizes(SampleLaw::power_law(1.0, 3), 4, 0), ValidationError);

  CHECK(SampleLaw::balanced(411).total_for(142) == 58362);
}

TEST_CASE("sampling keeps rows verbatim") {
  const auto table = random_table(9, 2, 3, 3);
  const auto picked = sample_imbalanced(table, SampleLaw::balanced(2), 5);
  CHECK(picked.n() == 6);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < picked.n(); ++i) {
    for (std::size_t r = 0; r < table.n(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const auto ii = static_cast<Eigen::Index>(i);
      if (table.features().row(ri) == picked.features().row(ii) &&
          table.logits().row(ri) == picked.logits().row(ii) &&
          table.labels()[r] == picked.labels()[i]) {
        ++matched;
        break;
      }
    }
  }
  CHECK(matched == 6);
  CHECK_THROWS_AS(sample_imbalanced(table, SampleLaw::balanced(4), 5), ValidationError);
}

TEST_CASE("law labels round-trip through the parser") {
  for (const auto& law : {SampleLaw::balanced(411), SampleLaw::power_law(0.5, 400),
                          SampleLaw::uniform(58362)}) {
    CHECK(SampleLaw::parse(law.label()) == law);
  }
  CHECK_THROWS_AS(SampleLaw::parse("zipf:1"), ValidationError);
  CHECK_THROWS_AS(SampleLaw::parse("balanced:x"), ValidationError);
}

TEST_CASE("spec validation") {
  auto spec = small_spec();
  spec.classes = 1;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = small_spec();
  spec.label_noise = 1.0;
  CHECK_THROWS_AS(spec.validate(), ValidationError);
  spec = small_spec();
  spec.ood_distances = {-1.0};
  CHECK_THROWS_AS(spec.validate(), ValidationError);
}
