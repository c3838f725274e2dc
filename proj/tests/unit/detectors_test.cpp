#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "oodgate/detectors.hpp"
#include "oodgate/errors.hpp"

using namespace oodgate;
using oodgate::testing::random_table;
using oodgate::testing::TempDir;

namespace {

RowMatrixD row(std::initializer_list<double> values) {
  RowMatrixD m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) m(0, j++) = v;
  return m;
}

}  // namespace

TEST_CASE("energy and max-softmax on fixed logits") {
  const auto logits = row({1.0, 2.0, 3.0});
  CHECK(score_energy(logits).scores[0] == doctest::Approx(3.407605964444380304).epsilon(1e-14));
  CHECK(score_msp(logits).scores[0] == doctest::Approx(0.665240955774821889).epsilon(1e-14));

  CHECK(score_energy(row({0.0, 0.0})).scores[0] == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(score_energy(row({0.0, 0.0}), 2.0).scores[0] ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(score_msp(row({0.0, 0.0, 0.0, 0.0})).scores[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("large logits stay finite") {
  const auto big = score_energy(row({1000.0, 1000.0}));
  CHECK(big.scores[0] == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  const auto mixed = score_msp(row({-1000.0, 1000.0}));
  CHECK(mixed.scores[0] == 1.0);
  CHECK_NOTHROW(mixed.validate());
}

TEST_CASE("softmax and log_sum_exp helpers") {
  const std::vector<double> v{0.5, -1.0, 2.0};
  const auto p = softmax(v);
  CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(static_cast<double>(testing::naive_log_sum_exp(v)) ==
        doctest::Approx(log_sum_exp(v)).epsilon(1e-14));
  CHECK(static_cast<double>(testing::naive_max_softmax(v)) == doctest::Approx(p[2]).epsilon(1e-14));
}

TEST_CASE("property: shift behaviour and agreement with long-double oracles") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index c = 2 + static_cast<Eigen::Index>(gen() % 10);
    RowMatrixD x(1, c);
    for (Eigen::Index j = 0; j < c; ++j) x(0, j) = normal(gen);
    const double shift = normal(gen) * 10.0;
    RowMatrixD shifted = x.array() + shift;

    const double e = score_energy(x).scores[0];
    const double m = score_msp(x).scores[0];
    CHECK(score_energy(shifted).scores[0] == doctest::Approx(e + shift).epsilon(1e-12));
    CHECK(score_msp(shifted).scores[0] == doctest::Approx(m).epsilon(1e-12));

    const std::vector<double> v(x.data(), x.data() + c);
    CHECK(e == doctest::Approx(static_cast<double>(testing::naive_log_sum_exp(v))).epsilon(1e-13));
    CHECK(m == doctest::Approx(static_cast<double>(testing::naive_max_softmax(v))).epsilon(1e-13));
    CHECK(m >= 1.0 / static_cast<double>(c) - 1e-15);
    CHECK(m <= 1.0);

    // Raising the top logit cannot lower either score.
    Eigen::Index top = 0;
    x.row(0).maxCoeff(&top);
    RowMatrixD raised = x;
    raised(0, top) += 1.0;
    CHECK(score_energy(raised).scores[0] > e);
    CHECK(score_msp(raised).scores[0] >= m);
  }
}

TEST_CASE("scores are independent of batch composition") {
  const auto table = random_table(50, 3, 6, 8);
  const auto all = score_energy(table, 1.5);
  for (std::size_t i = 0; i < table.n(); i += 7) {
    const std::vector<std::size_t> one{i};
    CHECK(score_energy(table.select_rows(one), 1.5).scores[0] == all.scores[i]);
  }
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(score_msp(RowMatrixD::Zero(3, 1)), ValidationError);
  CHECK_THROWS_AS(score_energy(row({1.0, 2.0}), 0.0), ValidationError);
  CHECK_THROWS_AS(score_energy(random_table(5, 2, 3, 1, false)), ValidationError);
  CHECK_THROWS_AS((DetectorConfig{Method::kEnergy, -1.0, 1e-6}).validate(), ValidationError);
  ScoreSet bad{Method::kMsp, {0.5, std::nan("")}};
  CHECK_THROWS_AS(bad.validate(), NumericalError);
}

TEST_CASE("method names") {
  CHECK(to_string(Method::kMsp) == "MSP");
  CHECK(to_string(Method::kEnergy) == "EBM");
  CHECK(to_string(Method::kMahalanobis) == "MAH");
  CHECK(parse_method("ebm") == Method::kEnergy);
  CHECK(parse_method("energy") == Method::kEnergy);
  CHECK(parse_method("MAH") == Method::kMahalanobis);
  CHECK_THROWS_AS(parse_method("knn"), ValidationError);
}

TEST_CASE("Detector facade") {
  const auto table = random_table(60, 4, 3, 4);
  const auto mah = Detector::fit({Method::kMahalanobis, 1.0, 1e-6}, table);
  CHECK(mah.model().has_value());
  CHECK(mah.score(table).size() == 60);
  const auto msp = Detector::logit_based({Method::kMsp, 1.0, 1e-6});
  CHECK(msp.score(table).scores == score_msp(table).scores);
  CHECK_THROWS_AS(Detector::logit_based({Method::kMahalanobis, 1.0, 1e-6}), ValidationError);
}

TEST_CASE("score CSV round trip is exact") {
  TempDir dir("scores");
  const auto scores = score_energy(random_table(40, 2, 5, 6));
  write_scores_csv(scores, dir / "s.csv");
  const auto back = read_scores_csv(dir / "s.csv", Method::kEnergy);
  CHECK(back.scores == scores.scores);
  CHECK(format_scores_csv(ScoreSet{Method::kMsp, {0.5, 1.0}}) == "index,score\n0,0.5\n1,1\n");
  CHECK_THROWS_AS(parse_scores_csv("index,score\n1,0.5\n", Method::kMsp), ValidationError);
  CHECK_THROWS_AS(parse_scores_csv("idx,score\n0,0.5\n", Method::kMsp), ValidationError);
  CHECK_THROWS_AS(parse_scores_csv("index,score\n0,zz\n", Method::kMsp), ValidationError);
}

TEST_CASE("single-class and saturated rows") {
  const std::vector<double> one{5.0};
  CHECK(softmax(one) == std::vector<double>{1.0});
  CHECK(score_energy(row({2.5})).scores[0] == 2.5);
  CHECK(score_msp(row({100.0, 0.0})).scores[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(score_msp(row({0.0, 0.0})).scores[0] == 0.5);
}
