#include "doctest.h"

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "oodgate/detectors.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/gaussian_model.hpp"

using namespace oodgate;
using oodgate::testing::random_table;
using oodgate::testing::TempDir;

namespace {

FeatureTable one_dim(std::vector<float> values, std::vector<Label> labels) {
  RowMatrixF f(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) f(static_cast<Eigen::Index>(i), 0) = values[i];
  return FeatureTable::create(f, RowMatrixF(f.rows(), 0), std::move(labels));
}

}  // namespace

TEST_CASE("one-dimensional two-class example") {
  // Class A at {0, 2}, class B at {10, 12}: means 1 and 11, pooled variance 1.
  const auto table = one_dim({0.0F, 2.0F, 10.0F, 12.0F}, {0, 0, 1, 1});
  const auto model = fit_mahalanobis(table, 0.0);
  CHECK(model.means()(0, 0) == 1.0);
  CHECK(model.means()(1, 0) == 11.0);
  CHECK(model.covariance()(0, 0) == 1.0);
  RowMatrixD q(1, 1);
  q << 4.0;
  CHECK(score_mahalanobis(model, q).scores[0] == doctest::Approx(-9.0).epsilon(1e-15));
}

TEST_CASE("scores are zero at each class mean and at most zero elsewhere") {
  const auto table = random_table(200, 5, 4, 12);
  const auto model = fit_mahalanobis(table);
  const auto at_means = score_mahalanobis(model, model.means());
  for (double s : at_means.scores) CHECK(std::abs(s) < 1e-12);
  for (double s : score_mahalanobis(model, table).scores) CHECK(s <= 0.0);
}

TEST_CASE("agreement with the direct oracle") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + gen() % 12;
    const std::size_t c = 2 + gen() % 6;
    const std::size_t n = c * (d + 3) + gen() % 50;
    const auto table = random_table(n, d, c, gen(), false);
    const auto model = fit_mahalanobis(table, 0.0);
    const auto direct = testing::direct_gaussian_fit(table);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        CHECK(model.covariance()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
              doctest::Approx(direct.covariance[i][j]).epsilon(1e-10).scale(1.0));
      }
    }
    const auto queries = random_table(10, d, 2, gen(), false);
    const auto scores = score_mahalanobis(model, queries);
    for (std::size_t r = 0; r < 10; ++r) {
      std::vector<double> q(d);
      for (std::size_t j = 0; j < d; ++j) {
        q[j] = queries.features()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
      }
      CHECK(scores.scores[r] ==
            doctest::Approx(testing::direct_mahalanobis_oracle(direct, q)).epsilon(1e-8));
    }
  }
}

TEST_CASE("default ridge is relative to the mean variance") {
  const auto table = random_table(100, 3, 2, 5, false);
  const auto model = fit_mahalanobis(table);
  const auto& cov = model.covariance();
  const double expected = 1e-6 * cov.trace() / 3.0;
  CHECK((model.regularized_covariance() - cov).diagonal().minCoeff() ==
        doctest::Approx(expected).epsilon(1e-9));
  const auto direct = testing::direct_gaussian_fit(table);
  const std::vector<double> q{0.3, -0.2, 1.0};
  RowMatrixD qm(1, 3);
  qm << 0.3, -0.2, 1.0;
  CHECK(score_mahalanobis(model, qm).scores[0] ==
        doctest::Approx(testing::direct_mahalanobis_oracle(direct, q, expected)).epsilon(1e-8));
}

TEST_CASE("degenerate scatter is regularized, not rejected") {
  // Identical points in both classes: zero covariance, trace 0.
  RowMatrixF f = RowMatrixF::Constant(6, 3, 2.0F);
  const auto table = FeatureTable::create(f, RowMatrixF(6, 0), {0, 0, 0, 1, 1, 1});
  const auto model = fit_mahalanobis(table);
  RowMatrixD q = RowMatrixD::Constant(1, 3, 2.0);
  q(0, 0) = 3.0;
  CHECK(score_mahalanobis(model, q).scores[0] ==
        doctest::Approx(-1.0 / GaussianClassModel::kAbsoluteRidgeFloor).epsilon(1e-9));
}

TEST_CASE("collinear features with no ridge are reported as numerical errors") {
  RowMatrixF f(4, 2);
  f << 0, 0, 1, 1, 2, 2, 3, 3;
  const auto table = FeatureTable::create(f, RowMatrixF(4, 0), {0, 1, 0, 1});
  CHECK_THROWS_AS(fit_mahalanobis(table, 0.0), NumericalError);
  CHECK_NOTHROW(fit_mahalanobis(table));
}

TEST_CASE("affine invariance") {
  const auto table = random_table(150, 3, 3, 21, false);
  Eigen::Matrix3d a;
  a << 2.0, 0.5, 0.0, -1.0, 1.0, 0.3, 0.0, 0.2, 3.0;
  const Eigen::RowVector3d b(5.0, -2.0, 1.0);
  RowMatrixD x = table.features().cast<double>();
  RowMatrixD y = (x * a.transpose()).rowwise() + b;
  const auto table_y =
      FeatureTable::create(y.cast<float>(), RowMatrixF(150, 0),
                           std::vector<Label>(table.labels().begin(), table.labels().end()));
  const auto mx = fit_mahalanobis(table, 0.0);
  const auto my = fit_mahalanobis(table_y, 0.0);
  RowMatrixD qx(2, 3);
  qx << 0.1, 0.2, 0.3, 4.0, -1.0, 2.0;
  RowMatrixD qy = (qx * a.transpose()).rowwise() + b;
  const auto sx = score_mahalanobis(mx, qx);
  const auto sy = score_mahalanobis(my, qy);
  // Stored features are binary32, so the transformed fit differs by rounding.
  for (int i = 0; i < 2; ++i) CHECK(sy.scores[i] == doctest::Approx(sx.scores[i]).epsilon(1e-4));
}

TEST_CASE("fit preconditions") {
  auto unlabeled = random_table(10, 2, 2, 1, false);
  std::vector<Label> y(10, 0);
  y[3] = kUnlabeled;
  CHECK_THROWS_AS(fit_mahalanobis(unlabeled.with_labels(y)), ValidationError);

  // Logits declare three classes but class 2 has no samples.
  const auto three = random_table(9, 2, 3, 4);
  std::vector<Label> two_only(9, 0);
  for (std::size_t i = 0; i < 9; i += 2) two_only[i] = 1;
  try {
    fit_mahalanobis(three.with_labels(two_only));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("class 2") != std::string::npos);
  }

  const auto model = fit_mahalanobis(random_table(30, 3, 2, 2));
  CHECK_THROWS_AS(score_mahalanobis(model, RowMatrixD::Zero(2, 4)), ValidationError);
  CHECK_THROWS_AS(fit_mahalanobis(random_table(30, 3, 2, 2), -1.0), ValidationError);
}

TEST_CASE("model file round trip") {
  TempDir dir("model");
  const auto model = fit_mahalanobis(random_table(80, 4, 3, 9));
  write_model(model, dir / "m.oodm");
  const auto back = read_model(dir / "m.oodm");
  CHECK(back.means() == model.means());
  CHECK(back.covariance() == model.covariance());
  CHECK(back.ridge() == model.ridge());
  CHECK(std::vector<std::uint64_t>(back.per_class_counts().begin(), back.per_class_counts().end()) ==
        std::vector<std::uint64_t>(model.per_class_counts().begin(), model.per_class_counts().end()));
  const auto table = random_table(10, 4, 3, 10);
  CHECK(score_mahalanobis(back, table).scores == score_mahalanobis(model, table).scores);

  auto bytes = encode_model(model);
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_model(bytes), ValidationError);
  bytes = encode_model(model);
  bytes.resize(bytes.size() - 3);
  CHECK_THROWS_AS(decode_model(bytes), ValidationError);
  CHECK_THROWS_AS(read_model(dir / "nope.oodm"), IoError);
}
