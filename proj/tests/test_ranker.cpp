#include "lovm/ranker.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace lovm;

namespace {

// Coefficients in raw feature units.
Vector raw_weights(const LinearRanker& m) { return m.weights.cwiseQuotient(m.feature_std); }

double raw_bias(const LinearRanker& m) {
  return m.bias - m.weights.cwiseQuotient(m.feature_std).dot(m.feature_mean);
}

}  // namespace

TEST_CASE("planted linear map is recovered without ridge") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 30, 5);
    const Vector w = oracle::random_matrix(rng, 5, 1).col(0);
    const Vector y = (x * w).array() + 0.3;
    const LinearRanker m = fit_ranker(x, y, 0.0);
    CHECK((raw_weights(m) - w).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(std::abs(raw_bias(m) - 0.3) < 1e-6);
    for (Index r = 0; r < x.rows(); ++r) CHECK(std::abs(predict(m, Vector(x.row(r).transpose())) - y[r]) < 1e-6);
    CHECK(m.training_loss < 1e-12);
  }
}

TEST_CASE("constant targets and the ridge limit") {
  std::mt19937_64 rng(42);
  const Matrix x = oracle::random_matrix(rng, 20, 3);
  const LinearRanker c = fit_ranker(x, Vector::Constant(20, 0.4), 1e-3);
  CHECK(c.weights.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(c.bias == doctest::Approx(0.4));

  const Vector y = oracle::random_matrix(rng, 20, 1).col(0);
  const LinearRanker big = fit_ranker(x, y, 1e12);
  CHECK(big.weights.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(big.bias == doctest::Approx(y.mean()));
}

TEST_CASE("ridge fit never does worse than the zero-weight model") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix x = oracle::random_matrix(rng, 15, 4);
    const Vector y = oracle::random_matrix(rng, 15, 1).col(0);
    const LinearRanker m = fit_ranker(x, y, 0.5);
    const double zero_loss = (y.array() - y.mean()).square().mean();
    CHECK(m.training_loss <= zero_loss + 1e-12);
  }
}

TEST_CASE("fit is independent of row order") {
  std::mt19937_64 rng(44);
  const Matrix x = oracle::random_matrix(rng, 40, 6);
  const Vector y = oracle::random_matrix(rng, 40, 1).col(0);
  const LinearRanker a = fit_ranker(x, y, 1e-3);
  std::vector<Index> perm(40);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xs(40, 6);
  Vector ys(40);
  for (Index r = 0; r < 40; ++r) {
    xs.row(r) = x.row(perm[static_cast<std::size_t>(r)]);
    ys[r] = y[perm[static_cast<std::size_t>(r)]];
  }
  const LinearRanker b = fit_ranker(xs, ys, 1e-3);
  CHECK((a.weights - b.weights).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("fit error paths") {
  std::mt19937_64 rng(45);
  Matrix x = oracle::random_matrix(rng, 10, 3);
  x.col(2) = 2.0 * x.col(0);
  const Vector y = oracle::random_matrix(rng, 10, 1).col(0);
  try {
    fit_ranker(x, y, 0.0);
    FAIL("expected collinearity error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ridge") != std::string::npos);
  }
  CHECK_NOTHROW(fit_ranker(x, y, 1e-3));
  CHECK_THROWS_AS(fit_ranker(x.topRows(3), y.head(3), 1e-3), Error);
  CHECK_THROWS_AS(fit_ranker(x, y.head(9), 1e-3), Error);
  const LinearRanker m = fit_ranker(x, y, 1e-3);
  CHECK_THROWS_AS(predict(m, Vector::Zero(2)), Error);
}

TEST_CASE("prediction behaviour") {
  LinearRanker m;
  m.weights = Vector::Zero(3);
  m.feature_mean = Vector::Zero(3);
  m.feature_std = Vector::Ones(3);
  m.bias = 0.3;
  CHECK(predict(m, Vector::Constant(3, 9.0)) == 0.3);
  m.weights << 0.0, 2.0, 0.0;
  Vector s = Vector::Zero(3);
  const double before = predict(m, s);
  s[1] += 0.01;
  CHECK(predict(m, s) > before);
}

TEST_CASE("rankings from predictions") {
  Vector p(3);
  p << 0.2, 0.9, 0.5;
  CHECK(rank_from_predictions(p) == Vector((Vector(3) << 3, 1, 2).finished()));
  CHECK(rank_from_predictions(Vector::Constant(4, 0.1)) == Vector::Constant(4, 2.5));
  std::mt19937_64 rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector q = oracle::random_matrix(rng, 10, 1).col(0);
    CHECK(rank_from_predictions(q) == oracle::ranks_desc(q));
    const Vector monotone = q.array().exp() * 3.0 + 1.0;
    CHECK(rank_from_predictions(monotone) == rank_from_predictions(q));
  }
  CHECK_THROWS_AS(rank_from_predictions(Vector::Zero(1)), Error);
}

TEST_CASE("ranker JSON round trip") {
  std::mt19937_64 rng(47);
  std::vector<TrainingRow> rows;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < 20; ++r) {
    TrainingRow row;
    row.scores.model_id = "m" + std::to_string(r);
    row.scores.dataset_id = r < 10 ? "d0" : "d1";
    for (auto& f : row.scores.features) f = u(rng);
    row.scores.present.fill(true);
    row.accuracy = u(rng);
    rows.push_back(row);
  }
  std::array<bool, kFeatureCount> mask;
  mask.fill(true);
  mask[static_cast<std::size_t>(Feature::synonym_consistency)] = false;
  const LinearRanker m = fit_ranker(rows, mask, 1e-3);
  CHECK(m.feature_count() == 6);
  CHECK(m.training_datasets == std::vector<std::string>{"d0", "d1"});
  const LinearRanker back = ranker_from_json(ranker_to_json(m));
  CHECK(back.weights == m.weights);
  CHECK(back.bias == m.bias);
  CHECK(back.feature_mean == m.feature_mean);
  CHECK(back.feature_std == m.feature_std);
  CHECK(back.feature_mask == m.feature_mask);
  CHECK(predict(back, rows[0].scores) == predict(m, rows[0].scores));

  rows[0].accuracy = 1.5;
  CHECK_THROWS_AS(fit_ranker(rows, mask, 1e-3), Error);
}
