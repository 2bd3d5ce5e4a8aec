#include "lovm/metrics.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace lovm;

namespace {

RankVector rv(std::initializer_list<double> values) {
  RankVector r;
  r.ranks.resize(static_cast<Index>(values.size()));
  Index i = 0;
  for (double v : values) {
    r.model_ids.push_back("m" + std::to_string(i));
    r.ranks[i++] = v;
  }
  return r;
}

RankVector rv(const Vector& ranks) {
  RankVector r;
  r.ranks = ranks;
  for (Index i = 0; i < ranks.size(); ++i) r.model_ids.push_back("m" + std::to_string(i));
  return r;
}

}  // namespace

TEST_CASE("Borda ensemble") {
  const RankVector a = rv({1, 2, 3});
  const RankVector b = rv({3, 2, 1});
  CHECK(borda_ensemble(a, b, 0.5).ranks == Vector::Constant(3, 2.0));
  CHECK(borda_ensemble(a, b, 1.0).ranks == a.ranks);
  CHECK(borda_ensemble(a, b, 0.0).ranks == b.ranks);
  CHECK(borda_ensemble(a, a, 0.3).ranks == a.ranks);

  const RankVector c = rv({1, 2, 3, 4});
  const RankVector d = rv({2, 1, 4, 3});
  CHECK(borda_ensemble(c, d, 0.5).ranks == Vector((Vector(4) << 1.5, 1.5, 3.5, 3.5).finished()));

  CHECK_THROWS_AS(borda_ensemble(a, b, 1.5), Error);
  CHECK_THROWS_AS(borda_ensemble(a, c, 0.5), Error);
  RankVector renamed = b;
  renamed.model_ids[0] = "other";
  CHECK_THROWS_AS(borda_ensemble(a, renamed, 0.5), Error);
}

TEST_CASE("top-5 recall and tau on worked examples") {
  const RankVector truth = rv({1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(top5_recall(truth, truth) == 1.0);
  CHECK(kendall_tau_top5(truth, truth).tau == doctest::Approx(1.0));
  CHECK(kendall_tau_top5(truth, truth).overlap == 5);

  const RankVector reversed = rv({5, 4, 3, 2, 1, 6, 7, 8});
  CHECK(top5_recall(reversed, truth) == 1.0);
  CHECK(kendall_tau_top5(reversed, truth).tau == doctest::Approx(-1.0));

  const RankVector disjoint = rv({6, 7, 8, 4, 5, 1, 2, 3});
  CHECK(top5_recall(disjoint, truth) == doctest::Approx(0.4));
  CHECK(kendall_tau_top5(disjoint, truth).overlap == 2);
  CHECK(kendall_tau_top5(disjoint, truth).tau == doctest::Approx(1.0));

  const RankVector one_shared = rv({6, 7, 8, 5, 9, 1, 2, 3, 4});
  const RankVector truth9 = rv({1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(top5_recall(one_shared, truth9) == doctest::Approx(0.2));
  CHECK(kendall_tau_top5(one_shared, truth9).overlap == 1);
  CHECK(kendall_tau_top5(one_shared, truth9).tau == 0.0);

  CHECK_THROWS_AS(top5_recall(rv({1, 2, 3, 4}), rv({1, 2, 3, 4})), Error);
}

TEST_CASE("top-5 tie handling") {
  const RankVector tied = rv({1, 2, 3, 4, 5.5, 5.5, 7});
  const TopFive t = top5(tied);
  CHECK(t.tie_straddles_cut);
  CHECK(t.models == std::array<Index, 5>{0, 1, 2, 3, 4});
  CHECK_FALSE(top5(rv({1, 2, 3, 4, 5, 6, 7})).tie_straddles_cut);
}

TEST_CASE("tau-b matches pair counting") {
  Vector x(4), y(4);
  x << 1, 2, 3, 4;
  y << 1, 3, 2, 4;
  CHECK(kendall_tau_b(x, y) == doctest::Approx(4.0 / 6.0));
  y << 1, 1, 2, 2;
  CHECK(kendall_tau_b(x, y) == doctest::Approx(4.0 / std::sqrt(6.0 * 4.0)));
  CHECK(kendall_tau_b(Vector::Constant(3, 1.0), x.head(3)) == 0.0);
}

TEST_CASE("metrics agree with independent implementations on random rankings") {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> size(6, 15);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index m = size(rng);
    const bool ties = trial % 2 == 1;
    const Vector p = oracle::random_ranks(rng, m, ties);
    const Vector t = oracle::random_ranks(rng, m, ties);
    const double r5 = top5_recall(rv(p), rv(t));
    CHECK(r5 == doctest::Approx(oracle::recall5(p, t)).epsilon(1e-12));
    CHECK(std::abs(r5 * 5.0 - std::round(r5 * 5.0)) < 1e-12);
    CHECK(kendall_tau_top5(rv(p), rv(t)).tau == doctest::Approx(oracle::tau_top5(p, t)).epsilon(1e-12));

    std::vector<double> xs(p.data(), p.data() + m), ys(t.data(), t.data() + m);
    CHECK(kendall_tau_b(p, t) == doctest::Approx(oracle::tau_b(xs, ys)).epsilon(1e-12));
    CHECK(kendall_tau_b(p, t) == doctest::Approx(kendall_tau_b(t, p)).epsilon(1e-12));
    const double tau = kendall_tau_b(p, t);
    CHECK(tau >= -1.0 - 1e-12);
    CHECK(tau <= 1.0 + 1e-12);
  }
}

TEST_CASE("rankings derived from scores are invariant to monotone maps") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector s = oracle::random_matrix(rng, 10, 1).col(0);
    const Vector truth = oracle::random_ranks(rng, 10, false);
    const Vector a = rank_values(s, RankOrder::descending);
    const Vector b = rank_values(Vector(3.0 * s.array() + 2.0), RankOrder::descending);
    const Vector c = rank_values(Vector(-s), RankOrder::ascending);
    CHECK(top5_recall(rv(a), rv(truth)) == top5_recall(rv(b), rv(truth)));
    CHECK(top5_recall(rv(a), rv(truth)) == top5_recall(rv(c), rv(truth)));
    CHECK(kendall_tau_top5(rv(a), rv(truth)).tau == kendall_tau_top5(rv(c), rv(truth)).tau);
  }
}
