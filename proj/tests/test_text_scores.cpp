#include "lovm/text_scores.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace lovm;

namespace {

Matrix unit_rows(const Matrix& m) { return l2_normalize(m).values; }

AssetBundle tiny_bundle(std::mt19937_64& rng, bool synonyms, bool imagenet) {
  AssetBundle b;
  b.dataset_id = "tiny";
  b.vocabulary = {"tiny", {"a", "b", "c"}};
  b.classname_embeddings = oracle::random_matrix(rng, 3, 4);
  ModelAssets m;
  m.model_id = "m";
  m.classifiers = oracle::random_matrix(rng, 3, 5);
  for (int c = 0; c < 3; ++c) {
    m.captions.push_back(oracle::random_matrix(rng, 4, 5));
    if (synonyms) m.synonyms.push_back(oracle::random_matrix(rng, 2, 5));
  }
  if (imagenet) m.imagenet_accuracy = 0.7;
  b.models.push_back(m);
  return b;
}

}  // namespace

TEST_CASE("zero-shot picks the most similar classifier, lowest index on ties") {
  Matrix cls(3, 2), items(3, 2);
  cls << 1, 0, 0, 1, 1, 0;
  items << 2, 0.1, 0.1, 3, 1, 1;
  const auto labels = zero_shot_classify(items, cls);
  CHECK(labels[0] == 0);
  CHECK(labels[1] == 1);
  CHECK(labels[2] == 0);
  CHECK_THROWS_AS(zero_shot_classify(Matrix::Zero(1, 2), cls), Error);
  CHECK_THROWS_AS(zero_shot_classify(items, Matrix(0, 2)), Error);
}

TEST_CASE("top-1 and macro-F1 match a confusion-matrix oracle") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k = 4;
    const Matrix cls = oracle::random_matrix(rng, k, 3);
    std::vector<Matrix> caps;
    for (Index c = 0; c < k; ++c) caps.push_back(oracle::random_matrix(rng, 1 + (trial + c) % 5, 3));
    Matrix confusion = Matrix::Zero(k, k);
    const Matrix nc = unit_rows(cls);
    for (Index c = 0; c < k; ++c) {
      const Matrix s = unit_rows(caps[static_cast<std::size_t>(c)]) * nc.transpose();
      for (Index r = 0; r < s.rows(); ++r) {
        Index best;
        s.row(r).maxCoeff(&best);
        confusion(c, best) += 1;
      }
    }
    double f1 = 0.0;
    for (Index c = 0; c < k; ++c) {
      const double tp = confusion(c, c);
      const double p = confusion.col(c).sum() > 0 ? tp / confusion.col(c).sum() : 0.0;
      const double r = tp / confusion.row(c).sum();
      if (p + r > 0) f1 += 2 * p * r / (p + r);
    }
    const auto s = classification_scores(caps, cls);
    CHECK(s.top1 == doctest::Approx(confusion.trace() / confusion.sum()).epsilon(1e-12));
    CHECK(s.macro_f1 == doctest::Approx(f1 / k).epsilon(1e-12));
  }
}

TEST_CASE("perfectly separated captions score 1") {
  const Matrix cls = Matrix::Identity(3, 3);
  std::vector<Matrix> caps{cls.row(0).replicate(2, 1), cls.row(1).replicate(3, 1), cls.row(2).replicate(1, 1)};
  const auto s = classification_scores(caps, cls);
  CHECK(s.top1 == 1.0);
  CHECK(s.macro_f1 == 1.0);
}

TEST_CASE("granularity scores follow their definitions") {
  std::mt19937_64 rng(22);
  const Index k = 4;
  const Matrix cls = oracle::random_matrix(rng, k, 5);
  std::vector<Matrix> caps, syn;
  for (Index c = 0; c < k; ++c) {
    caps.push_back(oracle::random_matrix(rng, 3, 5));
    syn.push_back(oracle::random_matrix(rng, 2, 5));
  }
  const Matrix t = unit_rows(cls);
  double fisher = 0, silhouette = 0, dispersion = 0, synonym = 0, n_caps = 0, n_syn = 0;
  for (Index j = 0; j < k; ++j) {
    double best = -2;
    for (Index i = 0; i < k; ++i) {
      if (i != j) best = std::max(best, t.row(i).dot(t.row(j)));
    }
    fisher += best / k;
    const Matrix nc = unit_rows(caps[static_cast<std::size_t>(j)]);
    double best_other = -2;
    for (Index i = 0; i < k; ++i) {
      if (i != j) best_other = std::max(best_other, (nc * t.row(i).transpose()).mean());
    }
    silhouette += best_other / k;
    dispersion += (nc * t.row(j).transpose()).sum();
    n_caps += static_cast<double>(nc.rows());
    const Matrix ns = unit_rows(syn[static_cast<std::size_t>(j)]);
    synonym += (ns * t.row(j).transpose()).sum();
    n_syn += static_cast<double>(ns.rows());
  }
  const auto g = granularity_scores(caps, syn, cls);
  CHECK(g.fisher == doctest::Approx(fisher).epsilon(1e-12));
  CHECK(g.silhouette == doctest::Approx(silhouette).epsilon(1e-12));
  CHECK(g.dispersion == doctest::Approx(dispersion / n_caps).epsilon(1e-12));
  REQUIRE(g.synonym_consistency.has_value());
  CHECK(*g.synonym_consistency == doctest::Approx(synonym / n_syn).epsilon(1e-12));
  CHECK_FALSE(granularity_scores(caps, {}, cls).synonym_consistency.has_value());
  CHECK_THROWS_AS(granularity_scores(std::vector<Matrix>{caps[0]}, {}, cls.topRows(1)), Error);
}

TEST_CASE("noise injection is seed-addressed") {
  const Matrix m = Matrix::Zero(50, 20);
  CHECK(inject_noise(m, 0.0, 1) == m);
  const Matrix a = inject_noise(m, 0.1, 42);
  CHECK(a == inject_noise(m, 0.1, 42));
  CHECK(a != inject_noise(m, 0.1, 43));
  const double sd = std::sqrt(a.array().square().mean());
  CHECK(sd == doctest::Approx(0.1).epsilon(0.05));
  CHECK_THROWS_AS(inject_noise(m, -1.0, 1), Error);
}

TEST_CASE("score vector assembly records features and provenance") {
  std::mt19937_64 rng(23);
  const AssetBundle b = tiny_bundle(rng, true, false);
  ScoreConfig cfg;
  cfg.noise_sigma = 0.05;
  cfg.seed = 3;
  cfg.gap_applied = true;
  const ScoreVector s = assemble_score_vector(b, "m", b.models[0].captions, cfg);
  CHECK(s.model_id == "m");
  CHECK(s.dataset_id == "tiny");
  CHECK(s[Feature::imagenet_acc] == 0.0);
  CHECK(s.provenance.imagenet_filled);
  CHECK(s.provenance.gap_applied);
  CHECK(s.provenance.seed == 3);
  CHECK(s.present[static_cast<std::size_t>(Feature::synonym_consistency)]);

  const ScoreVector again = assemble_score_vector(b, "m", b.models[0].captions, cfg);
  CHECK(again.features == s.features);

  ScoreConfig clean;
  const ScoreVector plain = assemble_score_vector(b, "m", b.models[0].captions, clean);
  const auto cls = classification_scores(b.models[0].captions, b.models[0].classifiers);
  CHECK(plain[Feature::text_top1] == cls.top1);
  CHECK(plain[Feature::text_macro_f1] == cls.macro_f1);

  const AssetBundle no_syn = tiny_bundle(rng, false, true);
  const ScoreVector t = assemble_score_vector(no_syn, "m", no_syn.models[0].captions, clean);
  CHECK_FALSE(t.present[static_cast<std::size_t>(Feature::synonym_consistency)]);
  CHECK(t[Feature::imagenet_acc] == 0.7);
  CHECK_THROWS_AS(assemble_score_vector(b, "missing", b.models[0].captions, clean), Error);
}

TEST_CASE("active features follow the mask in canonical order") {
  ScoreVector s;
  for (std::size_t f = 0; f < kFeatureCount; ++f) s.features[f] = static_cast<double>(f);
  std::array<bool, kFeatureCount> mask{};
  mask[1] = mask[4] = mask[6] = true;
  const Vector v = active_features(s, mask);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 4.0);
  CHECK(v[2] == 6.0);
}

TEST_CASE("cosine-based scores ignore positive row rescaling") {
  std::mt19937_64 rng(24);
  const Index k = 4;
  const Matrix cls = oracle::random_matrix(rng, k, 5);
  std::vector<Matrix> caps, syn, caps_scaled, syn_scaled;
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (Index c = 0; c < k; ++c) {
    caps.push_back(oracle::random_matrix(rng, 3, 5));
    syn.push_back(oracle::random_matrix(rng, 2, 5));
    Matrix cs = caps.back(), ss = syn.back();
    for (Index r = 0; r < cs.rows(); ++r) cs.row(r) *= scale(rng);
    for (Index r = 0; r < ss.rows(); ++r) ss.row(r) *= scale(rng);
    caps_scaled.push_back(cs);
    syn_scaled.push_back(ss);
  }
  Matrix cls_scaled = cls;
  for (Index r = 0; r < k; ++r) cls_scaled.row(r) *= scale(rng);
  const auto a = granularity_scores(caps, syn, cls);
  const auto b = granularity_scores(caps_scaled, syn_scaled, cls_scaled);
  CHECK(a.fisher == doctest::Approx(b.fisher).epsilon(1e-12));
  CHECK(a.silhouette == doctest::Approx(b.silhouette).epsilon(1e-12));
  CHECK(a.dispersion == doctest::Approx(b.dispersion).epsilon(1e-12));
  CHECK(*a.synonym_consistency == doctest::Approx(*b.synonym_consistency).epsilon(1e-12));
  const auto ca = classification_scores(caps, cls);
  const auto cb = classification_scores(caps_scaled, cls_scaled);
  CHECK(ca.top1 == cb.top1);
  CHECK(ca.macro_f1 == cb.macro_f1);
}

TEST_CASE("zero-shot labels follow a joint relabeling of classifiers") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix cls = oracle::random_matrix(rng, 5, 4);
    const Matrix items = oracle::random_matrix(rng, 12, 4);
    std::vector<Index> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(5, 4);
    for (Index i = 0; i < 5; ++i) shuffled.row(perm[static_cast<std::size_t>(i)]) = cls.row(i);
    const auto a = zero_shot_classify(items, cls);
    const auto b = zero_shot_classify(items, shuffled);
    for (std::size_t n = 0; n < a.size(); ++n) CHECK(b[n] == perm[static_cast<std::size_t>(a[n])]);
  }
}
