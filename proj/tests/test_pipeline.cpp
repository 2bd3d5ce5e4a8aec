#include "lovm/benchmark.hpp"
#include "lovm/pipeline.hpp"
#include "lovm/synthetic.hpp"

#include <doctest.h>

using namespace lovm;

namespace {

SyntheticConfig small_config() {
  SyntheticConfig c;
  c.n_datasets = 4;
  c.classes_per_dataset = 5;
  c.n_models = 7;
  c.dim = 12;
  c.captions_per_class = 6;
  c.synonyms_per_class = 3;
  c.images_per_class = 6;
  return c;
}

RunConfig quick_run() {
  RunConfig r;
  r.seeds = {1, 2, 3};
  return r;
}

std::vector<const AssetBundle*> others(const SyntheticUniverse& u, std::size_t target) {
  std::vector<const AssetBundle*> out;
  for (std::size_t i = 0; i < u.bundles.size(); ++i) {
    if (i != target) out.push_back(&u.bundles[i]);
  }
  return out;
}

}  // namespace

TEST_CASE("without a modality gap the corrected branch equals the plain one") {
  SyntheticConfig c = small_config();
  c.gap_scale = 0.0;
  const SyntheticUniverse u = generate_synthetic_universe(c, 11);
  const SwabPipeline p(others(u, 0), u.bundles[0], u.zoo, quick_run());
  for (std::uint64_t seed : {1, 2}) {
    const TargetPrediction t = p.predict(seed);
    CHECK(t.learned == t.learned_plain);
    CHECK(t.ranking("swab-m").ranks == t.ranking("modelgpt").ranks);
  }
}

TEST_CASE("shared class rankings make the capability branch agree with the average rank") {
  SyntheticConfig c = small_config();
  c.semantic_clusters = 1;
  c.noise = 0.0;
  const SyntheticUniverse u = generate_synthetic_universe(c, 12);
  for (std::size_t t = 0; t < u.bundles.size(); ++t) {
    const SwabPipeline p(others(u, t), u.bundles[t], u.zoo, quick_run());
    const TargetPrediction pred = p.predict(1);
    CHECK(pred.ranking("swab-c").ranks == pred.ranking("avg-rank").ranks);
  }
}

TEST_CASE("a source identical to the target transfers exactly") {
  SyntheticConfig c = small_config();
  c.semantic_clusters = 1;
  c.noise = 0.0;
  c.n_models = 10;  // one source dataset must still supply more rows than ranker features
  const SyntheticUniverse u = generate_synthetic_universe(c, 13);
  AssetBundle copy = u.bundles[0];
  copy.dataset_id = "copy";
  copy.vocabulary.dataset_id = "copy";
  const SwabPipeline p({&copy}, u.bundles[0], u.zoo, quick_run());
  const Index k = u.bundles[0].class_count();
  CHECK((p.modality_plan().plan - Matrix::Identity(k, k) / static_cast<double>(k)).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix& cap = p.capability_plan().plan;
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i != j) CHECK(cap(i, j) < 1e-12);
    }
  }
  const TargetPrediction pred = p.predict(1);
  const RankVector truth = ground_truth_ranking(u.bundles[0], u.zoo);
  CHECK(pred.ranking("swab-c").ranks == truth.ranks);
  CHECK(top5_recall(pred.ranking("swab-c"), truth) == 1.0);
}

TEST_CASE("alpha endpoints select a single branch") {
  const SyntheticUniverse u = generate_synthetic_universe(small_config(), 14);
  RunConfig r = quick_run();
  r.alpha = 1.0;
  const TargetPrediction a = SwabPipeline(others(u, 1), u.bundles[1], u.zoo, r).predict(2);
  CHECK(a.ranking("swab").ranks == a.ranking("swab-m").ranks);
  r.alpha = 0.0;
  const TargetPrediction b = SwabPipeline(others(u, 1), u.bundles[1], u.zoo, r).predict(2);
  CHECK(b.ranking("swab").ranks == b.ranking("swab-c").ranks);
}

TEST_CASE("every method produces a full ranking") {
  const SyntheticUniverse u = generate_synthetic_universe(small_config(), 15);
  const TargetPrediction t = SwabPipeline(others(u, 2), u.bundles[2], u.zoo, quick_run()).predict(3);
  const double m = static_cast<double>(u.zoo.size());
  for (const auto& name : method_names()) {
    const RankVector& r = t.ranking(name);
    CHECK(r.model_ids == u.zoo.model_ids);
    CHECK(std::abs(r.ranks.sum() - m * (m + 1.0) / 2.0) < 1e-9);
  }
  CHECK_THROWS_AS(t.ranking("oracle"), Error);
}

TEST_CASE("missing assets are listed by name") {
  const SyntheticUniverse u = generate_synthetic_universe(small_config(), 16);
  std::vector<AssetBundle> b = u.bundles;
  b[1].models[0].class_accuracies.reset();
  b[2].models[3].images.clear();
  b[2].models[3].class_gaps.reset();
  std::vector<const AssetBundle*> sources{&b[1], &b[2], &b[3]};
  try {
    SwabPipeline(sources, b[0], u.zoo, quick_run());
    FAIL("expected asset_missing");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::asset_missing);
    const std::string msg = e.what();
    CHECK(msg.find(b[1].dataset_id + "/" + u.zoo.model_ids[0] + "/class_accuracies") != std::string::npos);
    CHECK(msg.find(b[2].dataset_id + "/" + u.zoo.model_ids[3] + "/image_embeddings|gap_table") != std::string::npos);
  }
  CHECK_THROWS_AS(run_lodo_benchmark(b, u.zoo, quick_run(), 1), Error);

  // A target needs no accuracies or gap support.
  CHECK(missing_assets(b[2], u.zoo, false).empty());
}

TEST_CASE("benchmark is deterministic across runs and thread counts") {
  const SyntheticUniverse u = generate_synthetic_universe(small_config(), 17);
  const RunConfig r = quick_run();
  const std::string one = report_to_json(run_lodo_benchmark(u.bundles, u.zoo, r, 1)).dump(2);
  const std::string again = report_to_json(run_lodo_benchmark(u.bundles, u.zoo, r, 1)).dump(2);
  const std::string threaded = report_to_json(run_lodo_benchmark(u.bundles, u.zoo, r, 3)).dump(2);
  CHECK(one == again);
  CHECK(one == threaded);
}

TEST_CASE("benchmark report layout and alpha sweep") {
  const SyntheticUniverse u = generate_synthetic_universe(small_config(), 18);
  RunConfig r = quick_run();
  std::map<double, double> score;
  for (double alpha : {0.0, 0.5, 1.0}) {
    r.alpha = alpha;
    const BenchmarkReport rep = run_lodo_benchmark(u.bundles, u.zoo, r, 1);
    CHECK(rep.rows.size() == u.bundles.size() * r.seeds.size() * method_names().size());
    const MethodSummary& s = rep.method("swab");
    CHECK(s.per_seed_r5.size() == r.seeds.size());
    CHECK(s.per_seed_tau.size() == r.seeds.size());
    score[alpha] = s.sum_mean;

    const auto j = report_to_json(rep);
    CHECK(j.at("config") == to_json(r));
    CHECK(config_from_json(j.at("config")).alpha == alpha);
    const std::string csv = per_dataset_csv(rep);
    CHECK(csv.rfind("dataset,metric,swab,swab-m,swab-c,modelgpt,avg-rank,inb\n", 0) == 0);
    CHECK(csv.find("\nmean,R5,") != std::string::npos);
  }
  CHECK(score[0.5] >= std::min(score[0.0], score[1.0]));
}
