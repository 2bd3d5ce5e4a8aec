#include "lovm/synthetic.hpp"

#include <cmath>
#include <random>

namespace lovm {

namespace {

struct Sampler {
  std::mt19937_64 engine;
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> uniform{0.0, 1.0};

  explicit Sampler(std::uint64_t seed) : engine(seed) {}

  double gauss() { return normal(engine); }
  double unit() { return uniform(engine); }

  // Isotropic vector with expected norm close to 1.
  Eigen::RowVectorXd direction(Index d) {
    Eigen::RowVectorXd v(d);
    for (Index i = 0; i < d; ++i) v[i] = gauss() / std::sqrt(static_cast<double>(d));
    return v;
  }
};

Eigen::RowVectorXd unit(const Eigen::RowVectorXd& v) { return v / v.norm(); }

// Payloads are stored as f32 on disk; rounding here keeps round trips exact.
template <class M>
void round_to_float(M& m) {
  m = m.unaryExpr([](double x) { return static_cast<double>(static_cast<float>(x)); });
}

double round_to_float(double x) { return static_cast<double>(static_cast<float>(x)); }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void SyntheticConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorKind::invalid_argument, "synthetic config: " + what);
  };
  if (n_datasets < 2) bad("n_datasets must be >= 2");
  if (classes_per_dataset < 2) bad("classes_per_dataset must be >= 2");
  if (n_models < 5) bad("n_models must be >= 5");
  if (dim < 2) bad("dim must be >= 2");
  if (semantic_clusters < 1) bad("semantic_clusters must be >= 1");
  if (captions_per_class < 1 || synonyms_per_class < 0 || images_per_class < 1) {
    bad("per-class sample counts too small");
  }
  if (!(gap_scale >= 0.0) || !(noise >= 0.0) || !(gap_heterogeneity >= 0.0) || !(text_nuisance >= 0.0)) {
    bad("gap_scale, noise, gap_heterogeneity and text_nuisance must be >= 0");
  }
  if (!(dominant_share >= 0.0 && dominant_share <= 1.0)) bad("dominant_share must lie in [0,1]");
}

SyntheticConfig heterogeneous_gap_config() {
  SyntheticConfig c;
  c.gap_scale = 1.5;
  c.gap_heterogeneity = 2.0;
  return c;
}

SyntheticUniverse generate_synthetic_universe(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Sampler rng(seed);
  const Index d = config.dim;
  const Index K = config.semantic_clusters;
  const Index M = config.n_models;

  std::vector<Eigen::RowVectorXd> centers;
  for (Index k = 0; k < K; ++k) centers.push_back(unit(rng.direction(d)));

  // Model-level latent structure.
  std::vector<double> general(static_cast<std::size_t>(M));
  std::vector<double> verbosity(static_cast<std::size_t>(M));
  Matrix skill(M, K);
  Matrix beta(M, K);
  std::vector<Eigen::RowVectorXd> common_gap;
  std::vector<Matrix> gap_map;
  for (Index m = 0; m < M; ++m) {
    general[static_cast<std::size_t>(m)] = rng.gauss();
    verbosity[static_cast<std::size_t>(m)] = std::exp(config.text_nuisance * rng.gauss());
    for (Index k = 0; k < K; ++k) {
      skill(m, k) = 0.6 * general[static_cast<std::size_t>(m)] + rng.gauss();
      beta(m, k) = 0.5 + config.gap_heterogeneity * std::abs(rng.gauss());
    }
    common_gap.push_back(unit(rng.direction(d)));
    Matrix map(d, d);
    for (Index i = 0; i < d; ++i) map.row(i) = rng.direction(d);
    gap_map.push_back(map);
  }

  SyntheticUniverse out;
  for (Index m = 0; m < M; ++m) out.zoo.model_ids.push_back("model_" + std::to_string(m));

  for (Index t = 0; t < config.n_datasets; ++t) {
    AssetBundle b;
    b.dataset_id = "dataset_" + std::to_string(t);
    b.vocabulary.dataset_id = b.dataset_id;
    const Index k = config.classes_per_dataset;
    const Index home = t % K;
    std::vector<Index> clusters;
    b.classname_embeddings.resize(k, d);
    for (Index c = 0; c < k; ++c) {
      b.vocabulary.names.push_back(b.dataset_id + "_class_" + std::to_string(c));
      Index cl = home;
      if (K > 1 && rng.unit() >= config.dominant_share) {
        cl = (home + 1 + static_cast<Index>(rng.unit() * static_cast<double>(K - 1))) % K;
        if (cl == home) cl = (home + 1) % K;
      }
      clusters.push_back(cl);
      b.classname_embeddings.row(c) = unit(centers[static_cast<std::size_t>(cl)] + 0.5 * rng.direction(d));
    }
    round_to_float(b.classname_embeddings);
    std::vector<double> difficulty;
    for (Index c = 0; c < k; ++c) difficulty.push_back(0.5 * rng.gauss());

    for (Index m = 0; m < M; ++m) {
      ModelAssets ma;
      ma.model_id = out.zoo.model_ids[static_cast<std::size_t>(m)];
      ma.classifiers.resize(k, d);
      Vector acc(k);
      for (Index c = 0; c < k; ++c) {
        const Index cl = clusters[static_cast<std::size_t>(c)];
        const Eigen::RowVectorXd phi = b.classname_embeddings.row(c);
        const Eigen::RowVectorXd proto = unit(phi + 0.25 * rng.direction(d));
        ma.classifiers.row(c) = proto;

        // Text quality drives both caption spread and class accuracy.
        const double quality = skill(m, cl) + config.noise * rng.gauss();
        const double b_mc = beta(m, cl) * config.gap_scale;
        acc[c] = sigmoid(1.5 * quality - 1.0 * b_mc - difficulty[static_cast<std::size_t>(c)]);

        const double spread =
            0.6 * verbosity[static_cast<std::size_t>(m)] * std::exp(-0.3 * quality);
        Matrix caps(config.captions_per_class, d);
        for (Index i = 0; i < caps.rows(); ++i) caps.row(i) = proto + spread * rng.direction(d);
        round_to_float(caps);
        ma.captions.push_back(caps);
        if (config.synonyms_per_class > 0) {
          Matrix syn(config.synonyms_per_class, d);
          for (Index i = 0; i < syn.rows(); ++i) syn.row(i) = proto + 0.5 * spread * rng.direction(d);
          round_to_float(syn);
          ma.synonyms.push_back(syn);
        }

        const Eigen::RowVectorXd offset =
            config.gap_scale * common_gap[static_cast<std::size_t>(m)] +
            b_mc * (phi * gap_map[static_cast<std::size_t>(m)].transpose());
        if (config.gap_scale > 0.0) {
          Matrix img(config.images_per_class, d);
          for (Index i = 0; i < img.rows(); ++i) img.row(i) = proto + offset + 0.3 * rng.direction(d);
          round_to_float(img);
          ma.images.push_back(img);
        }
      }
      round_to_float(ma.classifiers);
      if (config.gap_scale == 0.0) ma.class_gaps = Matrix::Zero(k, d);
      for (Index c = 0; c < k; ++c) acc[c] = round_to_float(acc[c]);
      ma.class_accuracies = acc;
      ma.imagenet_accuracy =
          round_to_float(sigmoid(general[static_cast<std::size_t>(m)] + 0.3 * rng.gauss()));
      b.models.push_back(std::move(ma));
    }

    Vector truth(M);
    for (Index m = 0; m < M; ++m) truth[m] = dataset_accuracy(b.models[static_cast<std::size_t>(m)]);
    out.truth.push_back(RankVector{out.zoo.model_ids, rank_values(truth, RankOrder::descending)});
    out.class_clusters.push_back(clusters);
    out.bundles.push_back(std::move(b));
  }
  return out;
}

}  // namespace lovm
