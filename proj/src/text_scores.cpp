#include "lovm/text_scores.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace lovm {

namespace {

Matrix unit_rows(const Matrix& m, const char* what) {
  auto n = l2_normalize(m);
  if (!n.zero_rows.empty()) {
    throw Error(ErrorKind::invalid_argument, std::string(what) + ": zero-norm embedding");
  }
  return std::move(n.values);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Index> zero_shot_classify(const Matrix& items, const Matrix& classifiers) {
  if (classifiers.rows() < 1) {
    throw Error(ErrorKind::invalid_argument, "zero_shot_classify: no classifiers");
  }
  if (items.rows() > 0 && items.cols() != classifiers.cols()) {
    throw Error(ErrorKind::invalid_argument, "zero_shot_classify: dimension mismatch");
  }
  const Matrix sims = unit_rows(items, "zero_shot_classify") *
                      unit_rows(classifiers, "zero_shot_classify").transpose();
  std::vector<Index> labels(static_cast<std::size_t>(items.rows()));
  for (Index r = 0; r < sims.rows(); ++r) {
    Index best = 0;
    for (Index c = 1; c < sims.cols(); ++c) {
      if (sims(r, c) > sims(r, best)) best = c;
    }
    labels[static_cast<std::size_t>(r)] = best;
  }
  return labels;
}

ClassificationScores classification_scores(std::span<const Matrix> caption_emb_per_class,
                                           const Matrix& classifiers) {
  const Index k = classifiers.rows();
  if (static_cast<Index>(caption_emb_per_class.size()) != k) {
    throw Error(ErrorKind::invalid_argument, "classification_scores: class count mismatch");
  }
  std::vector<double> tp(static_cast<std::size_t>(k), 0.0);
  std::vector<double> predicted(static_cast<std::size_t>(k), 0.0);
  std::vector<double> actual(static_cast<std::size_t>(k), 0.0);
  double total = 0.0;
  double correct = 0.0;
  for (Index c = 0; c < k; ++c) {
    const auto& caps = caption_emb_per_class[static_cast<std::size_t>(c)];
    if (caps.rows() == 0) continue;
    for (Index label : zero_shot_classify(caps, classifiers)) {
      predicted[static_cast<std::size_t>(label)] += 1.0;
      if (label == c) {
        tp[static_cast<std::size_t>(c)] += 1.0;
        correct += 1.0;
      }
    }
    actual[static_cast<std::size_t>(c)] += static_cast<double>(caps.rows());
    total += static_cast<double>(caps.rows());
  }
  if (total == 0.0) throw Error(ErrorKind::invalid_argument, "classification_scores: empty corpus");

  ClassificationScores out;
  out.top1 = correct / total;
  double f1_sum = 0.0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    const double precision = predicted[c] > 0.0 ? tp[c] / predicted[c] : 0.0;
    const double recall = actual[c] > 0.0 ? tp[c] / actual[c] : 0.0;
    if (precision + recall > 0.0) f1_sum += 2.0 * precision * recall / (precision + recall);
  }
  out.macro_f1 = f1_sum / static_cast<double>(k);
  return out;
}

GranularityScores granularity_scores(std::span<const Matrix> caption_emb_per_class,
                                     std::span<const Matrix> synonym_emb_per_class,
                                     const Matrix& classifiers) {
  const Index k = classifiers.rows();
  if (k < 2) {
    throw Error(ErrorKind::invalid_argument, "granularity_scores: need at least two classes");
  }
  if (static_cast<Index>(caption_emb_per_class.size()) != k) {
    throw Error(ErrorKind::invalid_argument, "granularity_scores: class count mismatch");
  }
  const Matrix t = unit_rows(classifiers, "granularity_scores");
  GranularityScores out;

  // Fisher: mean over classes of the closest other classifier.
  const Matrix tt = t * t.transpose();
  double fisher = 0.0;
  for (Index j = 0; j < k; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
      if (i != j) best = std::max(best, tt(i, j));
    }
    fisher += best;
  }
  out.fisher = fisher / static_cast<double>(k);

  double silhouette = 0.0;
  double dispersion = 0.0;
  double caption_count = 0.0;
  Index classes_with_captions = 0;
  for (Index j = 0; j < k; ++j) {
    const auto& caps = caption_emb_per_class[static_cast<std::size_t>(j)];
    if (caps.rows() == 0) continue;
    const Matrix sims = unit_rows(caps, "granularity_scores") * t.transpose();  // n x k
    const Vector mean_sim = sims.colwise().mean().transpose();
    double best = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < k; ++i) {
      if (i != j) best = std::max(best, mean_sim[i]);
    }
    silhouette += best;
    ++classes_with_captions;
    dispersion += sims.col(j).sum();
    caption_count += static_cast<double>(caps.rows());
  }
  if (classes_with_captions == 0) {
    throw Error(ErrorKind::invalid_argument, "granularity_scores: empty caption corpus");
  }
  out.silhouette = silhouette / static_cast<double>(classes_with_captions);
  out.dispersion = dispersion / caption_count;

  if (!synonym_emb_per_class.empty()) {
    if (static_cast<Index>(synonym_emb_per_class.size()) != k) {
      throw Error(ErrorKind::invalid_argument, "granularity_scores: synonym class count mismatch");
    }
    double total = 0.0;
    double count = 0.0;
    for (Index j = 0; j < k; ++j) {
      const auto& syn = synonym_emb_per_class[static_cast<std::size_t>(j)];
      if (syn.rows() == 0) continue;
      total += (unit_rows(syn, "granularity_scores") * t.row(j).transpose()).sum();
      count += static_cast<double>(syn.rows());
    }
    if (count > 0.0) out.synonym_consistency = total / count;
  }
  return out;
}

Matrix inject_noise(const Matrix& emb, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::invalid_argument, "inject_noise: sigma must be >= 0");
  if (sigma == 0.0) return emb;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Matrix out = emb;
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) out(r, c) += normal(rng);
  }
  return out;
}

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::text_top1: return "text_top1";
    case Feature::text_macro_f1: return "text_macro_f1";
    case Feature::fisher: return "fisher";
    case Feature::silhouette: return "silhouette";
    case Feature::dispersion: return "dispersion";
    case Feature::synonym_consistency: return "synonym_consistency";
    case Feature::imagenet_acc: return "imagenet_acc";
  }
  return "?";
}

ScoreVector assemble_score_vector(const AssetBundle& bundle, const std::string& model_id,
                                  std::span<const Matrix> modified_texts, const ScoreConfig& config) {
  const ModelAssets& model = bundle.model(model_id);
  if (static_cast<Index>(modified_texts.size()) != bundle.class_count()) {
    throw Error(ErrorKind::invalid_argument,
                "assemble_score_vector: modified texts not aligned with vocabulary");
  }
  std::vector<Matrix> texts(modified_texts.begin(), modified_texts.end());
  if (config.noise_sigma > 0.0) {
    const std::uint64_t base = config.seed ^ fnv1a(model_id) ^ (fnv1a(bundle.dataset_id) << 1);
    for (std::size_t c = 0; c < texts.size(); ++c) {
      texts[c] = inject_noise(texts[c], config.noise_sigma, splitmix64(base + c));
    }
  }
  const Matrix classifiers = to_text_space(model.classifiers, config.text_space);
  std::vector<Matrix> synonyms;
  if (model.has_synonyms()) synonyms = to_text_space(model.synonyms, config.text_space);

  const auto cls = classification_scores(texts, classifiers);
  const auto gran = granularity_scores(texts, synonyms, classifiers);

  ScoreVector s;
  s.model_id = model_id;
  s.dataset_id = bundle.dataset_id;
  s.present.fill(true);
  auto set = [&](Feature f, double v) { s.features[static_cast<std::size_t>(f)] = v; };
  set(Feature::text_top1, cls.top1);
  set(Feature::text_macro_f1, cls.macro_f1);
  set(Feature::fisher, gran.fisher);
  set(Feature::silhouette, gran.silhouette);
  set(Feature::dispersion, gran.dispersion);
  if (gran.synonym_consistency) {
    set(Feature::synonym_consistency, *gran.synonym_consistency);
  } else {
    s.present[static_cast<std::size_t>(Feature::synonym_consistency)] = false;
  }
  set(Feature::imagenet_acc, model.imagenet_accuracy.value_or(0.0));
  s.provenance.imagenet_filled = !model.imagenet_accuracy.has_value();
  s.provenance.noise_sigma = config.noise_sigma;
  s.provenance.seed = config.seed;
  s.provenance.gap_applied = config.gap_applied;
  return s;
}

Vector active_features(const ScoreVector& s, const std::array<bool, kFeatureCount>& mask) {
  std::vector<double> vals;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (mask[f]) vals.push_back(s.features[f]);
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace lovm
