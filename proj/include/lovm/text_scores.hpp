#pragma once

#include "lovm/assets.hpp"
#include "lovm/core.hpp"
#include "lovm/gap_bridge.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lovm {

/// Nearest classifier by cosine; ties go to the lowest index.
std::vector<Index> zero_shot_classify(const Matrix& items, const Matrix& classifiers);

struct ClassificationScores {
  double top1 = 0.0;
  double macro_f1 = 0.0;
};

ClassificationScores classification_scores(std::span<const Matrix> caption_emb_per_class,
                                           const Matrix& classifiers);

struct GranularityScores {
  double fisher = 0.0;
  double silhouette = 0.0;
  double dispersion = 0.0;
  std::optional<double> synonym_consistency;  // absent without synonyms
};

GranularityScores granularity_scores(std::span<const Matrix> caption_emb_per_class,
                                     std::span<const Matrix> synonym_emb_per_class,
                                     const Matrix& classifiers);

/// Adds i.i.d. N(0, sigma^2) noise from a generator seeded with `seed`.
Matrix inject_noise(const Matrix& emb, double sigma, std::uint64_t seed);

enum class Feature : int {
  text_top1 = 0,
  text_macro_f1,
  fisher,
  silhouette,
  dispersion,
  synonym_consistency,
  imagenet_acc,
};
inline constexpr std::size_t kFeatureCount = 7;
const char* feature_name(Feature f);

struct ScoreProvenance {
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool gap_applied = false;
  bool imagenet_filled = false;  // missing INB replaced by 0
};

struct ScoreVector {
  std::string model_id;
  std::string dataset_id;
  std::array<double, kFeatureCount> features{};
  std::array<bool, kFeatureCount> present{};
  ScoreProvenance provenance;

  double operator[](Feature f) const { return features[static_cast<std::size_t>(f)]; }
};

struct ScoreConfig {
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool gap_applied = false;
  /// Space in which the modified texts live; classifiers and synonyms are
  /// mapped into it before scoring. Empty transform means raw embeddings.
  ModalityTransform text_space;
};

/// The seven ranker features of one model on one dataset. Noise (if any) is
/// added to `modified_texts` per class before scoring.
ScoreVector assemble_score_vector(const AssetBundle& bundle, const std::string& model_id,
                                  std::span<const Matrix> modified_texts, const ScoreConfig& config);

/// Features selected by `mask`, in canonical order.
Vector active_features(const ScoreVector& s, const std::array<bool, kFeatureCount>& mask);

}  // namespace lovm
