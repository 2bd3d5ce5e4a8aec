#pragma once

#include "lovm/assets.hpp"
#include "lovm/metrics.hpp"

#include <cstdint>
#include <vector>

namespace lovm {

/// Desk-scale universe: classes grouped into semantic clusters, models with
/// per-cluster skill and per-cluster modality-gap strength.
struct SyntheticConfig {
  Index n_datasets = 6;
  Index classes_per_dataset = 8;
  Index n_models = 10;
  Index dim = 32;
  Index semantic_clusters = 3;
  double gap_scale = 1.0;
  double noise = 0.3;             // idiosyncratic per-class accuracy spread
  double gap_heterogeneity = 1.0; // spread of per-cluster gap strength
  double dominant_share = 0.75;   // fraction of a dataset's classes in its home cluster
  double text_nuisance = 0.1;     // per-model caption spread unrelated to accuracy
  Index captions_per_class = 20;
  Index synonyms_per_class = 5;
  Index images_per_class = 20;

  void validate() const;
};

/// Preset where gap strength varies strongly between clusters.
SyntheticConfig heterogeneous_gap_config();

struct SyntheticUniverse {
  std::vector<AssetBundle> bundles;
  ModelZoo zoo;
  std::vector<RankVector> truth;       // per dataset, from mean class accuracy
  std::vector<std::vector<Index>> class_clusters;
};

SyntheticUniverse generate_synthetic_universe(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace lovm
