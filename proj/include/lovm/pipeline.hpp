#pragma once

#include "lovm/assets.hpp"
#include "lovm/capability_bridge.hpp"
#include "lovm/config.hpp"
#include "lovm/gap_bridge.hpp"
#include "lovm/metrics.hpp"
#include "lovm/ranker.hpp"
#include "lovm/text_scores.hpp"
#include "lovm/transport.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace lovm {

/// Enumerates every asset the pipeline needs. `as_source` bundles also need
/// class accuracies and gap support (images or a gap table).
std::vector<std::string> missing_assets(const AssetBundle& bundle, const ModelZoo& zoo,
                                        bool as_source);

struct TargetPrediction {
  std::string dataset_id;
  std::vector<std::string> model_ids;
  std::uint64_t seed = 0;
  Vector learned;          // ranker output on gap-corrected texts (r^(1) source)
  Vector learned_plain;    // ranker output without gap correction
  Vector capability;       // OT-weighted mean rank, smaller is better (r^(2))
  Vector average_rank;     // uniform weighting over all source classes
  Vector imagenet;
  std::map<std::string, RankVector> rankings;  // keyed by method name
  std::vector<ScoreVector> target_scores;      // gap-corrected, noised

  const RankVector& ranking(const std::string& method) const;
};

/// Seed-independent state for one target: class filtering, bridge plans,
/// transferred gaps, training rows and fitted rankers. `predict` adds the
/// per-seed noise and produces every method's ranking.
class SwabPipeline {
 public:
  SwabPipeline(std::vector<const AssetBundle*> sources, const AssetBundle& target,
               const ModelZoo& zoo, const RunConfig& config);

  TargetPrediction predict(std::uint64_t seed) const;

  const TransportPlan& modality_plan() const { return modality_plan_; }
  const TransportPlan& capability_plan() const { return capability_plan_; }
  const LinearRanker& ranker() const { return ranker_; }
  const LinearRanker& plain_ranker() const { return plain_ranker_; }
  Index kept_source_classes() const { return static_cast<Index>(kept_.size()); }
  Index source_class_count() const { return static_cast<Index>(pool_.size()); }
  const std::vector<std::string>& notes() const { return notes_; }
  const std::array<bool, kFeatureCount>& feature_mask() const { return mask_; }

 private:
  struct ClassRef {
    std::size_t dataset;  // index into sources_
    Index cls;
  };
  struct TargetTexts {
    std::vector<Matrix> corrected;
    std::vector<Matrix> plain;
    ModalityTransform space;
  };

  void check_assets() const;
  void build_source_pool();
  void build_capability_branch();
  void build_modality_branch();
  GapTable source_gap_table(std::size_t dataset, const std::string& model_id) const;
  std::vector<TrainingRow> training_rows(bool with_gap);

  std::vector<const AssetBundle*> sources_;
  const AssetBundle& target_;
  ModelZoo zoo_;
  RunConfig config_;

  std::vector<ClassRef> pool_;
  Matrix pool_names_;
  std::vector<Index> kept_;
  TransportPlan modality_plan_;
  TransportPlan capability_plan_;
  Vector capability_;
  Vector average_rank_;
  std::array<bool, kFeatureCount> mask_{};
  std::map<std::string, TargetTexts> target_texts_;
  mutable std::map<std::pair<std::size_t, std::string>, GapTable> gap_cache_;
  LinearRanker ranker_;
  LinearRanker plain_ranker_;
  std::vector<std::string> notes_;
};

}  // namespace lovm
