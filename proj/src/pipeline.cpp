#include "lovm/pipeline.hpp"

#include <sstream>

namespace lovm {

std::vector<std::string> missing_assets(const AssetBundle& bundle, const ModelZoo& zoo,
                                        bool as_source) {
  std::vector<std::string> missing;
  const std::string ds = bundle.dataset_id;
  const Index k = bundle.class_count();
  if (k < 1) missing.push_back(ds + "/vocabulary");
  if (bundle.classname_embeddings.rows() != k || bundle.classname_embeddings.cols() == 0) {
    missing.push_back(ds + "/classname_embeddings");
  }
  for (const auto& id : zoo.model_ids) {
    const ModelAssets* m = bundle.find_model(id);
    const std::string at = ds + "/" + id + "/";
    if (!m) {
      missing.push_back(at + "classifier_embeddings");
      missing.push_back(at + "caption_embeddings");
      if (as_source) missing.push_back(at + "class_accuracies");
      continue;
    }
    if (m->classifiers.rows() != k) missing.push_back(at + "classifier_embeddings");
    bool captions_ok = static_cast<Index>(m->captions.size()) == k;
    for (const auto& c : m->captions) captions_ok = captions_ok && c.rows() > 0;
    if (!captions_ok) missing.push_back(at + "caption_embeddings");
    if (as_source) {
      if (!m->class_accuracies || m->class_accuracies->size() != k) {
        missing.push_back(at + "class_accuracies");
      }
      const bool images_ok = static_cast<Index>(m->images.size()) == k;
      if (!images_ok && !m->class_gaps) missing.push_back(at + "image_embeddings|gap_table");
    }
  }
  return missing;
}

const RankVector& TargetPrediction::ranking(const std::string& method) const {
  const auto it = rankings.find(method);
  if (it == rankings.end()) throw Error(ErrorKind::invalid_argument, "unknown method '" + method + "'");
  return it->second;
}

SwabPipeline::SwabPipeline(std::vector<const AssetBundle*> sources, const AssetBundle& target,
                           const ModelZoo& zoo, const RunConfig& config)
    : sources_(std::move(sources)), target_(target), zoo_(zoo), config_(config) {
  config_.validate();
  if (sources_.empty()) throw Error(ErrorKind::invalid_argument, "pipeline: no source datasets");
  check_assets();
  build_source_pool();
  build_capability_branch();
  build_modality_branch();
}

void SwabPipeline::check_assets() const {
  std::vector<std::string> missing = missing_assets(target_, zoo_, false);
  for (const auto* s : sources_) {
    const auto m = missing_assets(*s, zoo_, true);
    missing.insert(missing.end(), m.begin(), m.end());
  }
  if (!missing.empty()) {
    std::ostringstream os;
    os << "missing assets:";
    for (const auto& m : missing) os << ' ' << m;
    throw Error(ErrorKind::asset_missing, os.str());
  }
}

void SwabPipeline::build_source_pool() {
  std::vector<Matrix> names;
  for (std::size_t s = 0; s < sources_.size(); ++s) {
    for (Index c = 0; c < sources_[s]->class_count(); ++c) pool_.push_back({s, c});
    names.push_back(sources_[s]->classname_embeddings);
  }
  pool_names_ = vstack(names);
  try {
    kept_ = filter_source_classes(pool_names_, target_.classname_embeddings, config_.lambda_filter);
  } catch (const NoRelevantSourceClasses&) {
    kept_.resize(pool_.size());
    for (std::size_t i = 0; i < kept_.size(); ++i) kept_[i] = static_cast<Index>(i);
    notes_.push_back(target_.dataset_id + ": no source class passed the similarity filter; using all " +
                     std::to_string(pool_.size()));
  }
  Matrix kept_names(static_cast<Index>(kept_.size()), pool_names_.cols());
  for (std::size_t i = 0; i < kept_.size(); ++i) kept_names.row(static_cast<Index>(i)) = pool_names_.row(kept_[i]);

  const CostMatrix cost =
      build_cost_matrix(kept_names, target_.classname_embeddings, config_.exponentiate_cost);
  const Vector u = uniform_marginal(cost.values.rows());
  const Vector v = uniform_marginal(cost.values.cols());
  modality_plan_ = solve_ot(cost, u, v, config_.ot_method, config_.sinkhorn);
  capability_plan_ = config_.partial_for_capability
                         ? solve_partial_ot(cost, u, v, config_.mass_fraction)
                         : modality_plan_;
}

void SwabPipeline::build_capability_branch() {
  const Index m = zoo_.size();
  auto accuracy_matrix = [&](const std::vector<Index>& classes) {
    Matrix acc(m, static_cast<Index>(classes.size()));
    for (Index r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        const ClassRef& ref = pool_[static_cast<std::size_t>(classes[c])];
        const auto& model = sources_[ref.dataset]->model(zoo_.model_ids[static_cast<std::size_t>(r)]);
        acc(r, static_cast<Index>(c)) = (*model.class_accuracies)[ref.cls];
      }
    }
    return acc;
  };

  const RankTable kept_ranks = class_rankings(zoo_.model_ids, accuracy_matrix(kept_));
  const Matrix transferred = transfer_rankings(kept_ranks, capability_plan_);
  const Vector column_mass = capability_plan_.col_sums();
  const AggregatedRank agg = aggregate_target_rank(transferred, &column_mass);
  capability_ = agg.values;
  if (agg.excluded_columns > 0) {
    notes_.push_back(target_.dataset_id + ": " + std::to_string(agg.excluded_columns) +
                     " target classes received no transported mass");
  }

  std::vector<Index> all(pool_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  average_rank_ = average_rank(class_rankings(zoo_.model_ids, accuracy_matrix(all)));
}

GapTable SwabPipeline::source_gap_table(std::size_t dataset, const std::string& model_id) const {
  const auto key = std::make_pair(dataset, model_id);
  if (const auto it = gap_cache_.find(key); it != gap_cache_.end()) return it->second;
  const ModelAssets& model = sources_[dataset]->model(model_id);
  GapTable table;
  if (static_cast<Index>(model.images.size()) == sources_[dataset]->class_count()) {
    const ModalityTransform transform = config_.zscore_gap_space
                                            ? fit_modality_transform(model.images, model.captions)
                                            : ModalityTransform{};
    table = compute_class_gap_vectors(model.images, model.classifiers, transform, config_.gap_level);
  } else {
    table.gaps = *model.class_gaps;
    table.missing.assign(static_cast<std::size_t>(table.gaps.rows()), 0);
    table.level = config_.gap_level;
    if (config_.gap_level == GapLevel::dataset_mean) {
      const Eigen::RowVectorXd mean = table.gaps.colwise().mean();
      table.gaps.rowwise() = mean;
    }
  }
  table.model_id = model_id;
  gap_cache_.emplace(key, table);
  return table;
}

namespace {

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

std::vector<TrainingRow> SwabPipeline::training_rows(bool with_gap) {
  std::vector<TrainingRow> rows;
  for (std::size_t d = 0; d < sources_.size(); ++d) {
    const AssetBundle& ds = *sources_[d];
    // Bridge plan from the other open-source datasets onto this one.
    std::vector<Index> peers;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      if (pool_[i].dataset != d) peers.push_back(static_cast<Index>(i));
    }
    TransportPlan plan;
    if (with_gap && !peers.empty()) {
      const Matrix peer_names = select_rows(pool_names_, peers);
      std::vector<Index> kept;
      try {
        kept = filter_source_classes(peer_names, ds.classname_embeddings, config_.lambda_filter);
      } catch (const NoRelevantSourceClasses&) {
        kept.resize(peers.size());
        for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = static_cast<Index>(i);
      }
      std::vector<Index> chosen;
      for (Index k : kept) chosen.push_back(peers[static_cast<std::size_t>(k)]);
      peers = chosen;
      const CostMatrix cost = build_cost_matrix(select_rows(pool_names_, peers),
                                                ds.classname_embeddings, config_.exponentiate_cost);
      plan = solve_ot(cost, uniform_marginal(cost.values.rows()),
                      uniform_marginal(cost.values.cols()), config_.ot_method, config_.sinkhorn);
    } else if (with_gap) {
      notes_.push_back(ds.dataset_id + ": no peer datasets; training texts use its own gap table");
    }

    for (const auto& model_id : zoo_.model_ids) {
      const ModelAssets& model = ds.model(model_id);
      const ModalityTransform space = config_.zscore_gap_space
                                          ? fit_modality_transform({}, model.captions)
                                          : ModalityTransform{};
      std::vector<Matrix> texts = to_text_space(model.captions, space);
      if (with_gap) {
        GapTable gaps;
        if (peers.empty()) {
          gaps = source_gap_table(d, model_id);
        } else {
          GapTable stacked;
          stacked.gaps.resize(static_cast<Index>(peers.size()), model.dim());
          for (std::size_t i = 0; i < peers.size(); ++i) {
            const ClassRef& ref = pool_[static_cast<std::size_t>(peers[i])];
            const GapTable src = source_gap_table(ref.dataset, model_id);
            stacked.gaps.row(static_cast<Index>(i)) = src.gaps.row(ref.cls);
            stacked.missing.push_back(src.missing[static_cast<std::size_t>(ref.cls)]);
          }
          gaps = transfer_gap_vectors(plan, stacked, ds.class_count());
        }
        texts = apply_gap_to_texts(texts, gaps);
      }
      ScoreConfig sc;
      sc.gap_applied = with_gap;
      sc.text_space = space;
      rows.push_back({assemble_score_vector(ds, model_id, texts, sc), dataset_accuracy(model)});
    }
  }
  return rows;
}

void SwabPipeline::build_modality_branch() {
  // Synonym consistency is used only when every dataset supplies synonyms
  // for every model; a dataset with synonyms for only some models is rejected.
  mask_.fill(true);
  std::vector<const AssetBundle*> all = sources_;
  all.push_back(&target_);
  bool synonyms_everywhere = true;
  for (const auto* b : all) {
    std::size_t with = 0;
    for (const auto& id : zoo_.model_ids) with += b->model(id).has_synonyms() ? 1 : 0;
    if (with != 0 && with != zoo_.model_ids.size()) {
      throw Error(ErrorKind::invalid_argument,
                  b->dataset_id + ": synonym embeddings present for some models but not others");
    }
    if (with == 0) synonyms_everywhere = false;
  }
  if (!synonyms_everywhere) {
    mask_[static_cast<std::size_t>(Feature::synonym_consistency)] = false;
    notes_.push_back(target_.dataset_id + ": synonym_consistency dropped (synonyms not supplied everywhere)");
  }

  // Transferred gaps for the target, one table per model.
  for (const auto& model_id : zoo_.model_ids) {
    const ModelAssets& model = target_.model(model_id);
    TargetTexts tt;
    tt.space = config_.zscore_gap_space ? fit_modality_transform({}, model.captions)
                                        : ModalityTransform{};
    tt.plain = to_text_space(model.captions, tt.space);
    GapTable stacked;
    stacked.gaps.resize(static_cast<Index>(kept_.size()), model.dim());
    for (std::size_t i = 0; i < kept_.size(); ++i) {
      const ClassRef& ref = pool_[static_cast<std::size_t>(kept_[i])];
      const GapTable src = source_gap_table(ref.dataset, model_id);
      if (src.dim() != model.dim()) {
        throw Error(ErrorKind::validation, "model '" + model_id +
                                               "' has inconsistent dimensions across datasets");
      }
      stacked.gaps.row(static_cast<Index>(i)) = src.gaps.row(ref.cls);
      stacked.missing.push_back(src.missing[static_cast<std::size_t>(ref.cls)]);
    }
    const GapTable gaps = transfer_gap_vectors(modality_plan_, stacked, target_.class_count());
    tt.corrected = apply_gap_to_texts(tt.plain, gaps);
    target_texts_.emplace(model_id, std::move(tt));
  }

  const auto gap_rows = training_rows(true);
  const auto plain_rows = training_rows(false);
  ranker_ = fit_ranker(gap_rows, mask_, config_.ridge);
  plain_ranker_ = fit_ranker(plain_rows, mask_, config_.ridge);
}

TargetPrediction SwabPipeline::predict(std::uint64_t seed) const {
  const Index m = zoo_.size();
  TargetPrediction out;
  out.dataset_id = target_.dataset_id;
  out.model_ids = zoo_.model_ids;
  out.seed = seed;
  out.learned.resize(m);
  out.learned_plain.resize(m);
  out.imagenet.resize(m);
  for (Index r = 0; r < m; ++r) {
    const std::string& id = zoo_.model_ids[static_cast<std::size_t>(r)];
    const TargetTexts& tt = target_texts_.at(id);
    ScoreConfig sc;
    sc.noise_sigma = config_.noise_sigma;
    sc.seed = seed;
    sc.text_space = tt.space;
    sc.gap_applied = true;
    ScoreVector corrected = assemble_score_vector(target_, id, tt.corrected, sc);
    sc.gap_applied = false;
    const ScoreVector plain = assemble_score_vector(target_, id, tt.plain, sc);
    out.learned[r] = lovm::predict(ranker_, corrected);
    out.learned_plain[r] = lovm::predict(plain_ranker_, plain);
    out.imagenet[r] = corrected[Feature::imagenet_acc];
    out.target_scores.push_back(std::move(corrected));
  }
  out.capability = capability_;
  out.average_rank = average_rank_;

  const auto& ids = zoo_.model_ids;
  const RankVector r1{ids, rank_from_predictions(out.learned)};
  const RankVector r2{ids, rank_values(capability_, RankOrder::ascending)};
  out.rankings["swab"] = borda_ensemble(r1, r2, config_.alpha);
  out.rankings["swab-m"] = r1;
  out.rankings["swab-c"] = r2;
  out.rankings["modelgpt"] = RankVector{ids, rank_from_predictions(out.learned_plain)};
  out.rankings["avg-rank"] = RankVector{ids, rank_values(average_rank_, RankOrder::ascending)};
  out.rankings["inb"] = RankVector{ids, rank_values(out.imagenet, RankOrder::descending)};
  return out;
}

}  // namespace lovm
