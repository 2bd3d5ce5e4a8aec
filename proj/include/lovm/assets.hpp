#pragma once

#include "lovm/core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lovm {

struct ClassVocabulary {
  std::string dataset_id;
  std::vector<std::string> names;

  Index size() const { return static_cast<Index>(names.size()); }
};

/// Everything one VLM contributes to a dataset bundle. Per-class lists follow
/// vocabulary order.
struct ModelAssets {
  std::string model_id;
  Matrix classifiers;               // k x d_m text classifiers
  std::vector<Matrix> captions;     // per class, n_c x d_m
  std::vector<Matrix> synonyms;     // per class; empty when not supplied
  std::vector<Matrix> images;       // per class raw image embeddings; optional
  std::optional<Matrix> class_gaps; // k x d_m, precomputed gap table
  std::optional<Vector> class_accuracies;
  std::optional<double> imagenet_accuracy;

  Index dim() const { return classifiers.cols(); }
  bool has_synonyms() const { return !synonyms.empty(); }
  bool has_images() const { return !images.empty(); }
};

struct AssetBundle {
  std::string dataset_id;
  ClassVocabulary vocabulary;
  Matrix classname_embeddings;  // k x d_phi from the auxiliary sentence encoder
  std::vector<ModelAssets> models;

  Index class_count() const { return vocabulary.size(); }
  const ModelAssets* find_model(std::string_view model_id) const;
  /// Throws ErrorKind::asset_missing when absent.
  const ModelAssets& model(std::string_view model_id) const;
};

struct ModelZoo {
  std::vector<std::string> model_ids;

  Index size() const { return static_cast<Index>(model_ids.size()); }
};

/// Unique ids, at least two models.
ModelZoo make_zoo(std::vector<std::string> model_ids);

struct Violation {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_bundle(const AssetBundle& bundle, const ModelZoo& zoo);

/// Unweighted mean of per-class accuracies; the harness's dataset-level truth.
double dataset_accuracy(const ModelAssets& model);

}  // namespace lovm
