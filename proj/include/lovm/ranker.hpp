#pragma once

#include "lovm/core.hpp"
#include "lovm/text_scores.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lovm {

/// Ridge-regularized linear map from standardized features to accuracy.
struct LinearRanker {
  Vector weights;
  double bias = 0.0;
  double ridge = 1e-3;
  Vector feature_mean;
  Vector feature_std;  // eps-floored
  std::array<bool, kFeatureCount> feature_mask{};
  std::vector<std::string> training_datasets;
  double training_loss = 0.0;  // mean squared residual
  Index training_rows = 0;

  Index feature_count() const { return weights.size(); }
};

struct TrainingRow {
  ScoreVector scores;
  double accuracy = 0.0;
};

/// Closed-form ridge fit on raw feature rows (n x p). The bias is not
/// penalized. Rows are sorted before accumulation so the result does not
/// depend on their order.
LinearRanker fit_ranker(const Matrix& features, const Vector& targets, double ridge = 1e-3);

/// Fit on score vectors, using the features selected by `mask`.
LinearRanker fit_ranker(std::span<const TrainingRow> rows, const std::array<bool, kFeatureCount>& mask,
                        double ridge = 1e-3);

double predict(const LinearRanker& model, const Vector& features);
double predict(const LinearRanker& model, const ScoreVector& s);

/// Rank 1 = largest prediction; ties averaged.
Vector rank_from_predictions(const Vector& predictions);

std::string ranker_to_json(const LinearRanker& model);
LinearRanker ranker_from_json(std::string_view text);

}  // namespace lovm
