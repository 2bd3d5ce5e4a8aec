#pragma once

#include "lovm/core.hpp"
#include "lovm/transport.hpp"

#include <string>
#include <vector>

namespace lovm {

/// Per-class model rankings, M x k; 1 is best, ties averaged.
struct RankTable {
  std::vector<std::string> model_ids;
  Matrix ranks;

  Index class_count() const { return ranks.cols(); }
};

/// `accuracies` is M x k (model rows, class columns).
RankTable class_rankings(std::vector<std::string> model_ids, const Matrix& accuracies);

/// Row m is r_m * plan, unscaled.
Matrix transfer_rankings(const RankTable& ranks, const TransportPlan& plan);

struct AggregatedRank {
  Vector values;          // per model, smaller is better
  Index excluded_columns = 0;
};

/// Row means of the transferred ranking. Target columns whose plan mass is
/// below 1e-9 (possible under partial transport) are left out of the mean.
AggregatedRank aggregate_target_rank(const Matrix& transferred, const Vector* column_mass = nullptr);

/// Uniform weighting over every source class: the average-rank baseline.
Vector average_rank(const RankTable& ranks);

}  // namespace lovm
