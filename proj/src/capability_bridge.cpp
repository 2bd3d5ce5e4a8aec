#include "lovm/capability_bridge.hpp"

namespace lovm {

RankTable class_rankings(std::vector<std::string> model_ids, const Matrix& accuracies) {
  if (accuracies.rows() < 2) {
    throw Error(ErrorKind::invalid_argument, "class_rankings: need at least two models");
  }
  if (static_cast<Index>(model_ids.size()) != accuracies.rows()) {
    throw Error(ErrorKind::invalid_argument, "class_rankings: model id count mismatch");
  }
  if (accuracies.hasNaN()) throw Error(ErrorKind::invalid_argument, "class_rankings: NaN accuracy");
  RankTable table;
  table.model_ids = std::move(model_ids);
  table.ranks.resize(accuracies.rows(), accuracies.cols());
  for (Index c = 0; c < accuracies.cols(); ++c) {
    table.ranks.col(c) = rank_values(accuracies.col(c), RankOrder::descending);
  }
  return table;
}

Matrix transfer_rankings(const RankTable& ranks, const TransportPlan& plan) {
  if (plan.plan.rows() != ranks.class_count()) {
    throw Error(ErrorKind::invalid_argument, "transfer_rankings: plan rows != source classes");
  }
  return ranks.ranks * plan.plan;
}

AggregatedRank aggregate_target_rank(const Matrix& transferred, const Vector* column_mass) {
  if (transferred.cols() < 1) {
    throw Error(ErrorKind::invalid_argument, "aggregate_target_rank: no target classes");
  }
  AggregatedRank out;
  out.values = Vector::Zero(transferred.rows());
  Index used = 0;
  for (Index j = 0; j < transferred.cols(); ++j) {
    if (column_mass && (*column_mass)[j] < 1e-9) {
      ++out.excluded_columns;
      continue;
    }
    out.values += transferred.col(j);
    ++used;
  }
  if (used == 0) {
    throw Error(ErrorKind::solver, "aggregate_target_rank: every target column has zero mass");
  }
  out.values /= static_cast<double>(used);
  return out;
}

Vector average_rank(const RankTable& ranks) { return ranks.ranks.rowwise().mean(); }

}  // namespace lovm
