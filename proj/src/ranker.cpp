#include "lovm/ranker.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <set>

namespace lovm {

namespace {

constexpr double kStdFloor = 1e-12;

std::vector<Index> canonical_order(const Matrix& x, const Vector& y) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    if (y[a] != y[b]) return y[a] < y[b];
    return a < b;
  });
  return order;
}

}  // namespace

LinearRanker fit_ranker(const Matrix& features, const Vector& targets, double ridge) {
  const Index n = features.rows();
  const Index p = features.cols();
  if (targets.size() != n) throw Error(ErrorKind::invalid_argument, "fit_ranker: row count mismatch");
  if (n < p + 1) {
    throw Error(ErrorKind::invalid_argument, "fit_ranker: need at least " + std::to_string(p + 1) +
                                                 " rows, got " + std::to_string(n));
  }
  if (!(ridge >= 0.0)) throw Error(ErrorKind::invalid_argument, "fit_ranker: ridge must be >= 0");
  require_finite(features, "fit_ranker features");
  require_finite(targets, "fit_ranker targets");

  const auto order = canonical_order(features, targets);
  Matrix x(n, p);
  Vector y(n);
  for (Index r = 0; r < n; ++r) {
    x.row(r) = features.row(order[static_cast<std::size_t>(r)]);
    y[r] = targets[order[static_cast<std::size_t>(r)]];
  }

  LinearRanker model;
  model.ridge = ridge;
  const auto stats = zscore_stats(x, kStdFloor);
  model.feature_mean = stats.mean;
  model.feature_std = stats.std;
  const Matrix z = apply_zscore(x, stats);
  const double y_mean = y.mean();
  const Vector yc = y.array() - y_mean;

  Matrix gram = z.transpose() * z;
  gram.diagonal().array() += ridge;
  const Vector rhs = z.transpose() * yc;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    if (qr.rank() < p) {
      throw Error(ErrorKind::invalid_argument,
                  "fit_ranker: features are collinear; use a ridge coefficient > 0");
    }
    model.weights = qr.solve(yc);
  } else {
    model.weights = gram.ldlt().solve(rhs);
  }
  model.bias = y_mean;
  model.training_rows = n;
  model.training_loss = ((z * model.weights).array() + model.bias - y.array()).square().mean();
  return model;
}

LinearRanker fit_ranker(std::span<const TrainingRow> rows, const std::array<bool, kFeatureCount>& mask,
                        double ridge) {
  const Index p = static_cast<Index>(std::count(mask.begin(), mask.end(), true));
  Matrix x(static_cast<Index>(rows.size()), p);
  Vector y(static_cast<Index>(rows.size()));
  std::set<std::string> datasets;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (mask[f] && !rows[r].scores.present[f]) {
        throw Error(ErrorKind::invalid_argument,
                    std::string("fit_ranker: feature ") + feature_name(static_cast<Feature>(f)) +
                        " missing for " + rows[r].scores.model_id + "@" + rows[r].scores.dataset_id);
      }
    }
    x.row(static_cast<Index>(r)) = active_features(rows[r].scores, mask).transpose();
    y[static_cast<Index>(r)] = rows[r].accuracy;
    if (rows[r].accuracy < 0.0 || rows[r].accuracy > 1.0) {
      throw Error(ErrorKind::invalid_argument, "fit_ranker: accuracy outside [0,1]");
    }
    datasets.insert(rows[r].scores.dataset_id);
  }
  LinearRanker model = fit_ranker(x, y, ridge);
  model.feature_mask = mask;
  model.training_datasets.assign(datasets.begin(), datasets.end());
  return model;
}

double predict(const LinearRanker& model, const Vector& features) {
  if (features.size() != model.feature_count()) {
    throw Error(ErrorKind::invalid_argument, "predict: feature count mismatch");
  }
  const Vector z = (features - model.feature_mean).cwiseQuotient(model.feature_std);
  return model.weights.dot(z) + model.bias;
}

double predict(const LinearRanker& model, const ScoreVector& s) {
  return predict(model, active_features(s, model.feature_mask));
}

Vector rank_from_predictions(const Vector& predictions) {
  if (predictions.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "rank_from_predictions: need at least two models");
  }
  return rank_values(predictions, RankOrder::descending);
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string ranker_to_json(const LinearRanker& model) {
  nlohmann::json j;
  j["weights"] = to_std(model.weights);
  j["bias"] = model.bias;
  j["ridge"] = model.ridge;
  j["feature_mean"] = to_std(model.feature_mean);
  j["feature_std"] = to_std(model.feature_std);
  std::vector<std::string> features;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (model.feature_mask[f]) features.emplace_back(feature_name(static_cast<Feature>(f)));
  }
  j["features"] = features;
  j["training_datasets"] = model.training_datasets;
  j["training_loss"] = model.training_loss;
  j["training_rows"] = model.training_rows;
  return j.dump(2);
}

LinearRanker ranker_from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  LinearRanker model;
  model.weights = from_std(j.at("weights").get<std::vector<double>>());
  model.bias = j.at("bias").get<double>();
  model.ridge = j.at("ridge").get<double>();
  model.feature_mean = from_std(j.at("feature_mean").get<std::vector<double>>());
  model.feature_std = from_std(j.at("feature_std").get<std::vector<double>>());
  for (const auto& name : j.at("features")) {
    bool known = false;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (name.get<std::string>() == feature_name(static_cast<Feature>(f))) {
        model.feature_mask[f] = true;
        known = true;
      }
    }
    if (!known) throw Error(ErrorKind::validation, "ranker json: unknown feature " + name.dump());
  }
  model.training_datasets = j.at("training_datasets").get<std::vector<std::string>>();
  model.training_loss = j.at("training_loss").get<double>();
  model.training_rows = j.at("training_rows").get<Index>();
  if (model.feature_mean.size() != model.weights.size() ||
      model.feature_std.size() != model.weights.size()) {
    throw Error(ErrorKind::validation, "ranker json: inconsistent feature counts");
  }
  return model;
}

}  // namespace lovm
