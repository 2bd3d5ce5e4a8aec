#include "lovm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lovm {

namespace {

void require_same_models(const RankVector& a, const RankVector& b, const char* where) {
  if (a.model_ids != b.model_ids || a.ranks.size() != b.ranks.size()) {
    throw Error(ErrorKind::invalid_argument, std::string(where) + ": model sets differ");
  }
}

}  // namespace

RankVector borda_ensemble(const RankVector& r1, const RankVector& r2, double alpha) {
  require_same_models(r1, r2, "borda_ensemble");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "borda_ensemble: alpha outside [0,1]");
  }
  const Vector score = alpha * r1.ranks + (1.0 - alpha) * r2.ranks;
  return RankVector{r1.model_ids, rank_values(score, RankOrder::ascending)};
}

TopFive top5(const RankVector& r) {
  const Index m = r.ranks.size();
  if (m < 5) throw Error(ErrorKind::invalid_argument, "top5: need at least five models");
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Index a, Index b) { return r.ranks[a] < r.ranks[b]; });
  TopFive out;
  std::copy_n(idx.begin(), 5, out.models.begin());
  out.tie_straddles_cut = m > 5 && r.ranks[idx[4]] == r.ranks[idx[5]];
  return out;
}

double top5_recall(const RankVector& pred, const RankVector& truth) {
  require_same_models(pred, truth, "top5_recall");
  const auto p = top5(pred).models;
  const auto t = top5(truth).models;
  int shared = 0;
  for (Index a : p) {
    if (std::find(t.begin(), t.end(), a) != t.end()) ++shared;
  }
  return static_cast<double>(shared) / 5.0;
}

double kendall_tau_b(const Vector& x, const Vector& y) {
  const Index n = x.size();
  double concordant = 0.0;
  double discordant = 0.0;
  double ties_x = 0.0;
  double ties_y = 0.0;
  double pairs = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      pairs += 1.0;
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0) ties_x += 1.0;
      if (dy == 0.0) ties_y += 1.0;
      if (dx * dy > 0.0) concordant += 1.0;
      if (dx * dy < 0.0) discordant += 1.0;
    }
  }
  const double denom = std::sqrt((pairs - ties_x) * (pairs - ties_y));
  if (denom == 0.0) return 0.0;
  return (concordant - discordant) / denom;
}

TauResult kendall_tau_top5(const RankVector& pred, const RankVector& truth) {
  require_same_models(pred, truth, "kendall_tau_top5");
  auto p = top5(pred).models;
  auto t = top5(truth).models;
  std::sort(p.begin(), p.end());
  std::sort(t.begin(), t.end());
  std::vector<Index> shared;
  std::set_intersection(p.begin(), p.end(), t.begin(), t.end(), std::back_inserter(shared));
  TauResult out;
  out.overlap = static_cast<Index>(shared.size());
  if (shared.size() <= 1) return out;
  Vector x(out.overlap);
  Vector y(out.overlap);
  for (std::size_t k = 0; k < shared.size(); ++k) {
    x[static_cast<Index>(k)] = pred.ranks[shared[k]];
    y[static_cast<Index>(k)] = truth.ranks[shared[k]];
  }
  out.tau = kendall_tau_b(x, y);
  return out;
}

}  // namespace lovm
