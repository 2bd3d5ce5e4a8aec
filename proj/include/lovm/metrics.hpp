#pragma once

#include "lovm/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace lovm {

/// Per-model rank values, 1 = best, ties averaged.
struct RankVector {
  std::vector<std::string> model_ids;
  Vector ranks;

  Index size() const { return ranks.size(); }
};

/// Weighted Borda count: score = alpha * r1 + (1 - alpha) * r2, re-ranked
/// ascending.
RankVector borda_ensemble(const RankVector& r1, const RankVector& r2, double alpha);

struct TopFive {
  std::array<Index, 5> models{};
  bool tie_straddles_cut = false;  // a tie crossed the 5/6 boundary
};

/// The five smallest rank values; ties at the cut resolved by model index.
TopFive top5(const RankVector& r);

double top5_recall(const RankVector& pred, const RankVector& truth);

struct TauResult {
  double tau = 0.0;
  Index overlap = 0;  // |F|, size of the top-5 intersection
};

/// Kendall tau-b between two rank vectors restricted to the intersection of
/// their top-5 sets. An intersection of at most one model scores 0.
TauResult kendall_tau_top5(const RankVector& pred, const RankVector& truth);

/// Tie-corrected Kendall tau over paired samples; 0 when undefined.
double kendall_tau_b(const Vector& x, const Vector& y);

}  // namespace lovm
