#pragma once

#include "lovm/core.hpp"

#include <string>
#include <vector>

namespace lovm {

struct CostMatrix {
  Matrix values;  // k_S x k_T, entries >= 0
  bool exponentiated = false;
};

/// cost_ij = 1 - cos(src_i, tgt_j), optionally replaced by exp(cost_ij).
CostMatrix build_cost_matrix(const Matrix& src_emb, const Matrix& tgt_emb, bool exponentiate = true);

class NoRelevantSourceClasses : public Error {
 public:
  NoRelevantSourceClasses() : Error(ErrorKind::validation, "no relevant source classes") {}
};

/// Indices of source rows whose best cosine to any target row exceeds
/// `lambda`, in source order. Throws NoRelevantSourceClasses when nothing
/// survives.
std::vector<Index> filter_source_classes(const Matrix& src_emb, const Matrix& tgt_emb, double lambda);

enum class OtMethod { exact, sinkhorn };

struct SinkhornParams {
  double epsilon = 0.0;  // <= 0 selects 0.01 * mean(cost)
  int max_iter = 10000;
  double tol = 1e-9;     // L1 residual of the row marginal
};

struct TransportPlan {
  Matrix plan;  // k_S x k_T, nonnegative
  Vector row_marginal;
  Vector col_marginal;
  double total_mass = 0.0;
  double objective = 0.0;
  std::string solver_tag;

  Vector row_sums() const { return plan.rowwise().sum(); }
  Vector col_sums() const { return plan.colwise().sum().transpose(); }
};

Vector uniform_marginal(Index n);

/// Balanced transport. `exact` runs a transportation network simplex; the
/// `sinkhorn` result is rounded back onto the marginal constraints.
TransportPlan solve_ot(const CostMatrix& cost, const Vector& u, const Vector& v,
                       OtMethod method = OtMethod::exact, const SinkhornParams& params = {});

/// Ships exactly mass_fraction * min(|u|_1, |v|_1) under inequality
/// marginals, by augmenting the problem with one zero-cost dummy row and
/// column and solving it exactly.
TransportPlan solve_partial_ot(const CostMatrix& cost, const Vector& u, const Vector& v,
                               double mass_fraction);

}  // namespace lovm
