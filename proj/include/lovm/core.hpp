#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lovm {

// Row-major dense types: one row per embedding / per model.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

enum class Normalization { raw, l2, zscore };

enum class ErrorKind { invalid_argument, validation, asset_missing, solver, io };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::validation, std::string(what) + ": non-finite value");
  }
}

template <typename Scalar>
struct L2Normalized {
  MatrixX<Scalar> values;
  std::vector<Index> zero_rows;  // left unchanged
  Normalization normalization = Normalization::l2;
};

/// Scales every row to unit Euclidean norm. All-zero rows are returned as-is
/// and listed in `zero_rows`.
template <typename Derived>
L2Normalized<typename Derived::Scalar> l2_normalize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_finite(m, "l2_normalize");
  L2Normalized<Scalar> out;
  out.values = m;
  for (Index r = 0; r < out.values.rows(); ++r) {
    const Scalar norm = out.values.row(r).norm();
    if (norm == Scalar(0)) {
      out.zero_rows.push_back(r);
    } else {
      out.values.row(r) /= norm;
    }
  }
  return out;
}

template <typename Scalar>
struct ZScoreStats {
  VectorX<Scalar> mean;
  VectorX<Scalar> std;  // population convention, already eps-floored
};

template <typename Scalar>
struct ZScored {
  MatrixX<Scalar> values;
  ZScoreStats<Scalar> stats;
  Normalization normalization = Normalization::zscore;
};

template <typename Derived>
ZScoreStats<typename Derived::Scalar> zscore_stats(const Eigen::MatrixBase<Derived>& m,
                                                   typename Derived::Scalar eps = 1e-12) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() == 0 || m.cols() == 0) {
    throw Error(ErrorKind::invalid_argument, "zscore_normalize: empty matrix");
  }
  if (!(eps > Scalar(0))) {
    throw Error(ErrorKind::invalid_argument, "zscore_normalize: eps must be positive");
  }
  require_finite(m, "zscore_normalize");
  ZScoreStats<Scalar> stats;
  stats.mean = m.colwise().mean().transpose();
  const auto centered = (m.rowwise() - stats.mean.transpose()).eval();
  stats.std = (centered.colwise().squaredNorm() / Scalar(m.rows())).cwiseSqrt().transpose();
  stats.std = stats.std.cwiseMax(eps);
  return stats;
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
MatrixX<Scalar> apply_zscore(const Eigen::MatrixBase<Derived>& m, const ZScoreStats<Scalar>& stats) {
  if (m.cols() != stats.mean.size()) {
    throw Error(ErrorKind::invalid_argument, "apply_zscore: dimension mismatch");
  }
  return ((m.rowwise() - stats.mean.transpose()).array().rowwise() / stats.std.transpose().array())
      .matrix();
}

template <typename Derived, typename Scalar = typename Derived::Scalar>
MatrixX<Scalar> invert_zscore(const Eigen::MatrixBase<Derived>& z, const ZScoreStats<Scalar>& stats) {
  return ((z.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
          stats.mean.transpose());
}

/// Column-wise standardization. Statistics are returned for reuse on
/// held-out rows.
template <typename Derived>
ZScored<typename Derived::Scalar> zscore_normalize(const Eigen::MatrixBase<Derived>& m,
                                                   typename Derived::Scalar eps = 1e-12) {
  ZScored<typename Derived::Scalar> out;
  out.stats = zscore_stats(m, eps);
  out.values = apply_zscore(m, out.stats);
  return out;
}

/// Pairwise cosine similarity, rows of `a` against rows of `b`.
/// Zero-norm rows are an error.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                                      const Eigen::MatrixBase<DerivedB>& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::invalid_argument, "cosine_similarity: dimension mismatch");
  }
  auto na = l2_normalize(a);
  auto nb = l2_normalize(b);
  if (!na.zero_rows.empty() || !nb.zero_rows.empty()) {
    throw Error(ErrorKind::invalid_argument, "cosine_similarity: zero-norm embedding row");
  }
  return na.values * nb.values.transpose();
}

/// Stacks a list of row blocks with equal column count.
Matrix vstack(std::span<const Matrix> blocks);

enum class RankOrder { descending, ascending };

/// Rank 1 goes to the largest value (descending) or the smallest (ascending).
/// Ties receive the mean of the positions they span.
Vector rank_values(const Vector& values, RankOrder order);

std::uint64_t fnv1a(std::string_view text);

}  // namespace lovm
