#include "lovm/core.hpp"

#include <algorithm>
#include <numeric>

namespace lovm {

Matrix vstack(std::span<const Matrix> blocks) {
  Index rows = 0;
  Index cols = -1;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    if (cols >= 0 && b.cols() != cols) {
      throw Error(ErrorKind::invalid_argument, "vstack: column count mismatch");
    }
    cols = b.cols();
    rows += b.rows();
  }
  Matrix out(rows, std::max<Index>(cols, 0));
  Index at = 0;
  for (const auto& b : blocks) {
    if (b.rows() == 0) continue;
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

Vector rank_values(const Vector& values, RankOrder order) {
  const Index n = values.size();
  for (Index i = 0; i < n; ++i) {
    if (std::isnan(values[i])) {
      throw Error(ErrorKind::invalid_argument, "rank_values: NaN value");
    }
  }
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return order == RankOrder::descending ? values[a] > values[b] : values[a] < values[b];
  });
  Vector ranks(n);
  Index start = 0;
  while (start < n) {
    Index end = start + 1;
    while (end < n && values[idx[end]] == values[idx[start]]) ++end;
    // positions start..end-1 carry ranks start+1..end
    const double avg = 0.5 * static_cast<double>(start + 1 + end);
    for (Index p = start; p < end; ++p) ranks[idx[p]] = avg;
    start = end;
  }
  return ranks;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace lovm
