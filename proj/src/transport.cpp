#include "lovm/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lovm {

CostMatrix build_cost_matrix(const Matrix& src_emb, const Matrix& tgt_emb, bool exponentiate) {
  if (src_emb.rows() < 1 || tgt_emb.rows() < 1) {
    throw Error(ErrorKind::invalid_argument, "build_cost_matrix: empty embedding set");
  }
  if (src_emb.cols() != tgt_emb.cols()) {
    throw Error(ErrorKind::invalid_argument, "build_cost_matrix: dimension mismatch");
  }
  CostMatrix cost;
  // Rounding can push 1 - cos a hair below zero for identical rows.
  cost.values = (1.0 - cosine_similarity(src_emb, tgt_emb).array()).cwiseMax(0.0).matrix();
  if (exponentiate) {
    cost.values = cost.values.array().exp().matrix();
    cost.exponentiated = true;
  }
  return cost;
}

std::vector<Index> filter_source_classes(const Matrix& src_emb, const Matrix& tgt_emb,
                                         double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "filter_source_classes: lambda outside [0,1]");
  }
  const Matrix sim = cosine_similarity(src_emb, tgt_emb);
  std::vector<Index> kept;
  for (Index i = 0; i < sim.rows(); ++i) {
    if (sim.row(i).maxCoeff() > lambda) kept.push_back(i);
  }
  if (kept.empty()) throw NoRelevantSourceClasses();
  return kept;
}

Vector uniform_marginal(Index n) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "uniform_marginal: n must be >= 1");
  return Vector::Constant(n, 1.0 / static_cast<double>(n));
}

namespace {

void check_marginal(const Vector& w, const char* name) {
  for (Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw Error(ErrorKind::invalid_argument,
                  std::string("transport: marginal ") + name + " must be finite and nonnegative");
    }
  }
}

void check_cost(const CostMatrix& cost, const Vector& u, const Vector& v) {
  if (cost.values.rows() != u.size() || cost.values.cols() != v.size()) {
    throw Error(ErrorKind::invalid_argument, "transport: cost shape does not match marginals");
  }
  if (cost.values.size() == 0) throw Error(ErrorKind::invalid_argument, "transport: empty cost");
  if (!cost.values.allFinite() || cost.values.minCoeff() < 0.0) {
    throw Error(ErrorKind::invalid_argument, "transport: cost must be finite and nonnegative");
  }
  check_marginal(u, "u");
  check_marginal(v, "v");
}

std::vector<Index> support(const Vector& w) {
  std::vector<Index> s;
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) s.push_back(i);
  }
  return s;
}

// Transportation problem solved by the primal network simplex on the
// bipartite graph. The basis is a spanning tree of m + n - 1 cells; node
// potentials are rebuilt from the tree after every pivot. Entering cells are
// priced in blocks; after a run of degenerate pivots the rule switches to
// Bland's (lowest index entering and leaving) until progress resumes.
class TransportationSimplex {
 public:
  TransportationSimplex(const Matrix& cost, const Vector& u, const Vector& v)
      : cost_(cost), m_(cost.rows()), n_(cost.cols()), u_(u), v_(v) {}

  Matrix solve() {
    initial_basis();
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    const long max_pivots = 200L * (m_ + n_) * (m_ + n_) + 1000;
    int degenerate_run = 0;
    Index block_start = 0;
    for (long pivot = 0;; ++pivot) {
      if (pivot > max_pivots) {
        throw Error(ErrorKind::solver, "network simplex: pivot limit exceeded");
      }
      compute_potentials();
      const bool bland = degenerate_run > kDegenerateLimit;
      const Index entering = bland ? price_bland(tol) : price_block(tol, block_start);
      if (entering < 0) break;
      const double theta = pivot_on(entering, bland);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    Matrix plan = Matrix::Zero(m_, n_);
    for (const auto& c : cells_) plan(c.i, c.j) = c.flow;
    return plan;
  }

 private:
  struct Cell {
    Index i;
    Index j;
    double flow;
  };
  static constexpr int kDegenerateLimit = 32;

  Index node_of_sink(Index j) const { return m_ + j; }
  Index cell_id(Index i, Index j) const { return i * n_ + j; }

  void initial_basis() {
    // Northwest corner rule; advancing a single index per step keeps exactly
    // m + n - 1 cells in the basis even when supply and demand exhaust together.
    Vector s = u_;
    Vector d = v_;
    Index i = 0;
    Index j = 0;
    is_basic_.assign(static_cast<std::size_t>(m_ * n_), 0);
    while (true) {
      double x = std::min(s[i], d[j]);
      if (i == m_ - 1 && j == n_ - 1) x = std::max(0.0, std::max(s[i], d[j]));
      add_cell(i, j, std::max(0.0, x));
      s[i] -= x;
      d[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (i == m_ - 1) {
        ++j;
      } else if (j == n_ - 1) {
        ++i;
      } else if (s[i] <= d[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void add_cell(Index i, Index j, double flow) {
    cells_.push_back({i, j, flow});
    is_basic_[static_cast<std::size_t>(cell_id(i, j))] = 1;
  }

  void compute_potentials() {
    const Index nodes = m_ + n_;
    adjacency_.assign(static_cast<std::size_t>(nodes), {});
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      adjacency_[static_cast<std::size_t>(cells_[c].i)].push_back(c);
      adjacency_[static_cast<std::size_t>(node_of_sink(cells_[c].j))].push_back(c);
    }
    potential_.assign(static_cast<std::size_t>(nodes), 0.0);
    parent_cell_.assign(static_cast<std::size_t>(nodes), kNone);
    depth_.assign(static_cast<std::size_t>(nodes), -1);
    std::vector<Index> queue{0};
    depth_[0] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const Index node = queue[q];
      for (std::size_t c : adjacency_[static_cast<std::size_t>(node)]) {
        const Cell& cell = cells_[c];
        const Index other = node < m_ ? node_of_sink(cell.j) : cell.i;
        if (depth_[static_cast<std::size_t>(other)] >= 0) continue;
        depth_[static_cast<std::size_t>(other)] = depth_[static_cast<std::size_t>(node)] + 1;
        parent_cell_[static_cast<std::size_t>(other)] = c;
        // a_i + b_j = c_ij
        potential_[static_cast<std::size_t>(other)] =
            cost_(cell.i, cell.j) - potential_[static_cast<std::size_t>(node)];
        queue.push_back(other);
      }
    }
    if (static_cast<Index>(queue.size()) != nodes) {
      throw Error(ErrorKind::solver, "network simplex: basis is not a spanning tree");
    }
  }

  double reduced_cost(Index i, Index j) const {
    return cost_(i, j) - potential_[static_cast<std::size_t>(i)] -
           potential_[static_cast<std::size_t>(node_of_sink(j))];
  }

  Index price_block(double tol, Index& block_start) const {
    const Index total = m_ * n_;
    const Index block = std::max<Index>(16, static_cast<Index>(std::sqrt(static_cast<double>(total))));
    Index best = -1;
    double best_rc = -tol;
    Index scanned = 0;
    Index id = block_start;
    while (scanned < total) {
      const Index end = std::min(total, scanned + block);
      for (; scanned < end; ++scanned) {
        if (!is_basic_[static_cast<std::size_t>(id)]) {
          const double rc = reduced_cost(id / n_, id % n_);
          if (rc < best_rc) {
            best_rc = rc;
            best = id;
          }
        }
        id = (id + 1 == total) ? 0 : id + 1;
      }
      if (best >= 0) {
        block_start = id;
        return best;
      }
    }
    return -1;
  }

  Index price_bland(double tol) const {
    for (Index id = 0; id < m_ * n_; ++id) {
      if (!is_basic_[static_cast<std::size_t>(id)] && reduced_cost(id / n_, id % n_) < -tol) return id;
    }
    return -1;
  }

  // Returns the step length.
  double pivot_on(Index entering, bool bland) {
    const Index ei = entering / n_;
    const Index ej = entering % n_;
    // Tree path from the sink of the entering cell to its source. Cells on
    // the path alternate -, +, -, ..., - starting at the sink side.
    std::vector<std::size_t> from_sink;
    std::vector<std::size_t> from_source;
    Index a = node_of_sink(ej);
    Index b = ei;
    while (a != b) {
      if (depth_[static_cast<std::size_t>(a)] >= depth_[static_cast<std::size_t>(b)]) {
        const std::size_t c = parent_cell_[static_cast<std::size_t>(a)];
        from_sink.push_back(c);
        a = other_end(c, a);
      } else {
        const std::size_t c = parent_cell_[static_cast<std::size_t>(b)];
        from_source.push_back(c);
        b = other_end(c, b);
      }
    }
    std::vector<std::size_t> path = from_sink;
    path.insert(path.end(), from_source.rbegin(), from_source.rend());

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = kNone;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Cell& c = cells_[path[k]];
      const bool better = c.flow < theta ||
                          (c.flow == theta && bland &&
                           cell_id(c.i, c.j) < cell_id(cells_[leaving].i, cells_[leaving].j));
      if (better) {
        theta = c.flow;
        leaving = path[k];
      }
    }
    for (std::size_t k = 0; k < path.size(); ++k) {
      Cell& c = cells_[path[k]];
      c.flow = (k % 2 == 0) ? c.flow - theta : c.flow + theta;
    }
    Cell& out = cells_[leaving];
    is_basic_[static_cast<std::size_t>(cell_id(out.i, out.j))] = 0;
    out = Cell{ei, ej, theta};
    is_basic_[static_cast<std::size_t>(entering)] = 1;
    return theta;
  }

  Index other_end(std::size_t c, Index node) const {
    const Cell& cell = cells_[c];
    return node < m_ ? node_of_sink(cell.j) : cell.i;
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  const Matrix& cost_;
  Index m_;
  Index n_;
  Vector u_;
  Vector v_;
  std::vector<Cell> cells_;
  std::vector<char> is_basic_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> potential_;
  std::vector<std::size_t> parent_cell_;
  std::vector<Index> depth_;
};

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double mx = x.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((x.array() - mx).exp().sum());
}

Matrix sinkhorn_plan(const Matrix& cost, const Vector& u, const Vector& v,
                     const SinkhornParams& params) {
  const Index m = cost.rows();
  const Index n = cost.cols();
  double eps = params.epsilon;
  if (eps <= 0.0) eps = 0.01 * cost.mean();
  if (eps <= 0.0) eps = 1e-3;  // all-zero cost: any plan is optimal
  const Vector log_u = u.array().log();
  const Vector log_v = v.array().log();
  Vector f = Vector::Zero(m);
  Vector g = Vector::Zero(n);
  Vector scratch_n(n);
  Vector scratch_m(m);
  auto plan_from = [&]() {
    Matrix p(m, n);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < n; ++j) p(i, j) = std::exp((f[i] + g[j] - cost(i, j)) / eps);
    }
    return p;
  };
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= params.max_iter; ++it) {
    for (Index i = 0; i < m; ++i) {
      scratch_n = (g.transpose() - cost.row(i)) / eps;
      f[i] = eps * (log_u[i] - log_sum_exp(scratch_n));
    }
    for (Index j = 0; j < n; ++j) {
      scratch_m = (f - cost.col(j)) / eps;
      g[j] = eps * (log_v[j] - log_sum_exp(scratch_m));
    }
    if (it % 10 == 0 || it == params.max_iter) {
      residual = (plan_from().rowwise().sum() - u).lpNorm<1>();
      if (residual <= params.tol) return plan_from();
    }
  }
  std::ostringstream os;
  os << "sinkhorn did not converge in " << params.max_iter << " iterations (residual " << residual
     << ")";
  throw Error(ErrorKind::solver, os.str());
}

// Projects an approximate plan onto the transport polytope.
Matrix round_to_marginals(Matrix p, const Vector& u, const Vector& v) {
  const Vector r = p.rowwise().sum();
  for (Index i = 0; i < p.rows(); ++i) {
    if (r[i] > u[i]) p.row(i) *= u[i] / r[i];
  }
  const Vector c = p.colwise().sum().transpose();
  for (Index j = 0; j < p.cols(); ++j) {
    if (c[j] > v[j]) p.col(j) *= v[j] / c[j];
  }
  const Vector err_r = u - p.rowwise().sum();
  const Vector err_c = v - p.colwise().sum().transpose();
  const double total = err_c.sum();
  if (total > 0.0) p += err_r * err_c.transpose() / total;
  return p;
}

}  // namespace

TransportPlan solve_ot(const CostMatrix& cost, const Vector& u, const Vector& v, OtMethod method,
                       const SinkhornParams& params) {
  check_cost(cost, u, v);
  const double su = u.sum();
  const double sv = v.sum();
  if (std::abs(su - sv) > 1e-9) {
    std::ostringstream os;
    os << "transport: marginal sums differ (" << su << " vs " << sv << ")";
    throw Error(ErrorKind::invalid_argument, os.str());
  }
  TransportPlan out;
  out.row_marginal = u;
  out.col_marginal = v;
  out.plan = Matrix::Zero(u.size(), v.size());
  out.solver_tag = method == OtMethod::exact ? "network_simplex" : "sinkhorn_rounded";

  // Zero-mass rows and columns carry no flow; solve on the support.
  const auto rows = support(u);
  const auto cols = support(v);
  if (!rows.empty() && !cols.empty()) {
    Matrix sub_cost(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    Vector sub_u(sub_cost.rows());
    Vector sub_v(sub_cost.cols());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      sub_u[static_cast<Index>(a)] = u[rows[a]];
      for (std::size_t b = 0; b < cols.size(); ++b) {
        sub_cost(static_cast<Index>(a), static_cast<Index>(b)) = cost.values(rows[a], cols[b]);
      }
    }
    for (std::size_t b = 0; b < cols.size(); ++b) sub_v[static_cast<Index>(b)] = v[cols[b]];

    Matrix sub_plan;
    if (method == OtMethod::exact) {
      sub_plan = TransportationSimplex(sub_cost, sub_u, sub_v).solve();
    } else {
      sub_plan = round_to_marginals(sinkhorn_plan(sub_cost, sub_u, sub_v, params), sub_u, sub_v);
    }
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < cols.size(); ++b) {
        out.plan(rows[a], cols[b]) = sub_plan(static_cast<Index>(a), static_cast<Index>(b));
      }
    }
  }
  out.total_mass = out.plan.sum();
  out.objective = (out.plan.array() * cost.values.array()).sum();
  return out;
}

TransportPlan solve_partial_ot(const CostMatrix& cost, const Vector& u, const Vector& v,
                               double mass_fraction) {
  if (!(mass_fraction > 0.0 && mass_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "solve_partial_ot: mass_fraction must lie in (0, 1]");
  }
  check_cost(cost, u, v);
  const Index m = u.size();
  const Index n = v.size();
  const double su = u.sum();
  const double sv = v.sum();
  const double mass = mass_fraction * std::min(su, sv);

  // The dummy row absorbs target mass left unserved and the dummy column
  // absorbs source mass left unshipped. Dummy-to-dummy flow would let real
  // shipments exceed `mass`, so that cell is priced above any real cost.
  const double big = 2.0 * cost.values.maxCoeff() + 1.0;
  CostMatrix augmented;
  augmented.values = Matrix::Zero(m + 1, n + 1);
  augmented.values.topLeftCorner(m, n) = cost.values;
  augmented.values(m, n) = big;
  Vector au(m + 1);
  Vector av(n + 1);
  au << u, sv - mass;
  av << v, su - mass;
  // Align totals exactly; both equal su + sv - mass up to rounding.
  av[n] += au.sum() - av.sum();
  if (av[n] < 0.0) av[n] = 0.0;

  const TransportPlan full = solve_ot(augmented, au, av, OtMethod::exact);
  TransportPlan out;
  out.plan = full.plan.topLeftCorner(m, n);
  out.row_marginal = u;
  out.col_marginal = v;
  out.total_mass = out.plan.sum();
  out.objective = (out.plan.array() * cost.values.array()).sum();
  out.solver_tag = "partial_network_simplex";
  return out;
}

}  // namespace lovm
