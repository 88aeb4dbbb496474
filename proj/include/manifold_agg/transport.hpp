#pragma once

// Exact discrete optimal transport with geodesic ground cost.
//
// Two solvers share one contract (the optimal cost of the transport LP):
//   * shortest augmenting path assignment (Hungarian with potentials) when
//     both measures have N atoms of weight 1/N;
//   * transportation network simplex on the dense bipartite graph otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/parallel.hpp"

namespace manifold_agg {

struct CouplingEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

struct CouplingPlan {
  std::vector<CouplingEntry> entries;
  double cost = 0.0;
};

struct W1Result {
  double distance = 0.0;
  CouplingPlan plan;
};

/// Dense row-major cost matrix.
class CostMatrix {
 public:
  CostMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

inline CostMatrix geodesic_costs(const Manifold& m, const EmpiricalMeasure& rho,
                                 const EmpiricalMeasure& sigma, int threads = 1) {
  CostMatrix c(rho.size(), sigma.size());
  parallel_for(rho.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < sigma.size(); ++j) c(i, j) = distance(m, rho.point(i), sigma.point(j));
  });
  return c;
}

/// Minimum-cost perfect matching of a square matrix; returns row -> column.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.rows();
  if (cost.cols() != n) fail(ErrorKind::InvalidArgument, "assignment needs a square cost matrix");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with column 0 as the virtual root.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[match[j] - 1] = j - 1;
  return row_to_col;
}

struct TransportSolution {
  std::vector<CouplingEntry> entries;
  double cost = 0.0;
  std::size_t pivots = 0;
};

/// Transportation simplex: a spanning-tree basis over rows and columns,
/// Dantzig pricing, and Bland's rule after a run of degenerate pivots.
inline TransportSolution solve_transport(const CostMatrix& cost, const std::vector<double>& supply,
                                         const std::vector<double>& demand) {
  const std::size_t n = cost.rows(), m = cost.cols();
  if (supply.size() != n || demand.size() != m || n == 0 || m == 0) {
    fail(ErrorKind::InvalidArgument, "transport marginals do not match the cost matrix");
  }
  struct Arc {
    std::size_t i, j;
    double flow;
  };
  std::vector<Arc> arcs;
  arcs.reserve(n + m - 1);
  std::vector<std::vector<std::size_t>> adj(n + m);  // node -> arc ids
  std::vector<char> basic(n * m, 0);
  const auto add_arc = [&](std::size_t i, std::size_t j, double flow) {
    const std::size_t id = arcs.size();
    arcs.push_back({i, j, flow});
    adj[i].push_back(id);
    adj[n + j].push_back(id);
    basic[i * m + j] = 1;
  };

  // North-west corner start; always yields n + m - 1 tree arcs.
  {
    std::vector<double> ra = supply, rb = demand;
    std::size_t i = 0, j = 0;
    for (;;) {
      if (i == n - 1 && j == m - 1) {
        add_arc(i, j, std::max(0.0, std::min(ra[i], rb[j])));
        break;
      }
      const double f = std::max(0.0, std::min(ra[i], rb[j]));
      add_arc(i, j, f);
      const bool row_done = (j == m - 1) || (i < n - 1 && ra[i] <= rb[j]);
      ra[i] -= f;
      rb[j] -= f;
      if (row_done) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  const double scale = std::max(1.0, cost.max_abs());
  const double rc_tol = 1e-12 * scale;
  const std::size_t nodes = n + m;
  std::vector<double> pot(nodes);
  std::vector<std::size_t> parent_arc(nodes);
  std::vector<std::size_t> parent_node(nodes);
  std::vector<char> seen(nodes);
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  const auto compute_potentials = [&] {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<std::size_t> q;
    pot[0] = 0.0;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      const std::size_t a = q.front();
      q.pop();
      for (std::size_t id : adj[a]) {
        const Arc& arc = arcs[id];
        const std::size_t b = a < n ? n + arc.j : arc.i;
        if (seen[b]) continue;
        seen[b] = 1;
        pot[b] = cost(arc.i, arc.j) - pot[a];
        q.push(b);
      }
    }
  };

  // Tree path from `from` to `to` as arc ids, `to` end first.
  const auto tree_path = [&](std::size_t from, std::size_t to) {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<std::size_t> q;
    seen[from] = 1;
    parent_arc[from] = none;
    q.push(from);
    while (!q.empty() && !seen[to]) {
      const std::size_t a = q.front();
      q.pop();
      for (std::size_t id : adj[a]) {
        const Arc& arc = arcs[id];
        const std::size_t b = a < n ? n + arc.j : arc.i;
        if (seen[b]) continue;
        seen[b] = 1;
        parent_arc[b] = id;
        parent_node[b] = a;
        q.push(b);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t x = to; x != from; x = parent_node[x]) path.push_back(parent_arc[x]);
    return path;
  };

  const auto remove_arc = [&](std::size_t id) {
    const auto drop = [&](std::vector<std::size_t>& list, std::size_t victim) {
      list.erase(std::find(list.begin(), list.end(), victim));
    };
    const Arc gone = arcs[id];
    drop(adj[gone.i], id);
    drop(adj[n + gone.j], id);
    basic[gone.i * m + gone.j] = 0;
    // Reuse the slot for the entering arc: caller overwrites arcs[id].
  };

  std::size_t pivots = 0, degenerate_run = 0;
  const std::size_t max_pivots = 100 * n * m + 10000;
  for (;;) {
    compute_potentials();
    const bool bland = degenerate_run > nodes;
    std::size_t ei = none, ej = none;
    double best = -rc_tol;
    for (std::size_t i = 0; i < n && !(bland && ei != none); ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (basic[i * m + j]) continue;
        const double rc = cost(i, j) - pot[i] - pot[n + j];
        if (rc < best) {
          best = bland ? -rc_tol : rc;
          ei = i;
          ej = j;
          if (bland) break;
        }
      }
    }
    if (ei == none) break;
    if (++pivots > max_pivots) fail(ErrorKind::MaxIterExceeded, "transport simplex did not terminate");

    // Cycle: entering arc (+), then alternating signs walking from column ej back to row ei.
    const std::vector<std::size_t> path = tree_path(ei, n + ej);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = none;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const Arc& arc = arcs[path[k]];
      const bool better = arc.flow < theta ||
                          (bland && arc.flow == theta &&
                           arc.i * m + arc.j < arcs[leaving].i * m + arcs[leaving].j);
      if (better) {
        theta = arc.flow;
        leaving = path[k];
      }
    }
    theta = std::max(0.0, theta);
    degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    for (std::size_t k = 0; k < path.size(); ++k) {
      Arc& arc = arcs[path[k]];
      arc.flow = (k % 2 == 0) ? std::max(0.0, arc.flow - theta) : arc.flow + theta;
    }
    remove_arc(leaving);
    arcs[leaving] = {ei, ej, theta};
    adj[ei].push_back(leaving);
    adj[n + ej].push_back(leaving);
    basic[ei * m + ej] = 1;
  }

  TransportSolution sol;
  sol.pivots = pivots;
  std::sort(arcs.begin(), arcs.end(),
            [](const Arc& a, const Arc& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (const Arc& arc : arcs) {
    if (arc.flow > 0.0) {
      sol.entries.push_back({arc.i, arc.j, arc.flow});
      sol.cost += arc.flow * cost(arc.i, arc.j);
    }
  }
  return sol;
}

/// Exact intrinsic 1-Wasserstein distance with its optimal coupling.
inline W1Result w1_distance(const Manifold& m, const EmpiricalMeasure& rho,
                            const EmpiricalMeasure& sigma, int threads = 1) {
  const CostMatrix c = geodesic_costs(m, rho, sigma, threads);
  W1Result res;
  if (rho.size() == sigma.size() && rho.has_uniform_weights() && sigma.has_uniform_weights()) {
    const auto match = solve_assignment(c);
    const double w = 1.0 / static_cast<double>(rho.size());
    double total = 0.0;
    for (std::size_t i = 0; i < match.size(); ++i) {
      total += c(i, match[i]);
      res.plan.entries.push_back({i, match[i], w});
    }
    res.plan.cost = total * w;
  } else {
    auto sol = solve_transport(c, rho.weights(), sigma.weights());
    res.plan.entries = std::move(sol.entries);
    res.plan.cost = sol.cost;
  }
  res.distance = res.plan.cost;
  return res;
}

/// Brute force over all N! matchings for equal-weight measures of equal size.
inline double w1_permutation_oracle(const Manifold& m, const EmpiricalMeasure& rho,
                                    const EmpiricalMeasure& sigma) {
  const std::size_t n = rho.size();
  if (sigma.size() != n || !rho.has_uniform_weights() || !sigma.has_uniform_weights()) {
    fail(ErrorKind::InvalidArgument, "permutation oracle needs equal-size uniform measures");
  }
  if (n > 9) fail(ErrorKind::InvalidArgument, "permutation oracle is limited to N <= 9");
  const CostMatrix c = geodesic_costs(m, rho, sigma);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += c(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

}  // namespace manifold_agg
