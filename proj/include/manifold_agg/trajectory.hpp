#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "manifold_agg/errors.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/transport.hpp"

namespace manifold_agg {

struct Diagnostics {
  /// max_i d(p, x_i) about the trajectory's reference point p.
  double support_radius = 0.0;
  double max_pairwise_distance = 0.0;
  /// max_i |v(x_i)| of the driving field.
  double velocity_sup_norm = 0.0;
};

/// Time-stamped measures of one run. Push-forward keeps the weight vector
/// fixed, so every entry of `measures` shares the weights of the first.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<EmpiricalMeasure> measures;
  std::vector<Diagnostics> diagnostics;
  /// Per-particle speeds |v(x_i)| at each recorded time.
  std::vector<std::vector<double>> speeds;
  ManifoldPoint reference;

  std::size_t size() const { return times.size(); }
  const EmpiricalMeasure& final_measure() const { return measures.back(); }
};

inline void require_same_grid(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.times.size() != b.times.size()) {
    fail(ErrorKind::GridMismatch, "trajectories have " + std::to_string(a.times.size()) + " and " +
                                      std::to_string(b.times.size()) + " recorded times");
  }
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    if (std::abs(a.times[k] - b.times[k]) > 1e-12 * std::max(1.0, std::abs(a.times[k]))) {
      fail(ErrorKind::GridMismatch, "trajectories disagree at time index " + std::to_string(k));
    }
  }
}

/// W1 at every recorded time.
inline std::vector<double> w1_series(const Manifold& m, const TrajectoryRecord& a,
                                     const TrajectoryRecord& b, int threads = 1) {
  require_same_grid(a, b);
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = w1_distance(m, a.measures[k], b.measures[k], threads).distance;
  return out;
}

/// Sup-in-time W1 over a shared time grid.
inline double w1_sup(const Manifold& m, const TrajectoryRecord& a, const TrajectoryRecord& b,
                     int threads = 1) {
  const auto series = w1_series(m, a, b, threads);
  return series.empty() ? 0.0 : *std::max_element(series.begin(), series.end());
}

}  // namespace manifold_agg
