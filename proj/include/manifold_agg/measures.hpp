#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"

namespace manifold_agg {

inline constexpr double kMassTol = 1e-12;

/// Weighted particle cloud; a probability measure at particle resolution.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(const Manifold& m, std::vector<ManifoldPoint> points, std::vector<double> weights)
      : points_(std::move(points)), weights_(std::move(weights)) {
    if (points_.empty()) fail(ErrorKind::InvalidArgument, "measure needs at least one particle");
    if (points_.size() != weights_.size()) {
      fail(ErrorKind::InvalidArgument, "points and weights differ in length");
    }
    double total = 0.0;
    for (double w : weights_) {
      if (!(w > 0.0)) fail(ErrorKind::InvalidArgument, "weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > kMassTol) {
      fail(ErrorKind::InvalidArgument, "weights sum to " + std::to_string(total) + ", not 1");
    }
    for (const auto& p : points_) require_on_manifold(m, p);
  }

  static EmpiricalMeasure uniform(const Manifold& m, std::vector<ManifoldPoint> points) {
    const std::size_t n = points.size();
    return EmpiricalMeasure(m, std::move(points),
                            std::vector<double>(n, n ? 1.0 / static_cast<double>(n) : 0.0));
  }

  static EmpiricalMeasure dirac(const Manifold& m, const ManifoldPoint& x) {
    return EmpiricalMeasure(m, {x}, {1.0});
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<ManifoldPoint>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const ManifoldPoint& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }

  bool has_uniform_weights() const {
    const double w = 1.0 / static_cast<double>(size());
    return std::all_of(weights_.begin(), weights_.end(),
                       [&](double v) { return std::abs(v - w) <= 1e-15; });
  }

  /// Same weights, new positions; mass is carried over exactly.
  EmpiricalMeasure with_points(const Manifold& m, std::vector<ManifoldPoint> points) const {
    return EmpiricalMeasure(m, std::move(points), weights_);
  }

 private:
  std::vector<ManifoldPoint> points_;
  std::vector<double> weights_;
};

/// Psi # rho: moves every atom through the map, keeping its weight.
template <class PointMap>
EmpiricalMeasure push_forward(const Manifold& m, const EmpiricalMeasure& rho, PointMap&& psi) {
  std::vector<ManifoldPoint> moved;
  moved.reserve(rho.size());
  for (const auto& p : rho.points()) moved.push_back(psi(p));
  return rho.with_points(m, std::move(moved));
}

/// max_i d(p, x_i).
inline double support_radius(const Manifold& m, const EmpiricalMeasure& rho, const ManifoldPoint& p) {
  double r = 0.0;
  for (const auto& x : rho.points()) r = std::max(r, distance(m, p, x));
  return r;
}

/// max_{i<j} d(x_i, x_j).
inline double max_pairwise_distance(const Manifold& m, const std::vector<ManifoldPoint>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, distance(m, pts[i], pts[j]));
  }
  return best;
}

inline double max_pairwise_distance(const Manifold& m, const EmpiricalMeasure& rho) {
  return max_pairwise_distance(m, rho.points());
}

/// Integral of a scalar test function against the measure.
template <class Fn>
double integrate(const EmpiricalMeasure& rho, Fn&& zeta) {
  double acc = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) acc += rho.weight(i) * zeta(rho.point(i));
  return acc;
}

}  // namespace manifold_agg
