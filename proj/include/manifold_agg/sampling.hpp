#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "manifold_agg/geometry.hpp"

namespace manifold_agg {

enum class RadialMode {
  /// Radius density follows the volume element (uniform in the ball).
  Volume,
  /// Radius uniform in [0, R); denser near the center.
  Uniform,
};

inline const char* to_string(RadialMode mode) {
  return mode == RadialMode::Volume ? "volume" : "uniform";
}

/// Uniformly distributed unit tangent direction at x.
template <class Rng>
Coords random_unit_tangent(const Manifold& m, const ManifoldPoint& x, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto basis = tangent_basis(m, x);
  for (;;) {
    Coords c = Coords::Zero(m.ambient_dim());
    for (const auto& e : basis) c += gauss(rng) * e;
    const double n = std::sqrt(detail::ambient_inner(m, c, c));
    if (n > 1e-12) return c / n;
  }
}

namespace detail {

/// Inverse CDF of the geodesic radius for a volume-uniform ball.
inline double volume_radius(const Manifold& m, double radius, double u) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return radius * std::pow(u, 1.0 / m.intrinsic_dim());
    case ManifoldKind::Sphere:
      return std::acos(1.0 - u * (1.0 - std::cos(radius)));
    case ManifoldKind::Hyperbolic:
      return std::acosh(1.0 + u * (std::cosh(radius) - 1.0));
  }
  return 0.0;
}

}  // namespace detail

/// `count` points strictly inside the geodesic ball B_radius(center),
/// deterministic in `seed`.
inline std::vector<ManifoldPoint> sample_in_ball(const Manifold& m, const ManifoldPoint& center,
                                                 double radius, std::size_t count,
                                                 std::uint64_t seed,
                                                 RadialMode mode = RadialMode::Volume) {
  require_on_manifold(m, center);
  if (!(radius > 0.0)) fail(ErrorKind::InvalidArgument, "ball radius must be positive");
  if (radius >= m.convexity_radius()) {
    fail(ErrorKind::RadiusTooLarge, "ball radius " + std::to_string(radius) +
                                        " is not below the convexity radius of " + m.name());
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<ManifoldPoint> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Coords dir = random_unit_tangent(m, center, rng);
    // Cap keeps the sample strictly inside after round-off.
    const double u = std::min(unif(rng), 1.0 - 1e-9);
    const double r = mode == RadialMode::Volume ? detail::volume_radius(m, radius, u) : radius * u;
    out.push_back(exp_map(m, center, {center, r * dir}));
  }
  return out;
}

/// Random tangent vector at x with norm uniform in (0, max_norm].
template <class Rng>
TangentVector random_tangent(const Manifold& m, const ManifoldPoint& x, double max_norm, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = max_norm * (1.0 - unif(rng));
  return {x, r * random_unit_tangent(m, x, rng)};
}

}  // namespace manifold_agg
