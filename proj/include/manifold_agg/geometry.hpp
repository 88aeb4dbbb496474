#pragma once

// Chart-free Riemannian kernels on three model spaces, all in embedded
// coordinates:
//   Euclidean(n)  plain vectors in R^n
//   Sphere        unit sphere S^2 in R^3
//   Hyperbolic    upper sheet of the hyperboloid <x,x>_L = -1 in Minkowski
//                 3-space, <a,b>_L = a0*b0 + a1*b1 - a2*b2
//
// Every mutating operation projects its result back onto the constraint
// surface (points) or the tangent space (vectors).

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "manifold_agg/errors.hpp"

namespace manifold_agg {

inline constexpr int kMaxAmbientDim = 8;

/// Ambient coordinates; capacity is inline so kernels never touch the heap.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxAmbientDim, 1>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kConstraintTol = 1e-10;
/// Pairs closer than this to the sphere's cut locus are rejected.
inline constexpr double kAntipodalGuard = 1e-6;

enum class ManifoldKind { Euclidean, Sphere, Hyperbolic };

struct ManifoldPoint {
  Coords coords;
};

struct TangentVector {
  ManifoldPoint base;
  Coords comps;
};

/// Manifold descriptor: the model space plus its curvature bounds and radii.
class Manifold {
 public:
  static Manifold euclidean(int n) {
    if (n < 1 || n > kMaxAmbientDim) {
      fail(ErrorKind::InvalidArgument,
           "euclidean dimension must lie in [1, " + std::to_string(kMaxAmbientDim) + "]");
    }
    return Manifold(ManifoldKind::Euclidean, n);
  }
  static Manifold sphere() { return Manifold(ManifoldKind::Sphere, 3); }
  static Manifold hyperbolic() { return Manifold(ManifoldKind::Hyperbolic, 3); }

  ManifoldKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return kind_ == ManifoldKind::Euclidean ? ambient_dim_ : 2; }

  /// Lower sectional curvature bound (lambda <= 0).
  double curvature_lower() const { return kind_ == ManifoldKind::Hyperbolic ? -1.0 : 0.0; }
  /// Upper sectional curvature bound (mu >= 0).
  double curvature_upper() const { return kind_ == ManifoldKind::Sphere ? 1.0 : 0.0; }
  double injectivity_radius() const {
    return kind_ == ManifoldKind::Sphere ? std::numbers::pi : kInfinity;
  }
  double convexity_radius() const {
    return kind_ == ManifoldKind::Sphere ? std::numbers::pi / 2 : kInfinity;
  }

  std::string name() const {
    switch (kind_) {
      case ManifoldKind::Euclidean: return "euclidean(" + std::to_string(ambient_dim_) + ")";
      case ManifoldKind::Sphere: return "sphere";
      case ManifoldKind::Hyperbolic: return "hyperbolic";
    }
    return "unknown";
  }

  /// A canonical point: the origin, the north pole, or the hyperboloid vertex.
  ManifoldPoint home() const {
    Coords c = Coords::Zero(ambient_dim_);
    if (kind_ != ManifoldKind::Euclidean) c[2] = 1.0;
    return {c};
  }

  bool operator==(const Manifold&) const = default;

 private:
  Manifold(ManifoldKind kind, int dim) : kind_(kind), ambient_dim_(dim) {}

  ManifoldKind kind_;
  int ambient_dim_;
};

namespace detail {

inline double minkowski(const Coords& a, const Coords& b) {
  return a[0] * b[0] + a[1] * b[1] - a[2] * b[2];
}

inline double ambient_inner(const Manifold& m, const Coords& a, const Coords& b) {
  return m.kind() == ManifoldKind::Hyperbolic ? minkowski(a, b) : a.dot(b);
}

inline Coords cross(const Coords& a, const Coords& b) {
  Coords c(3);
  c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0];
  return c;
}

/// x*coth(x), continuous at 0.
inline double x_coth_x(double x) {
  if (std::abs(x) < 1e-6) return 1.0 + x * x / 3.0;
  return x / std::tanh(x);
}

/// x*cot(x), continuous at 0.
inline double x_cot_x(double x) {
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 3.0;
  return x / std::tan(x);
}

}  // namespace detail

inline void require_dim(const Manifold& m, const Coords& c, const char* what) {
  if (c.size() != m.ambient_dim()) {
    fail(ErrorKind::OffManifold, std::string(what) + " has " + std::to_string(c.size()) +
                                     " coordinates, expected " +
                                     std::to_string(m.ambient_dim()) + " for " + m.name());
  }
}

inline void require_on_manifold(const Manifold& m, const ManifoldPoint& x) {
  require_dim(m, x.coords, "point");
  if (!x.coords.allFinite()) fail(ErrorKind::OffManifold, "point has non-finite coordinates");
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return;
    case ManifoldKind::Sphere:
      if (std::abs(x.coords.norm() - 1.0) > kConstraintTol) {
        fail(ErrorKind::OffManifold, "sphere point with norm " + std::to_string(x.coords.norm()));
      }
      return;
    case ManifoldKind::Hyperbolic: {
      // Relative tolerance: far from the vertex the coordinates grow like e^r.
      const double q = -detail::minkowski(x.coords, x.coords);
      const double scale = std::max(1.0, x.coords[2] * x.coords[2]);
      if (x.coords[2] <= 0.0 || std::abs(q - 1.0) > kConstraintTol * scale) {
        fail(ErrorKind::OffManifold, "point is not on the upper hyperboloid sheet");
      }
      return;
    }
  }
}

inline void require_tangent(const Manifold& m, const TangentVector& v) {
  require_on_manifold(m, v.base);
  require_dim(m, v.comps, "tangent vector");
  if (!v.comps.allFinite()) fail(ErrorKind::OffManifold, "tangent vector is not finite");
  if (m.kind() == ManifoldKind::Euclidean) return;
  const double offset = detail::ambient_inner(m, v.base.coords, v.comps);
  const double scale = std::max(1.0, v.base.coords.norm() * v.comps.norm());
  if (std::abs(offset) > kConstraintTol * scale) {
    fail(ErrorKind::OffManifold, "vector is not tangent at its base point");
  }
}

/// Projects ambient coordinates onto the manifold.
inline ManifoldPoint project_point(const Manifold& m, Coords c) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      break;
    case ManifoldKind::Sphere:
      c /= c.norm();
      break;
    case ManifoldKind::Hyperbolic:
      c[2] = std::sqrt(1.0 + c[0] * c[0] + c[1] * c[1]);
      break;
  }
  return {c};
}

/// Projects ambient coordinates onto the tangent space at x.
inline Coords project_tangent(const Manifold& m, const ManifoldPoint& x, Coords c) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      break;
    case ManifoldKind::Sphere:
      c -= x.coords.dot(c) * x.coords;
      break;
    case ManifoldKind::Hyperbolic:
      c += detail::minkowski(x.coords, c) * x.coords;
      break;
  }
  return c;
}

/// Validated point constructor.
inline ManifoldPoint make_point(const Manifold& m, const Coords& c) {
  ManifoldPoint p{c};
  require_on_manifold(m, p);
  return p;
}

inline ManifoldPoint make_point(const Manifold& m, std::initializer_list<double> values) {
  Coords c(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) c[i++] = v;
  return make_point(m, c);
}

/// Validated tangent constructor.
inline TangentVector make_tangent(const Manifold& m, const ManifoldPoint& base, const Coords& comps) {
  TangentVector v{base, comps};
  require_tangent(m, v);
  return v;
}

inline TangentVector make_tangent(const Manifold& m, const ManifoldPoint& base,
                                  std::initializer_list<double> values) {
  Coords c(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) c[i++] = v;
  return make_tangent(m, base, c);
}

inline TangentVector zero_tangent(const Manifold& m, const ManifoldPoint& x) {
  return {x, Coords::Zero(m.ambient_dim())};
}

/// Riemannian inner product of two tangent vectors at the same base.
inline double inner(const Manifold& m, const ManifoldPoint& x, const TangentVector& u,
                    const TangentVector& v) {
  require_on_manifold(m, x);
  require_dim(m, u.comps, "tangent vector");
  require_dim(m, v.comps, "tangent vector");
  return detail::ambient_inner(m, u.comps, v.comps);
}

inline double norm(const Manifold& m, const TangentVector& v) {
  return std::sqrt(std::max(0.0, detail::ambient_inner(m, v.comps, v.comps)));
}

namespace detail {

/// Geodesic distance without input validation.
inline double raw_distance(const Manifold& m, const Coords& x, const Coords& y) {
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return (y - x).norm();
    case ManifoldKind::Sphere:
      return std::atan2(cross(x, y).norm(), x.dot(y));
    case ManifoldKind::Hyperbolic: {
      // d = 2 asinh(|y - x|_L / 2) avoids the cancellation of acosh near 1.
      const Coords diff = y - x;
      const double chord = std::sqrt(std::max(0.0, minkowski(diff, diff)));
      return 2.0 * std::asinh(chord / 2.0);
    }
  }
  return 0.0;
}

inline void check_cut_locus(const Manifold& m, double d) {
  if (m.kind() == ManifoldKind::Sphere && d >= std::numbers::pi - kAntipodalGuard) {
    fail(ErrorKind::AntipodalPair,
         "points at distance " + std::to_string(d) + " are within the antipodal guard");
  }
}

}  // namespace detail

inline double distance(const Manifold& m, const ManifoldPoint& x, const ManifoldPoint& y) {
  require_on_manifold(m, x);
  require_on_manifold(m, y);
  const double d = detail::raw_distance(m, x.coords, y.coords);
  detail::check_cut_locus(m, d);
  return d;
}

inline ManifoldPoint exp_map(const Manifold& m, const ManifoldPoint& x, const TangentVector& v) {
  require_on_manifold(m, x);
  require_dim(m, v.comps, "tangent vector");
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return {x.coords + v.comps};
    case ManifoldKind::Sphere: {
      const double n = v.comps.norm();
      if (n >= std::numbers::pi - kAntipodalGuard) {
        fail(ErrorKind::ExceedsInjectivity,
             "tangent length " + std::to_string(n) + " reaches the sphere's cut locus");
      }
      if (n == 0.0) return x;
      return project_point(m, std::cos(n) * x.coords + (std::sin(n) / n) * v.comps);
    }
    case ManifoldKind::Hyperbolic: {
      const double n = std::sqrt(std::max(0.0, detail::minkowski(v.comps, v.comps)));
      if (n == 0.0) return x;
      return project_point(m, std::cosh(n) * x.coords + (std::sinh(n) / n) * v.comps);
    }
  }
  return x;
}

inline TangentVector log_map(const Manifold& m, const ManifoldPoint& x, const ManifoldPoint& y) {
  require_on_manifold(m, x);
  require_on_manifold(m, y);
  const Coords diff = y.coords - x.coords;
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return {x, diff};
    case ManifoldKind::Sphere: {
      const double d = detail::raw_distance(m, x.coords, y.coords);
      detail::check_cut_locus(m, d);
      // y - (x.y) x written with 1 - x.y = |y - x|^2 / 2 to stay accurate when y ~ x.
      Coords u = diff + (0.5 * diff.squaredNorm()) * x.coords;
      u = project_tangent(m, x, u);
      const double un = u.norm();
      if (un == 0.0 || d == 0.0) return zero_tangent(m, x);
      return {x, (d / un) * u};
    }
    case ManifoldKind::Hyperbolic: {
      const double d = detail::raw_distance(m, x.coords, y.coords);
      // y - cosh(d) x with cosh(d) - 1 = |y - x|_L^2 / 2.
      Coords u = diff - (0.5 * detail::minkowski(diff, diff)) * x.coords;
      u = project_tangent(m, x, u);
      const double un = std::sqrt(std::max(0.0, detail::minkowski(u, u)));
      if (un == 0.0 || d == 0.0) return zero_tangent(m, x);
      return {x, (d / un) * u};
    }
  }
  return zero_tangent(m, x);
}

/// Parallel transport of v (based at x) to y along the minimizing geodesic.
inline TangentVector parallel_transport(const Manifold& m, const ManifoldPoint& x,
                                        const ManifoldPoint& y, const TangentVector& v) {
  require_on_manifold(m, x);
  require_on_manifold(m, y);
  require_dim(m, v.comps, "tangent vector");
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      return {y, v.comps};
    case ManifoldKind::Sphere: {
      detail::check_cut_locus(m, detail::raw_distance(m, x.coords, y.coords));
      // Rotation in the plane of the geodesic.
      const double denom = 1.0 + x.coords.dot(y.coords);
      Coords w = v.comps - (y.coords.dot(v.comps) / denom) * (x.coords + y.coords);
      return {y, project_tangent(m, y, w)};
    }
    case ManifoldKind::Hyperbolic: {
      // Boost in the Minkowski plane spanned by x and y.
      const double denom = 1.0 - detail::minkowski(x.coords, y.coords);
      Coords w = v.comps + (detail::minkowski(y.coords, v.comps) / denom) * (x.coords + y.coords);
      return {y, project_tangent(m, y, w)};
    }
  }
  return {y, v.comps};
}

/// Orthonormal basis of the tangent space at x.
inline std::vector<Coords> tangent_basis(const Manifold& m, const ManifoldPoint& x) {
  std::vector<Coords> basis;
  switch (m.kind()) {
    case ManifoldKind::Euclidean:
      for (int i = 0; i < m.ambient_dim(); ++i) basis.push_back(Coords::Unit(m.ambient_dim(), i));
      break;
    case ManifoldKind::Sphere: {
      Eigen::Index axis = 0;
      x.coords.cwiseAbs().minCoeff(&axis);
      Coords e1 = project_tangent(m, x, Coords::Unit(3, axis));
      e1.normalize();
      Coords e2 = detail::cross(x.coords, e1);
      e2.normalize();
      basis = {e1, e2};
      break;
    }
    case ManifoldKind::Hyperbolic: {
      // Transport the vertex frame; the boost never degenerates.
      const ManifoldPoint o = m.home();
      for (int i = 0; i < 2; ++i) {
        basis.push_back(parallel_transport(m, o, x, {o, Coords::Unit(3, i)}).comps);
      }
      break;
    }
  }
  return basis;
}

/// A vector field sampled pointwise.
using VectorField = std::function<TangentVector(const ManifoldPoint&)>;

enum class FiniteDifference { Forward, Central };

/// Default step: cbrt(machine epsilon) scaled by 1/max(1, |v|).
inline double default_fd_step(const Manifold& m, const TangentVector& v) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) / std::max(1.0, norm(m, v));
}

/// Covariant derivative of X at x in direction v by finite differences:
/// (Pi^{-1} X(gamma(h)) - X(x)) / h along gamma(t) = exp_x(t v).
/// Central falls back to forward when the backward point is inadmissible.
inline TangentVector covariant_fd(const Manifold& m, const VectorField& field,
                                  const ManifoldPoint& x, const TangentVector& v, double h,
                                  FiniteDifference scheme = FiniteDifference::Forward) {
  if (!(h > 0.0)) fail(ErrorKind::InvalidArgument, "finite-difference step must be positive");
  const auto pulled_back = [&](double t) {
    const ManifoldPoint gx = exp_map(m, x, {x, t * v.comps});
    return parallel_transport(m, gx, x, field(gx)).comps;
  };
  const Coords forward = pulled_back(h);
  if (scheme == FiniteDifference::Central) {
    try {
      const Coords backward = pulled_back(-h);
      return {x, project_tangent(m, x, (forward - backward) / (2.0 * h))};
    } catch (const Error& e) {
      if (!e.is_guard_violation()) throw;
    }
  }
  const Coords here = field(x).comps;
  return {x, project_tangent(m, x, (forward - here) / h)};
}

/// <Hess d_z^2(x) v, v>, using Hess d_z^2 = -2 nabla log_.(z).
inline double hessian_d2_quadform(const Manifold& m, const ManifoldPoint& x, const ManifoldPoint& z,
                                  const TangentVector& v) {
  distance(m, x, z);  // guard
  const VectorField to_z = [&](const ManifoldPoint& p) { return log_map(m, p, z); };
  const TangentVector dv =
      covariant_fd(m, to_z, x, v, default_fd_step(m, v), FiniteDifference::Central);
  return -2.0 * detail::ambient_inner(m, dv.comps, v.comps);
}

/// Hessian comparison factors for d_z^2 at distance d: the quadratic form lies
/// in [2 lower_factor |v|^2, 2 upper_factor |v|^2].
inline double hessian_lower_factor(double mu, double d) {
  return mu > 0.0 ? detail::x_cot_x(std::sqrt(mu) * d) : 1.0;
}
inline double hessian_upper_factor(double lambda, double d) {
  return lambda < 0.0 ? detail::x_coth_x(std::sqrt(-lambda) * d) : 1.0;
}

}  // namespace manifold_agg
