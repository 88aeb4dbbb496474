#pragma once

// Interaction potentials K(x, y) = g(d(x, y)^2), their intrinsic gradients,
// and the analytic constants consumed by the well-posedness estimates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"

namespace manifold_agg {

using ScalarFn = std::function<double(double)>;

struct PotentialProfile {
  std::string name;
  std::vector<double> params;
  ScalarFn g;
  ScalarFn g_prime;
  bool is_attractive = false;
  /// Global constant of the (Kglob) hypothesis, when the profile has one.
  std::optional<double> a_gprime;
  /// Closed forms of sup|g'| and Lip(g') on [0, delta^2], as functions of delta.
  ScalarFn c_gprime_closed;
  ScalarFn l_gprime_closed;
};

/// g(s) = s / 2.
inline PotentialProfile quadratic_profile() {
  PotentialProfile p;
  p.name = "quadratic";
  p.g = [](double s) { return 0.5 * s; };
  p.g_prime = [](double) { return 0.5; };
  p.is_attractive = true;
  p.a_gprime = 0.5;
  p.c_gprime_closed = [](double) { return 0.5; };
  p.l_gprime_closed = [](double) { return 0.0; };
  return p;
}

/// g(s) = s^{p/2} / p. g' is locally Lipschitz at 0 only for p = 2 or p >= 4.
inline PotentialProfile power_profile(double exponent) {
  if (!(exponent == 2.0 || exponent >= 4.0)) {
    fail(ErrorKind::InvalidArgument,
         "power profile needs p = 2 or p >= 4 (g' must be locally Lipschitz at 0), got " +
             std::to_string(exponent));
  }
  if (exponent == 2.0) {
    auto p = quadratic_profile();
    p.name = "power";
    p.params = {2.0};
    return p;
  }
  PotentialProfile p;
  p.name = "power";
  p.params = {exponent};
  const double half = exponent / 2.0;
  p.g = [=](double s) { return std::pow(s, half) / exponent; };
  p.g_prime = [=](double s) { return 0.5 * std::pow(s, half - 1.0); };
  p.is_attractive = true;
  p.c_gprime_closed = [=](double delta) { return 0.5 * std::pow(delta, exponent - 2.0); };
  p.l_gprime_closed = [=](double delta) {
    return 0.5 * (half - 1.0) * std::pow(delta, exponent - 4.0);
  };
  return p;
}

/// g'(s) = 1 / (2 sqrt(1 + s)); g(s) = sqrt(1 + s) - 1.
inline PotentialProfile bounded_attractive_profile() {
  PotentialProfile p;
  p.name = "bounded-attractive";
  p.g = [](double s) { return std::sqrt(1.0 + s) - 1.0; };
  p.g_prime = [](double s) { return 0.5 / std::sqrt(1.0 + s); };
  p.is_attractive = true;
  p.a_gprime = 0.5;
  p.c_gprime_closed = [](double) { return 0.5; };
  p.l_gprime_closed = [](double) { return 0.25; };
  return p;
}

/// g constant: no interaction.
inline PotentialProfile constant_profile(double value = 0.0) {
  PotentialProfile p;
  p.name = "constant";
  p.params = {value};
  p.g = [=](double) { return value; };
  p.g_prime = [](double) { return 0.0; };
  p.is_attractive = true;
  p.a_gprime = 0.0;
  p.c_gprime_closed = [](double) { return 0.0; };
  p.l_gprime_closed = [](double) { return 0.0; };
  return p;
}

inline const std::vector<std::string>& builtin_profile_names() {
  static const std::vector<std::string> names = {"quadratic", "power", "bounded-attractive",
                                                 "constant"};
  return names;
}

inline PotentialProfile make_profile(const std::string& name, const std::vector<double>& params = {}) {
  if (name == "quadratic") return quadratic_profile();
  if (name == "power") {
    if (params.size() != 1) fail(ErrorKind::ConfigError, "power profile takes one parameter p");
    try {
      return power_profile(params[0]);
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, e.what());
    }
  }
  if (name == "bounded-attractive") return bounded_attractive_profile();
  if (name == "constant") return constant_profile(params.empty() ? 0.0 : params[0]);
  fail(ErrorKind::ConfigError, "unknown potential '" + name + "'");
}

inline double eval_K(const PotentialProfile& profile, const Manifold& m, const ManifoldPoint& x,
                     const ManifoldPoint& y) {
  const double d = distance(m, x, y);
  return profile.g(d * d);
}

/// nabla_x K(x, y) = -2 g'(d^2) log_x(y).
inline TangentVector grad_K(const PotentialProfile& profile, const Manifold& m,
                            const ManifoldPoint& x, const ManifoldPoint& y) {
  TangentVector lg = log_map(m, x, y);
  const double d2 = detail::ambient_inner(m, lg.comps, lg.comps);
  lg.comps *= -2.0 * profile.g_prime(d2);
  return lg;
}

struct PotentialConstants {
  double delta = 0.0;
  double c_gprime = 0.0;
  double l_gprime = 0.0;
  /// Hessian bound of d_z^2 on a set of diameter delta.
  double L = 0.0;
  /// Lipschitz constant of z -> log_x z.
  double ell = 0.0;
  /// Lipschitz constant of the velocity field in space.
  double lbar = 0.0;
  /// Lipschitz constant of the velocity field in the measure (W1).
  double lambda = 0.0;
  double epsilon = 0.0;
  std::size_t grid_size = 0;
  bool closed_form = false;
};

/// L = 2 sqrt(-lambda) delta coth(sqrt(-lambda) delta), requiring
/// delta < pi / (2 sqrt(mu)) when mu > 0.
inline double hessian_bound_L(double lambda, double mu, double delta) {
  if (mu > 0.0 && !(delta < std::numbers::pi / (2.0 * std::sqrt(mu)))) {
    fail(ErrorKind::DiameterTooLarge, "diameter " + std::to_string(delta) +
                                          " violates delta < pi/(2 sqrt(mu))");
  }
  return 2.0 * hessian_upper_factor(lambda, delta);
}

/// ell = (pi - eps) / sin(pi - eps) when mu > 0 (needs delta <= (pi - eps)/sqrt(mu)), else 1.
inline double log_lipschitz_ell(double mu, double delta, double epsilon) {
  if (mu <= 0.0) return 1.0;
  if (!(epsilon > 0.0 && epsilon < std::numbers::pi)) {
    fail(ErrorKind::InvalidArgument, "epsilon must lie in (0, pi)");
  }
  const double a = std::numbers::pi - epsilon;
  if (delta > a / std::sqrt(mu) * (1.0 + 1e-14)) {
    fail(ErrorKind::DiameterTooLarge, "diameter " + std::to_string(delta) +
                                          " violates delta <= (pi - eps)/sqrt(mu)");
  }
  return a / std::sin(a);
}

/// sup |g'| over a uniform grid on [0, delta^2].
inline double estimate_c_gprime(const PotentialProfile& profile, double delta,
                                std::size_t grid_size = 10000) {
  const double top = delta * delta;
  double best = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double s = top * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    best = std::max(best, std::abs(profile.g_prime(s)));
  }
  return best;
}

/// Lip(g') on [0, delta^2] as sup |g''| over a uniform grid, with g''
/// from second-order differences (one-sided at the end points).
inline double estimate_l_gprime(const PotentialProfile& profile, double delta,
                                std::size_t grid_size = 10000) {
  const double top = delta * delta;
  if (top == 0.0) return 0.0;
  const double h = 1e-5 * top;
  const auto& f = profile.g_prime;
  double best = 0.0;
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double s = top * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    double slope;
    if (s - h < 0.0) {
      slope = (-3.0 * f(s) + 4.0 * f(s + h) - f(s + 2 * h)) / (2 * h);
    } else if (s + h > top) {
      slope = (3.0 * f(s) - 4.0 * f(s - h) + f(s - 2 * h)) / (2 * h);
    } else {
      slope = (f(s + h) - f(s - h)) / (2 * h);
    }
    best = std::max(best, std::abs(slope));
  }
  return best;
}

/// All constants of the local theory on a set of diameter delta inside a
/// manifold with curvature in [lambda, mu].
inline PotentialConstants profile_constants(const PotentialProfile& profile, double delta,
                                            double lambda, double mu,
                                            double epsilon = std::numbers::pi / 2,
                                            std::size_t grid_size = 10000,
                                            bool use_closed_forms = true) {
  if (!(delta > 0.0)) fail(ErrorKind::InvalidArgument, "diameter bound must be positive");
  if (grid_size < 3) fail(ErrorKind::InvalidArgument, "grid needs at least 3 points");
  PotentialConstants k;
  k.delta = delta;
  k.epsilon = epsilon;
  k.L = hessian_bound_L(lambda, mu, delta);
  k.ell = log_lipschitz_ell(mu, delta, epsilon);
  if (use_closed_forms && profile.c_gprime_closed && profile.l_gprime_closed) {
    k.c_gprime = profile.c_gprime_closed(delta);
    k.l_gprime = profile.l_gprime_closed(delta);
    k.closed_form = true;
  } else {
    k.c_gprime = estimate_c_gprime(profile, delta, grid_size);
    k.l_gprime = estimate_l_gprime(profile, delta, grid_size);
    k.grid_size = grid_size;
  }
  const double d2 = delta * delta;
  k.lbar = k.c_gprime * k.L + 4.0 * d2 * k.l_gprime;
  k.lambda = 2.0 * k.c_gprime * k.ell + 4.0 * k.l_gprime * d2;
  return k;
}

inline PotentialConstants profile_constants(const PotentialProfile& profile, const Manifold& m,
                                            double delta, double epsilon = std::numbers::pi / 2) {
  return profile_constants(profile, delta, m.curvature_lower(), m.curvature_upper(), epsilon);
}

struct KglobReport {
  /// sup (|g'(r^2) r - g'(s^2) s| / |r - s|) - A.
  double lipschitz_violation = 0.0;
  /// sup |g'(r^2)| r - A; only evaluated for lambda < 0.
  std::optional<double> bound_violation;
  /// sup |g'(r^2) - g'(s^2)| s / (2 A |r - s|) - 1.
  double increment_violation = 0.0;
  double a_gprime = 0.0;
  double tolerance = 1e-9;
  bool lipschitz_ok = false;
  bool bound_ok = false;
  bool increment_ok = false;
  bool passed = false;
};

/// Grid check of the global hypothesis on g over [0, grid_max].
inline KglobReport check_kglob(const PotentialProfile& profile, double lambda, double grid_max,
                               std::size_t grid_size, double tolerance = 1e-9) {
  if (!profile.a_gprime) {
    fail(ErrorKind::MissingGlobalConstant, "profile '" + profile.name + "' has no global constant");
  }
  if (grid_size < 2 || !(grid_max > 0.0)) fail(ErrorKind::InvalidArgument, "bad Kglob grid");
  const double a = *profile.a_gprime;
  std::vector<double> r(grid_size), gp(grid_size), f(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    r[i] = grid_max * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    gp[i] = profile.g_prime(r[i] * r[i]);
    f[i] = gp[i] * r[i];
  }
  KglobReport rep;
  rep.a_gprime = a;
  rep.tolerance = tolerance;
  double lip = -kInfinity, increment = -kInfinity;
  for (std::size_t i = 0; i < grid_size; ++i) {
    for (std::size_t j = 0; j < grid_size; ++j) {
      if (i == j) continue;
      const double dr = std::abs(r[i] - r[j]);
      lip = std::max(lip, std::abs(f[i] - f[j]) / dr - a);
      const double lhs = std::abs(gp[i] - gp[j]) * r[j];
      increment = std::max(increment, a > 0.0 ? lhs / (2.0 * a * dr) - 1.0 : lhs / dr);
    }
  }
  rep.lipschitz_violation = lip;
  rep.increment_violation = increment;
  rep.lipschitz_ok = lip <= tolerance;
  rep.increment_ok = increment <= tolerance;
  rep.bound_ok = true;
  if (lambda < 0.0) {
    double bound = -kInfinity;
    for (std::size_t i = 0; i < grid_size; ++i) bound = std::max(bound, std::abs(gp[i]) * r[i] - a);
    rep.bound_violation = bound;
    rep.bound_ok = bound <= tolerance;
  }
  rep.passed = rep.lipschitz_ok && rep.bound_ok && rep.increment_ok;
  return rep;
}

}  // namespace manifold_agg
