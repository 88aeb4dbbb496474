#pragma once

// Particle realization of the intrinsic aggregation equation
//     d/dt rho - div(rho grad(K * rho)) = 0,
// rho_t = Psi^t # rho_0, where Psi is the flow of v[rho] = -grad K * rho.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/parallel.hpp"
#include "manifold_agg/potentials.hpp"
#include "manifold_agg/trajectory.hpp"
#include "manifold_agg/transport.hpp"

namespace manifold_agg {

enum class Scheme { GeodesicEuler, GeodesicRk4 };

inline const char* to_string(Scheme s) {
  return s == Scheme::GeodesicEuler ? "geodesic-euler" : "geodesic-rk4";
}

inline Scheme parse_scheme(const std::string& name) {
  if (name == "geodesic-euler" || name == "euler") return Scheme::GeodesicEuler;
  if (name == "geodesic-rk4" || name == "rk4") return Scheme::GeodesicRk4;
  fail(ErrorKind::ConfigError, "unknown scheme '" + name + "'");
}

struct FlowConfig {
  double dt = 1e-2;
  double t_final = 1.0;
  Scheme scheme = Scheme::GeodesicRk4;
  int record_every = 1;
  /// Guard margin as a fraction of the initial support diameter.
  double diameter_margin = 0.1;
  /// Index into rho_0 of the reference point for support tracking.
  std::size_t reference_index = 0;
  int threads = 1;

  void validate() const {
    if (!(dt > 0.0)) fail(ErrorKind::ConfigError, "dt must be positive");
    if (!(t_final > 0.0)) fail(ErrorKind::ConfigError, "t_final must be positive");
    if (dt > t_final) fail(ErrorKind::ConfigError, "dt exceeds t_final");
    if (record_every < 1) fail(ErrorKind::ConfigError, "record_every must be >= 1");
    if (!(diameter_margin >= 0.0)) fail(ErrorKind::ConfigError, "diameter_margin must be >= 0");
    if (threads < 1) fail(ErrorKind::ConfigError, "threads must be >= 1");
  }

  std::size_t steps() const {
    return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
  }

  /// Time after `k` steps; the last step is shortened to land on t_final.
  double time_at(std::size_t k) const {
    return k >= steps() ? t_final : static_cast<double>(k) * dt;
  }

  bool records(std::size_t k) const {
    return k == 0 || k == steps() || k % static_cast<std::size_t>(record_every) == 0;
  }

  std::vector<double> recorded_times() const {
    std::vector<double> out;
    for (std::size_t k = 0; k <= steps(); ++k) {
      if (records(k)) out.push_back(time_at(k));
    }
    return out;
  }
};

/// C(t) = (e^{L t} - 1) / L, with the L -> 0 limit t.
inline double gronwall_factor(double lipschitz, double t) {
  if (std::abs(lipschitz * t) < 1e-12) return t;
  return std::expm1(lipschitz * t) / lipschitz;
}

/// Largest horizon T with C(T) * Lambda <= target.
inline double contraction_horizon(double lbar, double lambda, double target) {
  if (lambda <= 0.0) return kInfinity;
  if (lbar <= 0.0) return target / lambda;
  return std::log1p(target * lbar / lambda) / lbar;
}

namespace detail {

inline Coords velocity_comps(const Manifold& m, const PotentialProfile& profile,
                             const std::vector<ManifoldPoint>& sources,
                             const std::vector<double>& weights, const ManifoldPoint& x) {
  Coords acc = Coords::Zero(m.ambient_dim());
  for (std::size_t j = 0; j < sources.size(); ++j) {
    const TangentVector lg = log_map(m, x, sources[j]);
    const double d2 = ambient_inner(m, lg.comps, lg.comps);
    if (d2 == 0.0) continue;
    acc += (2.0 * weights[j] * profile.g_prime(d2)) * lg.comps;
  }
  return project_tangent(m, x, acc);
}

}  // namespace detail

/// v[rho](x) = -sum_j w_j grad K(x, y_j) = sum_j w_j 2 g'(d^2) log_x(y_j).
inline TangentVector velocity(const Manifold& m, const PotentialProfile& profile,
                              const EmpiricalMeasure& rho, const ManifoldPoint& x) {
  return {x, detail::velocity_comps(m, profile, rho.points(), rho.weights(), x)};
}

/// Tangent components of a field at each point of a configuration, at time t.
using ConfigurationField =
    std::function<std::vector<Coords>(double t, const std::vector<ManifoldPoint>& points)>;

/// One step of the geodesic integrator. RK4 stage velocities live at the
/// staged points and are transported back to the base point before they are
/// combined; the combined increment is applied with a single exponential.
inline std::vector<ManifoldPoint> advance(const Manifold& m, const std::vector<ManifoldPoint>& x,
                                          double t, double dt, Scheme scheme,
                                          const ConfigurationField& field,
                                          std::vector<Coords>* start_velocity = nullptr) {
  const std::size_t n = x.size();
  const std::vector<Coords> k1 = field(t, x);
  if (start_velocity) *start_velocity = k1;
  std::vector<ManifoldPoint> out(n);
  if (scheme == Scheme::GeodesicEuler) {
    for (std::size_t i = 0; i < n; ++i) out[i] = exp_map(m, x[i], {x[i], dt * k1[i]});
    return out;
  }
  const auto staged = [&](const std::vector<Coords>& k, double h) {
    std::vector<ManifoldPoint> pts(n);
    for (std::size_t i = 0; i < n; ++i) pts[i] = exp_map(m, x[i], {x[i], h * k[i]});
    return pts;
  };
  const auto pulled_back = [&](const std::vector<ManifoldPoint>& pts, const std::vector<Coords>& k) {
    std::vector<Coords> back(n);
    for (std::size_t i = 0; i < n; ++i) back[i] = parallel_transport(m, pts[i], x[i], {pts[i], k[i]}).comps;
    return back;
  };
  const auto p2 = staged(k1, 0.5 * dt);
  const auto k2 = pulled_back(p2, field(t + 0.5 * dt, p2));
  const auto p3 = staged(k2, 0.5 * dt);
  const auto k3 = pulled_back(p3, field(t + 0.5 * dt, p3));
  const auto p4 = staged(k3, dt);
  const auto k4 = pulled_back(p4, field(t + dt, p4));
  for (std::size_t i = 0; i < n; ++i) {
    const Coords inc = (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    out[i] = exp_map(m, x[i], {x[i], project_tangent(m, x[i], inc)});
  }
  return out;
}

/// One step of the flow of a fixed (configuration-independent) field.
inline EmpiricalMeasure flow_step(const Manifold& m, const VectorField& field,
                                  const EmpiricalMeasure& rho, double dt, Scheme scheme) {
  const ConfigurationField cf = [&](double, const std::vector<ManifoldPoint>& pts) {
    std::vector<Coords> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = field(pts[i]).comps;
    return out;
  };
  return rho.with_points(m, advance(m, rho.points(), 0.0, dt, scheme, cf));
}

/// The interaction field against the configuration it is evaluated on.
inline ConfigurationField self_consistent_field(const Manifold& m, const PotentialProfile& profile,
                                                const std::vector<double>& weights, int threads) {
  return [&m, &profile, weights, threads](double, const std::vector<ManifoldPoint>& pts) {
    std::vector<Coords> out(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
      out[i] = detail::velocity_comps(m, profile, pts, weights, pts[i]);
    });
    return out;
  };
}

namespace detail {

inline double diameter_guard_limit(const Manifold& m) {
  const double mu = m.curvature_upper();
  return mu > 0.0 ? std::numbers::pi / (2.0 * std::sqrt(mu)) : kInfinity;
}

inline void check_diameter_guard(const Manifold& m, double diameter, double margin, double t) {
  const double limit = diameter_guard_limit(m);
  if (std::isfinite(limit) && diameter + margin >= limit) {
    fail(ErrorKind::DiameterViolation,
         "diameter guard: support diameter " + std::to_string(diameter) + " plus margin " +
             std::to_string(margin) + " reaches pi/(2 sqrt(mu)) = " + std::to_string(limit) +
             " at t = " + std::to_string(t));
  }
}

inline void record_state(const Manifold& m, TrajectoryRecord& rec, double t,
                         const EmpiricalMeasure& mu, const std::vector<Coords>& vel) {
  Diagnostics diag;
  diag.support_radius = support_radius(m, mu, rec.reference);
  diag.max_pairwise_distance = max_pairwise_distance(m, mu);
  std::vector<double> speeds(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    speeds[i] = std::sqrt(std::max(0.0, ambient_inner(m, vel[i], vel[i])));
    diag.velocity_sup_norm = std::max(diag.velocity_sup_norm, speeds[i]);
  }
  rec.times.push_back(t);
  rec.measures.push_back(mu);
  rec.diagnostics.push_back(diag);
  rec.speeds.push_back(std::move(speeds));
}

/// Integrates rho0's particles in `field` over the config grid.
inline TrajectoryRecord integrate(const Manifold& m, const EmpiricalMeasure& rho0,
                                  const FlowConfig& cfg, const ConfigurationField& field,
                                  bool guard) {
  cfg.validate();
  if (cfg.reference_index >= rho0.size()) {
    fail(ErrorKind::ConfigError, "reference_index is out of range");
  }
  TrajectoryRecord rec;
  rec.reference = rho0.point(cfg.reference_index);
  const double diam0 = max_pairwise_distance(m, rho0);
  const double margin = cfg.diameter_margin * diam0;
  if (guard) check_diameter_guard(m, diam0, margin, 0.0);
  std::vector<ManifoldPoint> pts = rho0.points();
  const std::size_t steps = cfg.steps();
  std::vector<Coords> vel;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = cfg.time_at(k);
    const double h = cfg.time_at(k + 1) - t;
    std::vector<ManifoldPoint> next = advance(m, pts, t, h, cfg.scheme, field, &vel);
    if (cfg.records(k)) record_state(m, rec, t, rho0.with_points(m, pts), vel);
    pts = std::move(next);
    if (guard && std::isfinite(diameter_guard_limit(m))) {
      check_diameter_guard(m, max_pairwise_distance(m, pts), margin, cfg.time_at(k + 1));
    }
  }
  record_state(m, rec, cfg.t_final, rho0.with_points(m, pts), field(cfg.t_final, pts));
  return rec;
}

}  // namespace detail

/// Self-consistent evolution rho_t = Psi^t # rho_0; the field at every stage
/// is evaluated against the current particle configuration. On the sphere
/// the run aborts with DiameterViolation once the support diameter plus the
/// margin reaches pi / 2.
inline TrajectoryRecord simulate(const Manifold& m, const PotentialProfile& profile,
                                 const EmpiricalMeasure& rho0, const FlowConfig& cfg) {
  const auto field = self_consistent_field(m, profile, rho0.weights(), cfg.threads);
  return detail::integrate(m, rho0, cfg, field, true);
}

/// Index of the recorded time nearest to t; ties go to the earlier time.
inline std::size_t nearest_time_index(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0;
  if (it == times.end()) return times.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - times.begin());
  return (t - times[hi - 1] <= times[hi] - t) ? hi - 1 : hi;
}

/// Constant-in-time curve sigma(t) = rho0 on the config grid.
inline TrajectoryRecord constant_trajectory(const Manifold& m, const PotentialProfile& profile,
                                            const EmpiricalMeasure& rho0, const FlowConfig& cfg) {
  TrajectoryRecord rec;
  rec.reference = rho0.point(std::min(cfg.reference_index, rho0.size() - 1));
  std::vector<Coords> vel(rho0.size());
  for (std::size_t i = 0; i < rho0.size(); ++i) vel[i] = velocity(m, profile, rho0, rho0.point(i)).comps;
  for (double t : cfg.recorded_times()) detail::record_state(m, rec, t, rho0, vel);
  return rec;
}

/// Gamma(sigma)(t) = Psi^t_{v[sigma]} # rho0: rho0's particles advected by
/// the field of the frozen curve, read at the nearest recorded time.
inline TrajectoryRecord picard_map(const Manifold& m, const PotentialProfile& profile,
                                   const EmpiricalMeasure& rho0, const TrajectoryRecord& frozen,
                                   const FlowConfig& cfg) {
  cfg.validate();
  const auto grid = cfg.recorded_times();
  if (grid.size() != frozen.times.size()) {
    fail(ErrorKind::GridMismatch, "frozen trajectory is not on the config grid");
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (std::abs(grid[k] - frozen.times[k]) > 1e-12 * std::max(1.0, grid[k])) {
      fail(ErrorKind::GridMismatch, "frozen trajectory is not on the config grid");
    }
  }
  if (frozen.measures.front().weights() != rho0.weights()) {
    fail(ErrorKind::GridMismatch, "frozen trajectory does not carry rho0's weights");
  }
  const int threads = cfg.threads;
  const ConfigurationField field = [&](double t, const std::vector<ManifoldPoint>& pts) {
    const EmpiricalMeasure& src = frozen.measures[nearest_time_index(frozen.times, t)];
    std::vector<Coords> out(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) {
      out[i] = detail::velocity_comps(m, profile, src.points(), src.weights(), pts[i]);
    });
    return out;
  };
  return detail::integrate(m, rho0, cfg, field, false);
}

struct PicardResult {
  TrajectoryRecord solution;
  /// W1-sup distance between successive iterates.
  std::vector<double> distances;
  PotentialConstants constants;
  /// C(T) * Lambda.
  double contraction_factor = 0.0;
};

/// Diameter bound used for the constants of a run started from rho0.
inline double working_diameter(const Manifold& m, const EmpiricalMeasure& rho0, double margin) {
  return std::max(max_pairwise_distance(m, rho0) * (1.0 + margin), 1e-9);
}

/// Fixed-point iteration sigma^{k+1} = Gamma(sigma^k) from the constant curve.
inline PicardResult picard_solve(const Manifold& m, const PotentialProfile& profile,
                                 const EmpiricalMeasure& rho0, const FlowConfig& cfg, double tol,
                                 std::size_t max_iter, double epsilon = std::numbers::pi / 2) {
  cfg.validate();
  PicardResult res;
  res.constants = profile_constants(profile, m, working_diameter(m, rho0, cfg.diameter_margin), epsilon);
  res.contraction_factor = gronwall_factor(res.constants.lbar, cfg.t_final) * res.constants.lambda;
  if (res.contraction_factor >= 1.0) {
    fail(ErrorKind::NoContraction, "C(T) Lambda = " + std::to_string(res.contraction_factor) +
                                       " >= 1; shrink t_final below " +
                                       std::to_string(contraction_horizon(
                                           res.constants.lbar, res.constants.lambda, 1.0)));
  }
  TrajectoryRecord current = constant_trajectory(m, profile, rho0, cfg);
  for (std::size_t it = 0; it < max_iter; ++it) {
    TrajectoryRecord next = picard_map(m, profile, rho0, current, cfg);
    const double dist = w1_sup(m, next, current, cfg.threads);
    res.distances.push_back(dist);
    current = std::move(next);
    if (dist < tol) {
      res.solution = std::move(current);
      return res;
    }
  }
  fail(ErrorKind::MaxIterExceeded, "Picard iteration did not reach tolerance in " +
                                       std::to_string(max_iter) + " iterations");
}

/// Distance at time t between two equal masses interacting through g:
/// d' = -2 g'(d^2) d along their connecting geodesic.
inline double two_body_exact(const PotentialProfile& profile, double d0, double t) {
  if (t == 0.0) return d0;
  const bool quadratic =
      profile.name == "quadratic" || (profile.name == "power" && !profile.params.empty() &&
                                      profile.params[0] == 2.0);
  if (quadratic) return d0 * std::exp(-t);
  using State = std::vector<double>;
  State d = {d0};
  const auto rhs = [&](const State& s, State& ds, double) {
    ds[0] = -2.0 * profile.g_prime(s[0] * s[0]) * s[0];
  };
  namespace odeint = boost::numeric::odeint;
  odeint::integrate_adaptive(
      odeint::make_controlled(1e-14, 1e-12, odeint::runge_kutta_dopri5<State>()), rhs, d, 0.0, t,
      std::min(1e-3, t));
  return d[0];
}

}  // namespace manifold_agg
