#pragma once

// Sampled certification of the analytic estimates behind the well-posedness
// theory. Every check returns a CheckReport; failures are reported, never
// thrown. Margins are (bound - measured), so a negative margin is a
// violation, and a check passes iff worst_margin >= -tolerance.
//
// Slack policy: pointwise inequalities get pure round-off tolerances;
// inequalities on integrated trajectories get a relative slack proportional
// to dt, since the bounds hold for the exact flow.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "manifold_agg/dynamics.hpp"
#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"
#include "manifold_agg/io.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/potentials.hpp"
#include "manifold_agg/sampling.hpp"
#include "manifold_agg/transport.hpp"

namespace manifold_agg {

using nlohmann::json;

struct CheckReport {
  std::string check_name;
  std::string manifold;
  std::size_t samples = 0;
  double worst_margin = kInfinity;
  double tolerance = 0.0;
  json worst_case = json::object();
  bool passed = false;
  std::uint64_t seed = 0;
  json details = json::object();
  /// Sub-checks of a composite check, each with its own tolerance.
  std::vector<CheckReport> parts;

  CheckReport() = default;
  CheckReport(std::string name, const Manifold& m, double tol, std::uint64_t seed_)
      : check_name(std::move(name)), manifold(m.name()), tolerance(tol), seed(seed_) {}

  template <class Describe>
  void observe(double margin, Describe&& describe) {
    ++samples;
    if (margin < worst_margin || std::isnan(margin)) {
      worst_margin = std::isnan(margin) ? -kInfinity : margin;
      worst_case = describe();
    }
  }

  /// Folds parts into this report: the composite margin is the smallest
  /// tolerance-adjusted part margin, checked against zero.
  void add_part(CheckReport part) {
    part.finalize();
    samples += part.samples;
    const double adjusted = part.worst_margin + part.tolerance;
    if (adjusted < worst_margin || parts.empty()) {
      worst_margin = adjusted;
      worst_case = {{"part", part.check_name}, {"case", part.worst_case}};
    }
    parts.push_back(std::move(part));
  }

  CheckReport& finalize() {
    if (samples == 0 && parts.empty()) worst_margin = 0.0;
    passed = worst_margin >= -tolerance;
    for (const auto& p : parts) passed = passed && p.passed;
    return *this;
  }
};

inline json to_json(const CheckReport& r) {
  json j = {{"check_name", r.check_name}, {"manifold", r.manifold}, {"samples", r.samples},
            {"worst_margin", r.worst_margin}, {"tolerance", r.tolerance},
            {"worst_case", r.worst_case},     {"passed", r.passed},       {"seed", r.seed},
            {"details", r.details}};
  if (!r.parts.empty()) {
    j["parts"] = json::array();
    for (const auto& p : r.parts) j["parts"].push_back(to_json(p));
  }
  return j;
}

inline std::string summary_line(const CheckReport& r) {
  std::ostringstream os;
  os << (r.passed ? "[PASS] " : "[FAIL] ") << r.check_name << " (" << r.manifold
     << ") samples=" << r.samples << " worst_margin=" << std::setprecision(6) << r.worst_margin
     << " tol=" << r.tolerance;
  for (const auto& p : r.parts) {
    os << "\n    " << (p.passed ? "pass " : "FAIL ") << p.check_name << " worst_margin=" << p.worst_margin
       << " tol=" << p.tolerance;
  }
  return os.str();
}

/// Named replacements for analytic constants, used to exercise failure paths.
/// Recognized names: L, ell, lbar, lambda, c_gprime, l_gprime.
struct ConstantOverrides {
  std::map<std::string, double> values;

  static const std::vector<std::string>& known() {
    static const std::vector<std::string> names = {"L", "ell", "lbar", "lambda", "c_gprime", "l_gprime"};
    return names;
  }

  void set(const std::string& name, double v) {
    if (std::find(known().begin(), known().end(), name) == known().end()) {
      fail(ErrorKind::ConfigError, "unknown constant '" + name + "'");
    }
    values[name] = v;
  }

  double value(const std::string& name, double fallback) const {
    const auto it = values.find(name);
    return it == values.end() ? fallback : it->second;
  }

  /// Replaces base constants, then re-derives lbar and lambda unless those
  /// are overridden themselves.
  PotentialConstants apply(PotentialConstants k) const {
    if (values.empty()) return k;
    k.L = value("L", k.L);
    k.ell = value("ell", k.ell);
    k.c_gprime = value("c_gprime", k.c_gprime);
    k.l_gprime = value("l_gprime", k.l_gprime);
    const double d2 = k.delta * k.delta;
    k.lbar = value("lbar", k.c_gprime * k.L + 4.0 * d2 * k.l_gprime);
    k.lambda = value("lambda", 2.0 * k.c_gprime * k.ell + 4.0 * k.l_gprime * d2);
    return k;
  }
};

inline json to_json(const PotentialConstants& k) {
  return {{"delta", k.delta}, {"c_gprime", k.c_gprime}, {"l_gprime", k.l_gprime}, {"L", k.L},
          {"ell", k.ell},     {"lbar", k.lbar},         {"lambda", k.lambda},     {"epsilon", k.epsilon},
          {"grid_size", k.grid_size}, {"closed_form", k.closed_form}};
}

namespace detail {

/// Default sampling ball for a manifold: radius below the convexity radius.
inline double default_ball_radius(const Manifold& m) {
  return m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 4 : 1.0;
}

/// Center of the sampling region: the home point, moved randomly off it on
/// curved spaces so samples do not sit at a special coordinate location.
inline ManifoldPoint sampling_center(const Manifold& m, std::uint64_t seed) {
  if (m.kind() == ManifoldKind::Euclidean) return m.home();
  const double r = m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 4 : 1.0;
  return sample_in_ball(m, m.home(), r, 1, seed ^ 0x9e3779b97f4a7c15ULL).front();
}

inline double tangent_error(const Manifold& m, const Coords& a, const Coords& b) {
  const Coords d = a - b;
  return std::sqrt(std::abs(ambient_inner(m, d, d)));
}

inline json point_json(const ManifoldPoint& p) { return io::to_json(p.coords); }

/// Unit tangent at x orthogonal to u (u may be zero).
template <class Rng>
Coords orthogonal_unit(const Manifold& m, const ManifoldPoint& x, const Coords& u, Rng& rng) {
  const double un2 = ambient_inner(m, u, u);
  for (;;) {
    Coords c = random_unit_tangent(m, x, rng);
    if (un2 > 0.0) c -= (ambient_inner(m, c, u) / un2) * u;
    const double n = std::sqrt(std::max(0.0, ambient_inner(m, c, c)));
    if (n > 1e-6) return c / n;
  }
}

}  // namespace detail

/// Transport isometry, inverse, Pi_yx log_y x = -log_x y, and exp/log round trips.
inline CheckReport check_transport_identities(const Manifold& m, std::size_t samples,
                                              std::uint64_t seed) {
  CheckReport rep("transport_identities", m, 1e-9, seed);
  const ManifoldPoint c = detail::sampling_center(m, seed);
  const double radius = detail::default_ball_radius(m);
  const auto xs = sample_in_ball(m, c, radius, samples, seed);
  const auto ys = sample_in_ball(m, c, radius, samples, seed + 1);
  std::mt19937_64 rng(seed + 2);
  const double round_trip_norm = std::min(1.0, m.injectivity_radius() / 2.0);
  double worst[5] = {0, 0, 0, 0, 0};
  for (std::size_t k = 0; k < samples; ++k) {
    const ManifoldPoint& x = xs[k];
    const ManifoldPoint& y = ys[k];
    const TangentVector v = random_tangent(m, x, 1.0, rng);
    const TangentVector u = random_tangent(m, x, round_trip_norm * 0.999, rng);
    const TangentVector pv = parallel_transport(m, x, y, v);
    const double e_iso = std::abs(norm(m, pv) - norm(m, v));
    const double e_inv = detail::tangent_error(m, parallel_transport(m, y, x, pv).comps, v.comps);
    const TangentVector lyx = log_map(m, y, x);
    const double e_plog =
        detail::tangent_error(m, parallel_transport(m, y, x, lyx).comps, -log_map(m, x, y).comps);
    const double e_rt = detail::tangent_error(m, log_map(m, x, exp_map(m, x, u)).comps, u.comps);
    const double e_el = (exp_map(m, x, log_map(m, x, y)).coords - y.coords).norm();
    const double errs[5] = {e_iso, e_inv, e_plog, e_rt, e_el};
    double e = 0.0;
    for (int i = 0; i < 5; ++i) {
      worst[i] = std::max(worst[i], errs[i]);
      e = std::max(e, errs[i]);
    }
    rep.observe(-e, [&] {
      return json{{"x", detail::point_json(x)}, {"y", detail::point_json(y)},
                  {"v", io::to_json(v.comps)}, {"u", io::to_json(u.comps)}};
    });
  }
  rep.details = {{"isometry", worst[0]},  {"inverse", worst[1]},      {"parallel_log", worst[2]},
                 {"log_exp", worst[3]},   {"exp_log", worst[4]},      {"ball_radius", radius}};
  return rep.finalize();
}

/// Two-sided Hessian comparison for d_z^2, its attainment for directions
/// orthogonal to the geodesic, and the base-point Lipschitz bound
/// |log_x z - Pi_yx log_y z| <= (L/2) d(x, y).
inline CheckReport check_hessian_bounds(const Manifold& m, std::size_t samples, double delta,
                                        std::uint64_t seed, const ConstantOverrides& overrides = {}) {
  const double lambda = m.curvature_lower(), mu = m.curvature_upper();
  const double L = overrides.value("L", hessian_bound_L(lambda, mu, delta));
  CheckReport rep("hessian_bounds", m, 0.0, seed);
  const ManifoldPoint c = detail::sampling_center(m, seed);
  const double radius = delta / 2.0;
  const auto xs = sample_in_ball(m, c, radius, samples, seed);
  const auto zs = sample_in_ball(m, c, radius, samples, seed + 1);
  const auto ys = sample_in_ball(m, c, radius, samples, seed + 2);
  std::mt19937_64 rng(seed + 3);

  CheckReport two_sided("hessian_two_sided", m, 1e-3, seed);
  CheckReport attain("hessian_attainment", m, 1e-3, seed);
  CheckReport lip("d2_lipschitz", m, 1e-6, seed);
  double max_d = 0.0, margin_at_max_d = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const ManifoldPoint &x = xs[k], &z = zs[k], &y = ys[k];
    const double d = distance(m, x, z);
    const TangentVector v = random_tangent(m, x, 1.0, rng);
    const double vv = detail::ambient_inner(m, v.comps, v.comps);
    const double q = hessian_d2_quadform(m, x, z, v);
    const double lb = 2.0 * hessian_lower_factor(mu, d) * vv;
    const double ub = 2.0 * hessian_upper_factor(lambda, d) * vv;
    const double margin = std::min(q - lb, ub - q);
    if (d > max_d) {
      max_d = d;
      margin_at_max_d = q - lb;
    }
    two_sided.observe(margin, [&] {
      return json{{"x", detail::point_json(x)}, {"z", detail::point_json(z)},
                  {"v", io::to_json(v.comps)}, {"q", q}, {"lower", lb}, {"upper", ub}};
    });

    const TangentVector w{x, detail::orthogonal_unit(m, x, log_map(m, x, z).comps, rng)};
    const double qw = hessian_d2_quadform(m, x, z, w);
    const double lbw = 2.0 * hessian_lower_factor(mu, d);
    const double ubw = 2.0 * hessian_upper_factor(lambda, d);
    double err = 0.0;
    if (mu > 0.0) err = std::max(err, std::abs(qw - lbw));
    if (lambda < 0.0) err = std::max(err, std::abs(qw - ubw));
    if (mu == 0.0 && lambda == 0.0) err = std::max(std::abs(qw - lbw), std::abs(qw - ubw));
    attain.observe(-err, [&] {
      return json{{"x", detail::point_json(x)}, {"z", detail::point_json(z)}, {"q", qw},
                  {"lower", lbw}, {"upper", ubw}};
    });

    const double lhs = detail::tangent_error(
        m, log_map(m, x, z).comps, parallel_transport(m, y, x, log_map(m, y, z)).comps);
    const double rhs = 0.5 * L * distance(m, x, y);
    lip.observe(rhs - lhs, [&] {
      return json{{"x", detail::point_json(x)}, {"y", detail::point_json(y)},
                  {"z", detail::point_json(z)}, {"lhs", lhs}, {"rhs", rhs}};
    });
  }
  rep.details = {{"delta", delta}, {"L", L}, {"max_distance", max_d},
                 {"lower_margin_at_max_distance", margin_at_max_d}};
  rep.add_part(std::move(two_sided));
  rep.add_part(std::move(attain));
  rep.add_part(std::move(lip));
  return rep.finalize();
}

/// |log_x z - log_x y| <= ell d(y, z).
inline CheckReport check_log_lipschitz_second_arg(const Manifold& m, std::size_t samples,
                                                  double delta, double epsilon, std::uint64_t seed,
                                                  const ConstantOverrides& overrides = {}) {
  const double ell = overrides.value("ell", log_lipschitz_ell(m.curvature_upper(), delta, epsilon));
  CheckReport rep("log_lipschitz_second_arg", m, 1e-9, seed);
  const ManifoldPoint c = detail::sampling_center(m, seed);
  const double radius = delta / 2.0;
  const auto xs = sample_in_ball(m, c, radius, samples, seed);
  const auto ys = sample_in_ball(m, c, radius, samples, seed + 1);
  const auto zs = sample_in_ball(m, c, radius, samples, seed + 2);
  double tightest = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const ManifoldPoint &x = xs[k], &y = ys[k], &z = zs[k];
    const double lhs = detail::tangent_error(m, log_map(m, x, z).comps, log_map(m, x, y).comps);
    const double dyz = distance(m, y, z);
    if (dyz > 0.0) tightest = std::max(tightest, lhs / dyz);
    rep.observe(ell * dyz - lhs, [&] {
      return json{{"x", detail::point_json(x)}, {"y", detail::point_json(y)},
                  {"z", detail::point_json(z)}, {"lhs", lhs}, {"d_yz", dyz}};
    });
  }
  rep.details = {{"delta", delta}, {"epsilon", epsilon}, {"ell", ell}, {"max_observed_ratio", tightest}};
  return rep.finalize();
}

/// Two autonomous fields to be compared by the flow-map Gronwall estimate.
struct FieldPair {
  VectorField x_field;
  VectorField y_field;
  /// Lipschitz constant of x_field on a set of the given diameter.
  std::function<double(double)> lipschitz;
  /// Points that must lie in the set the Lipschitz constant refers to.
  std::vector<ManifoldPoint> anchors;
  std::vector<ManifoldPoint> starts;
  std::string description;
};

/// d(Psi_X^t x, Psi_Y^t x) <= (e^{Lt} - 1)/L |X - Y|_inf (1 + 5 dt).
inline CheckReport check_gronwall_flow_bound(const Manifold& m, const FieldPair& pair, double t_final,
                                             double dt, std::uint64_t seed = 0,
                                             Scheme scheme = Scheme::GeodesicRk4) {
  CheckReport rep("gronwall_flow_bound", m, 1e-12, seed);
  FlowConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t_final;
  cfg.validate();
  const auto rho = EmpiricalMeasure::uniform(m, pair.starts);
  std::vector<EmpiricalMeasure> fx = {rho}, fy = {rho};
  for (std::size_t k = 0; k < cfg.steps(); ++k) {
    const double h = cfg.time_at(k + 1) - cfg.time_at(k);
    fx.push_back(flow_step(m, pair.x_field, fx.back(), h, scheme));
    fy.push_back(flow_step(m, pair.y_field, fy.back(), h, scheme));
  }
  std::vector<ManifoldPoint> visited = pair.anchors;
  double sup_diff = 0.0;
  for (const auto* flow : {&fx, &fy}) {
    for (const auto& mu : *flow) {
      for (const auto& p : mu.points()) {
        visited.push_back(p);
        sup_diff = std::max(sup_diff, detail::tangent_error(m, pair.x_field(p).comps,
                                                            pair.y_field(p).comps));
      }
    }
  }
  const double delta = std::max(max_pairwise_distance(m, visited), 1e-9);
  const double L = pair.lipschitz(delta);
  const double slack = 1.0 + 5.0 * dt;
  double tightest = 0.0;
  for (std::size_t k = 0; k < fx.size(); ++k) {
    const double t = cfg.time_at(k);
    const double bound = gronwall_factor(L, t) * sup_diff * slack;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double d = distance(m, fx[k].point(i), fy[k].point(i));
      if (bound > 0.0) tightest = std::max(tightest, d / bound);
      rep.observe(bound - d, [&] {
        return json{{"t", t}, {"particle", i}, {"distance", d}, {"bound", bound}};
      });
    }
  }
  rep.details = {{"field_pair", pair.description}, {"lipschitz", L},    {"delta", delta},
                 {"sup_field_difference", sup_diff}, {"t_final", t_final}, {"dt", dt},
                 {"max_distance_over_bound", tightest}};
  return rep.finalize();
}

/// X = velocity of a frozen 5-particle measure; Y = X plus a transported
/// constant perturbation of the given norm.
inline FieldPair frozen_field_pair(const Manifold& m, const PotentialProfile& profile,
                                   std::uint64_t seed, double perturbation = 0.01,
                                   double epsilon = std::numbers::pi / 2) {
  const double radius = m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 10 : 0.5;
  const ManifoldPoint c = detail::sampling_center(m, seed);
  const auto frozen_pts = sample_in_ball(m, c, radius, 5, seed);
  const auto frozen = EmpiricalMeasure::uniform(m, frozen_pts);
  std::mt19937_64 rng(seed + 7);
  const ManifoldPoint anchor = frozen_pts.front();
  const TangentVector w{anchor, perturbation * random_unit_tangent(m, anchor, rng)};
  FieldPair pair;
  pair.x_field = [m, profile, frozen](const ManifoldPoint& p) { return velocity(m, profile, frozen, p); };
  pair.y_field = [m, profile, frozen, anchor, w](const ManifoldPoint& p) {
    TangentVector v = velocity(m, profile, frozen, p);
    v.comps += parallel_transport(m, anchor, p, w).comps;
    return v;
  };
  pair.lipschitz = [m, profile, epsilon](double delta) {
    return profile_constants(profile, m, delta, epsilon).lbar;
  };
  pair.anchors = frozen_pts;
  pair.starts = sample_in_ball(m, c, radius, 5, seed + 1);
  pair.description = "frozen 5-particle field vs transported perturbation of norm " + io::fmt(perturbation);
  return pair;
}

/// W1(rho_t, sigma_t) <= e^{(lbar + Lambda) t} W1(rho_0, sigma_0) (1 + 10 dt).
inline CheckReport check_stability(const Manifold& m, const PotentialProfile& profile,
                                   const EmpiricalMeasure& rho0, const EmpiricalMeasure& sigma0,
                                   const FlowConfig& cfg, std::uint64_t seed = 0,
                                   double epsilon = std::numbers::pi / 2,
                                   const ConstantOverrides& overrides = {}) {
  CheckReport rep("stability", m, 1e-12, seed);
  const TrajectoryRecord a = simulate(m, profile, rho0, cfg);
  const TrajectoryRecord b = simulate(m, profile, sigma0, cfg);
  double delta = 1e-9;
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::vector<ManifoldPoint> all = a.measures[k].points();
    all.insert(all.end(), b.measures[k].points().begin(), b.measures[k].points().end());
    delta = std::max(delta, max_pairwise_distance(m, all));
  }
  const PotentialConstants k = overrides.apply(profile_constants(profile, m, delta, epsilon));
  const auto series = w1_series(m, a, b, cfg.threads);
  const double w0 = series.front();
  const double slack = 1.0 + 10.0 * cfg.dt;
  double tightest = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double bound = std::exp((k.lbar + k.lambda) * a.times[i]) * w0 * slack;
    if (bound > 0.0) tightest = std::max(tightest, series[i] / bound);
    rep.observe(bound - series[i], [&] {
      return json{{"t", a.times[i]}, {"w1", series[i]}, {"bound", bound}};
    });
  }
  rep.details = {{"constants", to_json(k)}, {"w1_initial", w0}, {"w1_final", series.back()},
                 {"tightest_ratio", tightest}, {"particles", rho0.size()}, {"t_final", cfg.t_final},
                 {"dt", cfg.dt}};
  return rep.finalize();
}

/// Successive Picard iterate distances contract by at most C(T) Lambda (1 + 10 dt).
inline CheckReport check_contraction(const Manifold& m, const PotentialProfile& profile,
                                     const EmpiricalMeasure& rho0, const FlowConfig& cfg,
                                     double tol = 1e-8, std::size_t max_iter = 200,
                                     std::uint64_t seed = 0, double epsilon = std::numbers::pi / 2,
                                     const ConstantOverrides& overrides = {}) {
  CheckReport rep("contraction", m, 1e-12, seed);
  const PicardResult res = picard_solve(m, profile, rho0, cfg, tol, max_iter, epsilon);
  const PotentialConstants k = overrides.apply(res.constants);
  const double factor = gronwall_factor(k.lbar, cfg.t_final) * k.lambda;
  const double bound = factor * (1.0 + 10.0 * cfg.dt);
  const auto& d = res.distances;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t fit_n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0.0) {
      const double x = static_cast<double>(i), y = std::log(d[i]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
      ++fit_n;
    }
    if (i + 1 < d.size() && d[i] > 0.0) {
      const double ratio = d[i + 1] / d[i];
      rep.observe(bound - ratio, [&] {
        return json{{"iteration", i + 1}, {"ratio", ratio}, {"bound", bound}};
      });
    }
  }
  double fitted_rate = 0.0;
  if (fit_n >= 2) {
    const double slope = (fit_n * sxy - sx * sy) / (fit_n * sxx - sx * sx);
    fitted_rate = std::exp(slope);
  }
  rep.details = {{"constants", to_json(k)}, {"contraction_factor", factor},
                 {"iterations", d.size()}, {"distances", d},
                 {"fitted_geometric_rate", fitted_rate}, {"t_final", cfg.t_final}, {"dt", cfg.dt}};
  return rep.finalize();
}

/// For attractive g the support stays in the initial ball about p:
/// R(t) <= R(0) + slack and R nonincreasing up to slack = 10 dt sup|v|.
inline CheckReport check_support_containment(const Manifold& m, const PotentialProfile& profile,
                                             const EmpiricalMeasure& rho0, const FlowConfig& cfg,
                                             std::uint64_t seed = 0) {
  if (!profile.is_attractive) {
    fail(ErrorKind::NotAttractive, "profile '" + profile.name + "' is not attractive");
  }
  CheckReport rep("support_containment", m, 1e-12, seed);
  const TrajectoryRecord traj = simulate(m, profile, rho0, cfg);
  double vsup = 0.0;
  for (const auto& dg : traj.diagnostics) vsup = std::max(vsup, dg.velocity_sup_norm);
  const double slack = 10.0 * cfg.dt * vsup;
  const double r0 = traj.diagnostics.front().support_radius;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double r = traj.diagnostics[k].support_radius;
    double margin = r0 + slack - r;
    if (k > 0) margin = std::min(margin, traj.diagnostics[k - 1].support_radius + slack - r);
    if (rho0.size() == 2 && k > 0) {
      margin = std::min(margin, traj.diagnostics[k - 1].max_pairwise_distance + slack -
                                    traj.diagnostics[k].max_pairwise_distance);
    }
    rep.observe(margin, [&] {
      return json{{"t", traj.times[k]}, {"support_radius", r}, {"initial_radius", r0}};
    });
  }
  rep.details = {{"initial_radius", r0}, {"final_radius", traj.diagnostics.back().support_radius},
                 {"final_max_pairwise", traj.diagnostics.back().max_pairwise_distance},
                 {"velocity_sup", vsup}, {"slack", slack}, {"particles", rho0.size()},
                 {"t_final", cfg.t_final}, {"dt", cfg.dt}};
  return rep.finalize();
}

/// |v(x) - Pi_yx v(y)| <= lbar d(x, y) (1 + 1e-6) on pairs in the support
/// ball, and |v(x_i)| <= 2 C_g' Delta at the particles.
inline CheckReport check_field_lipschitz(const Manifold& m, const PotentialProfile& profile,
                                         const EmpiricalMeasure& rho, std::size_t samples,
                                         std::uint64_t seed, double epsilon = std::numbers::pi / 2,
                                         const ConstantOverrides& overrides = {}) {
  CheckReport rep("field_lipschitz", m, 1e-12, seed);
  const ManifoldPoint& c = rho.point(0);
  const double radius = std::max(support_radius(m, rho, c) * (1.0 + 1e-9), 1e-6);
  const double delta = 2.0 * radius;
  const PotentialConstants k = overrides.apply(profile_constants(profile, m, delta, epsilon));
  const auto xs = sample_in_ball(m, c, radius, samples, seed);
  const auto ys = sample_in_ball(m, c, radius, samples, seed + 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const TangentVector vx = velocity(m, profile, rho, xs[i]);
    const TangentVector vy = parallel_transport(m, ys[i], xs[i], velocity(m, profile, rho, ys[i]));
    const double lhs = detail::tangent_error(m, vx.comps, vy.comps);
    const double rhs = k.lbar * distance(m, xs[i], ys[i]) * (1.0 + 1e-6);
    rep.observe(rhs - lhs, [&] {
      return json{{"x", detail::point_json(xs[i])}, {"y", detail::point_json(ys[i])},
                  {"lhs", lhs}, {"rhs", rhs}};
    });
  }
  const double diam = max_pairwise_distance(m, rho);
  const double vbound = 2.0 * k.c_gprime * diam * (1.0 + 1e-6);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double speed = norm(m, velocity(m, profile, rho, rho.point(i)));
    rep.observe(vbound - speed, [&] { return json{{"particle", i}, {"speed", speed}, {"bound", vbound}}; });
  }
  rep.details = {{"constants", to_json(k)}, {"support_diameter", diam}};
  return rep.finalize();
}

/// sup_x |v[rho](x) - v[sigma](x)| <= Lambda W1(rho, sigma) (1 + 1e-6).
inline CheckReport check_measure_lipschitz(const Manifold& m, const PotentialProfile& profile,
                                           std::size_t pairs, std::uint64_t seed,
                                           double epsilon = std::numbers::pi / 2,
                                           const ConstantOverrides& overrides = {}) {
  CheckReport rep("measure_lipschitz", m, 1e-12, seed);
  const ManifoldPoint c = detail::sampling_center(m, seed);
  const double radius = m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 8 : 0.5;
  const PotentialConstants k = overrides.apply(profile_constants(profile, m, 2.0 * radius, epsilon));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  const auto random_weights = [&](std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) total += (x = unif(rng));
    for (auto& x : w) x /= total;
    return w;
  };
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::uint64_t s = seed + 10 * (p + 1);
    const auto rho = EmpiricalMeasure(m, sample_in_ball(m, c, radius, 6, s), random_weights(6));
    const auto sigma = EmpiricalMeasure(m, sample_in_ball(m, c, radius, 8, s + 1), random_weights(8));
    const double w1 = w1_distance(m, rho, sigma).distance;
    double lhs = 0.0;
    for (const auto& x : sample_in_ball(m, c, radius, 20, s + 2)) {
      lhs = std::max(lhs, detail::tangent_error(m, velocity(m, profile, rho, x).comps,
                                                velocity(m, profile, sigma, x).comps));
    }
    const double rhs = k.lambda * w1 * (1.0 + 1e-6);
    rep.observe(rhs - lhs, [&] { return json{{"pair", p}, {"lhs", lhs}, {"w1", w1}, {"rhs", rhs}}; });
  }
  rep.details = {{"constants", to_json(k)}};
  return rep.finalize();
}

}  // namespace manifold_agg
