#pragma once

// Orchestration of the named checks for a RunConfig.

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "manifold_agg/config.hpp"
#include "manifold_agg/parallel.hpp"
#include "manifold_agg/verify.hpp"

namespace manifold_agg {

/// Moves every particle along a random tangent of norm <= max_norm.
inline EmpiricalMeasure perturb_measure(const Manifold& m, const EmpiricalMeasure& rho, double max_norm,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ManifoldPoint> pts;
  pts.reserve(rho.size());
  for (const auto& p : rho.points()) pts.push_back(exp_map(m, p, random_tangent(m, p, max_norm, rng)));
  return rho.with_points(m, std::move(pts));
}

/// Diameter used by the pointwise Hessian and base-point checks.
inline double default_hessian_delta(const Manifold& m) {
  return m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 3 : 2.0;
}

/// Diameter used by the second-argument check; on the sphere the largest
/// value allowed for epsilon = pi/2.
inline double default_log_lipschitz_delta(const Manifold& m) {
  return m.kind() == ManifoldKind::Sphere ? std::numbers::pi / 2 : 2.0;
}

inline CheckReport kglob_report(const PotentialProfile& profile, const Manifold& m, double grid_max,
                                std::size_t grid_size) {
  const KglobReport k = check_kglob(profile, m.curvature_lower(), grid_max, grid_size);
  CheckReport rep("kglob", m, k.tolerance, 0);
  rep.observe(-k.lipschitz_violation, [] { return json{{"bound", "lipschitz"}}; });
  if (k.bound_violation) rep.observe(-*k.bound_violation, [] { return json{{"bound", "sup"}}; });
  rep.observe(-k.increment_violation, [] { return json{{"bound", "increment"}}; });
  rep.details = {{"a_gprime", k.a_gprime},
                 {"lipschitz_violation", k.lipschitz_violation},
                 {"bound_violation", k.bound_violation ? json(*k.bound_violation) : json(nullptr)},
                 {"increment_violation", k.increment_violation},
                 {"grid_max", grid_max},
                 {"grid_size", grid_size}};
  return rep.finalize();
}

/// Contraction horizon used when the config leaves it unset.
inline double auto_contraction_t_final(const Manifold& m, const PotentialProfile& profile,
                                       const EmpiricalMeasure& rho0, const FlowConfig& flow,
                                       double epsilon) {
  const auto k = profile_constants(profile, m, working_diameter(m, rho0, flow.diameter_margin), epsilon);
  return std::min(0.5, contraction_horizon(k.lbar, k.lambda, 0.9));
}

/// Runs one named check. Library errors become failed reports that carry
/// the error kind, so one broken check does not hide the others.
inline CheckReport run_check(const std::string& name, const RunConfig& cfg,
                             const ConstantOverrides& overrides = {}, int threads = 1) {
  const Manifold m = config_manifold(cfg);
  const PotentialProfile profile = config_profile(cfg);
  const ChecksSpec& k = cfg.checks;
  FlowConfig flow = cfg.flow;
  flow.threads = threads;
  try {
    if (name == "transport_identities") return check_transport_identities(m, k.samples, k.seed);
    if (name == "hessian_bounds") {
      return check_hessian_bounds(m, k.samples, k.delta.value_or(default_hessian_delta(m)), k.seed, overrides);
    }
    if (name == "log_lipschitz_second_arg") {
      return check_log_lipschitz_second_arg(m, k.samples, k.delta.value_or(default_log_lipschitz_delta(m)),
                                            k.epsilon, k.seed, overrides);
    }
    if (name == "gronwall_flow_bound") {
      CheckReport rep("gronwall_flow_bound", m, 0.0, k.seed);
      for (std::size_t i = 0; i < k.field_pairs; ++i) {
        auto pair = frozen_field_pair(m, profile, k.seed + i, 0.01, k.epsilon);
        if (overrides.values.count("lbar")) {
          const double lbar = overrides.values.at("lbar");
          pair.lipschitz = [lbar](double) { return lbar; };
        }
        auto part = check_gronwall_flow_bound(m, pair, 1.0, 0.01, k.seed + i);
        part.check_name = "pair_" + std::to_string(i);
        rep.add_part(std::move(part));
      }
      return rep.finalize();
    }
    if (name == "field_lipschitz") {
      const auto rho0 = build_initial_measure(m, cfg.initial);
      return check_field_lipschitz(m, profile, rho0, k.samples, k.seed, k.epsilon, overrides);
    }
    if (name == "measure_lipschitz") {
      return check_measure_lipschitz(m, profile, std::max<std::size_t>(1, k.samples / 25), k.seed,
                                     k.epsilon, overrides);
    }
    if (name == "kglob") return kglob_report(profile, m, k.kglob_grid_max, k.kglob_grid_size);

    const auto rho0 = build_initial_measure(m, cfg.initial);
    if (name == "stability") {
      flow.t_final = k.stability_t_final;
      const auto sigma0 = perturb_measure(m, rho0, k.perturbation, k.seed);
      return check_stability(m, profile, rho0, sigma0, flow, k.seed, k.epsilon, overrides);
    }
    if (name == "contraction") {
      flow.t_final = k.contraction_t_final.value_or(auto_contraction_t_final(m, profile, rho0, flow, k.epsilon));
      flow.dt = std::min(flow.dt, flow.t_final);
      return check_contraction(m, profile, rho0, flow, k.contraction_tol, k.contraction_max_iter, k.seed,
                               k.epsilon, overrides);
    }
    if (name == "support_containment") {
      flow.t_final = k.support_t_final;
      return check_support_containment(m, profile, rho0, flow, k.seed);
    }
    fail(ErrorKind::ConfigError, "unknown check '" + name + "'");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ConfigError) throw;
    CheckReport rep(name, m, 0.0, k.seed);
    rep.worst_margin = -kInfinity;
    rep.details = {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
    rep.passed = false;
    return rep;
  }
}

/// Runs the configured checks, spreading independent checks over threads.
inline std::vector<CheckReport> run_checks(const RunConfig& cfg, const ConstantOverrides& overrides = {}) {
  const auto& names = cfg.checks.names;
  std::vector<CheckReport> out(names.size());
  const int outer = std::min<int>(cfg.flow.threads, static_cast<int>(names.size()));
  const int inner = outer > 1 ? 1 : cfg.flow.threads;
  parallel_for(names.size(), outer, [&](std::size_t i) { out[i] = run_check(names[i], cfg, overrides, inner); });
  return out;
}

}  // namespace manifold_agg
