#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "manifold_agg/dynamics.hpp"
#include "manifold_agg/sampling.hpp"

using namespace manifold_agg;
using std::numbers::pi;

namespace {

std::vector<Manifold> all_manifolds() {
  return {Manifold::euclidean(2), Manifold::sphere(), Manifold::hyperbolic()};
}

/// Two equal masses at distance d0, placed symmetrically about the home point.
EmpiricalMeasure two_body(const Manifold& m, double d0) {
  const auto x = m.home();
  const auto b = tangent_basis(m, x);
  const auto p = exp_map(m, x, {x, 0.5 * d0 * b[0]});
  const auto q = exp_map(m, x, {x, -0.5 * d0 * b[0]});
  return EmpiricalMeasure::uniform(m, {p, q});
}

double final_gap(const Manifold& m, const PotentialProfile& g, double dt, Scheme scheme, double t = 1.0) {
  FlowConfig cfg;
  cfg.dt = dt;
  cfg.t_final = t;
  cfg.scheme = scheme;
  const auto traj = simulate(m, g, two_body(m, 1.0), cfg);
  return distance(m, traj.final_measure().point(0), traj.final_measure().point(1));
}

}  // namespace

TEST(Velocity, Examples) {
  const auto q = quadratic_profile();
  for (const auto& m : all_manifolds()) {
    const auto pts = sample_in_ball(m, m.home(), 0.7, 3, 1);
    const auto y = pts[0], x = pts[1];
    const auto v = velocity(m, q, EmpiricalMeasure::dirac(m, y), x);
    EXPECT_LE((v.comps - log_map(m, x, y).comps).norm(), 1e-15);

    const auto half = velocity(m, q, EmpiricalMeasure::uniform(m, {x, y}), x);
    EXPECT_LE((half.comps - 0.5 * log_map(m, x, y).comps).norm(), 1e-15);
    EXPECT_NEAR(norm(m, half), 0.5 * distance(m, x, y), 1e-12);

    // Midpoint between two equal masses.
    const auto rho = two_body(m, 0.8);
    for (const auto& g : {q, power_profile(4), bounded_attractive_profile()}) {
      EXPECT_LE(velocity(m, g, rho, m.home()).comps.norm(), 1e-12);
    }
  }
}

TEST(FlowStep, Examples) {
  const auto e = Manifold::euclidean(2);
  const auto rho = EmpiricalMeasure::uniform(e, sample_in_ball(e, e.home(), 1.0, 5, 2));
  const VectorField zero = [&](const ManifoldPoint& p) { return zero_tangent(e, p); };
  const VectorField c = [&](const ManifoldPoint& p) { return make_tangent(e, p, {0.3, -0.7}); };
  for (auto scheme : {Scheme::GeodesicEuler, Scheme::GeodesicRk4}) {
    const auto same = flow_step(e, zero, rho, 0.1, scheme);
    for (std::size_t i = 0; i < rho.size(); ++i) EXPECT_EQ(same.point(i).coords, rho.point(i).coords);
  }
  const auto moved = flow_step(e, c, rho, 0.1, Scheme::GeodesicEuler);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    EXPECT_DOUBLE_EQ(moved.point(i).coords[0], rho.point(i).coords[0] + 0.1 * 0.3);
    EXPECT_DOUBLE_EQ(moved.point(i).coords[1], rho.point(i).coords[1] - 0.1 * 0.7);
    EXPECT_EQ(moved.weight(i), rho.weight(i));
  }

  const auto s = Manifold::sphere();
  const VectorField push = [&](const ManifoldPoint& p) {
    return TangentVector{p, project_tangent(s, p, (Coords(3) << pi / 2, 0, 0).finished())};
  };
  const auto one = flow_step(s, push, EmpiricalMeasure::dirac(s, s.home()), 1.0, Scheme::GeodesicEuler);
  EXPECT_NEAR((one.point(0).coords - make_point(s, {1, 0, 0}).coords).norm(), 0.0, 1e-15);
}

TEST(FlowStep, SphereStepTooLarge) {
  const auto s = Manifold::sphere();
  const VectorField fast = [&](const ManifoldPoint& p) {
    return TangentVector{p, project_tangent(s, p, (Coords(3) << 4.0, 0, 0).finished())};
  };
  try {
    flow_step(s, fast, EmpiricalMeasure::dirac(s, s.home()), 1.0, Scheme::GeodesicEuler);
    FAIL() << "expected ExceedsInjectivity";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ExceedsInjectivity);
  }
}

TEST(FlowStep, Rk4TransportsStagesOnSphere) {
  // A rigid rotation about the z axis: after one full turn the point returns.
  // Transporting stages back along geodesics drops the order to three for
  // motion off a great circle; two-body motion along a geodesic keeps four.
  const auto s = Manifold::sphere();
  const VectorField rot = [&](const ManifoldPoint& p) {
    Coords c(3);
    c << -p.coords[1], p.coords[0], 0.0;
    return TangentVector{p, c};
  };
  const auto start = make_point(s, {std::sin(1.0), 0, std::cos(1.0)});
  const auto error = [&](int steps) {
    auto rho = EmpiricalMeasure::dirac(s, start);
    for (int k = 0; k < steps; ++k) rho = flow_step(s, rot, rho, 2 * pi / steps, Scheme::GeodesicRk4);
    return distance(s, rho.point(0), start);
  };
  const double e1 = error(50), e2 = error(100);
  EXPECT_LE(e2, 1e-4);
  EXPECT_NEAR(e1 / e2, 8.0, 1.5);
}

TEST(Simulate, SingleParticleIsStationary) {
  for (const auto& m : all_manifolds()) {
    const auto p = sample_in_ball(m, m.home(), 0.5, 1, 3).front();
    FlowConfig cfg;
    cfg.t_final = 0.5;
    const auto traj = simulate(m, quadratic_profile(), EmpiricalMeasure::dirac(m, p), cfg);
    for (const auto& mu : traj.measures) EXPECT_EQ(mu.point(0).coords, p.coords);
    EXPECT_EQ(traj.diagnostics.back().support_radius, 0.0);
  }
}

TEST(Simulate, TwoBodyMatchesExactSolution) {
  for (const auto& m : all_manifolds()) {
    EXPECT_NEAR(final_gap(m, quadratic_profile(), 1e-3, Scheme::GeodesicRk4), std::exp(-1.0), 1e-6) << m.name();
  }
  const auto b = bounded_attractive_profile();
  for (const auto& m : all_manifolds()) {
    EXPECT_NEAR(final_gap(m, b, 1e-2, Scheme::GeodesicRk4), two_body_exact(b, 1.0, 1.0), 1e-8) << m.name();
  }
}

TEST(Simulate, OrderOfAccuracy) {
  const auto q = quadratic_profile();
  const auto e = Manifold::euclidean(2);
  const double exact = std::exp(-1.0);
  const auto err = [&](double dt, Scheme s) { return std::abs(final_gap(e, q, dt, s) - exact); };
  const double e1 = err(0.1, Scheme::GeodesicEuler), e2 = err(0.05, Scheme::GeodesicEuler),
               e3 = err(0.025, Scheme::GeodesicEuler);
  EXPECT_NEAR(e1 / e2, 2.0, 0.3);
  EXPECT_NEAR(e2 / e3, 2.0, 0.3);
  const double r1 = err(0.1, Scheme::GeodesicRk4), r2 = err(0.05, Scheme::GeodesicRk4),
               r3 = err(0.025, Scheme::GeodesicRk4);
  EXPECT_NEAR(r1 / r2, 16.0, 5.0);
  EXPECT_NEAR(r2 / r3, 16.0, 5.0);
}

TEST(Simulate, WeightsAndGridInvariants) {
  const auto h = Manifold::hyperbolic();
  const auto pts = sample_in_ball(h, h.home(), 1.0, 4, 8);
  const EmpiricalMeasure rho(h, pts, {0.1, 0.2, 0.3, 0.4});
  FlowConfig cfg;
  cfg.dt = 0.03;
  cfg.t_final = 1.0;
  cfg.record_every = 4;
  const auto traj = simulate(h, power_profile(4), rho, cfg);
  EXPECT_EQ(traj.times.front(), 0.0);
  EXPECT_EQ(traj.times.back(), 1.0);
  for (std::size_t k = 1; k < traj.size(); ++k) EXPECT_GT(traj.times[k], traj.times[k - 1]);
  for (const auto& mu : traj.measures) EXPECT_EQ(mu.weights(), rho.weights());
  EXPECT_EQ(traj.times, cfg.recorded_times());
}

TEST(Simulate, HyperbolicAttractiveSupportShrinks) {
  const auto h = Manifold::hyperbolic();
  const auto rho = EmpiricalMeasure::uniform(h, sample_in_ball(h, h.home(), 1.5, 30, 4));
  FlowConfig cfg;
  cfg.t_final = 3.0;
  const auto traj = simulate(h, bounded_attractive_profile(), rho, cfg);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    EXPECT_LE(traj.diagnostics[k].support_radius, traj.diagnostics[k - 1].support_radius + 1e-6);
  }
}

TEST(Simulate, ThreadCountDoesNotChangeResults) {
  const auto s = Manifold::sphere();
  const auto rho = EmpiricalMeasure::uniform(s, sample_in_ball(s, s.home(), pi / 6, 25, 9));
  FlowConfig a, b;
  a.t_final = b.t_final = 0.3;
  b.threads = 3;
  const auto ta = simulate(s, quadratic_profile(), rho, a), tb = simulate(s, quadratic_profile(), rho, b);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    EXPECT_EQ(ta.final_measure().point(i).coords, tb.final_measure().point(i).coords);
  }
}

TEST(Simulate, SphereDiameterGuard) {
  const auto s = Manifold::sphere();
  const auto rho = EmpiricalMeasure::uniform(s, {make_point(s, {1, 0, 0}), make_point(s, {0, 1, 0})});
  try {
    simulate(s, quadratic_profile(), rho, FlowConfig{});
    FAIL() << "expected DiameterViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DiameterViolation);
    EXPECT_NE(std::string(e.what()).find("diameter guard"), std::string::npos);
  }
}

TEST(FlowConfig, Validation) {
  FlowConfig c;
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = FlowConfig{};
  c.dt = 2.0;
  EXPECT_THROW(c.validate(), Error);
  c = FlowConfig{};
  c.record_every = 0;
  EXPECT_THROW(c.validate(), Error);
  c = FlowConfig{};
  c.dt = 0.3;
  c.t_final = 1.0;
  const auto times = c.recorded_times();
  EXPECT_EQ(times.size(), 5u);
  EXPECT_DOUBLE_EQ(times.back(), 1.0);
  EXPECT_EQ(parse_scheme("rk4"), Scheme::GeodesicRk4);
  EXPECT_EQ(parse_scheme("geodesic-euler"), Scheme::GeodesicEuler);
  EXPECT_THROW(parse_scheme("leapfrog"), Error);
}

TEST(TwoBodyExact, Examples) {
  EXPECT_EQ(two_body_exact(quadratic_profile(), 0.7, 0.0), 0.7);
  EXPECT_NEAR(two_body_exact(quadratic_profile(), 1.0, 1.0), 0.36787944117144233, 1e-16);
  EXPECT_NEAR(two_body_exact(constant_profile(), 1.3, 2.0), 1.3, 1e-14);
  // d' = -d / sqrt(1 + d^2) has implicit solution sqrt(1+d^2) + log(d / (1 + sqrt(1+d^2))) = const - t.
  const auto F = [](double d) { return std::sqrt(1 + d * d) + std::log(d / (1 + std::sqrt(1 + d * d))); };
  const double d1 = two_body_exact(bounded_attractive_profile(), 1.0, 1.0);
  EXPECT_NEAR(F(1.0) - F(d1), 1.0, 1e-9);
}

TEST(Picard, NearestTimeIndex) {
  const std::vector<double> t = {0.0, 0.1, 0.2, 0.3};
  EXPECT_EQ(nearest_time_index(t, 0.0), 0u);
  EXPECT_EQ(nearest_time_index(t, 0.14), 1u);
  EXPECT_EQ(nearest_time_index(t, 0.16), 2u);
  EXPECT_EQ(nearest_time_index(t, 0.25), 2u);
  EXPECT_EQ(nearest_time_index(t, 9.0), 3u);
}

TEST(Picard, FixedPointAndSingleParticle) {
  const auto e = Manifold::euclidean(2);
  FlowConfig cfg;
  cfg.t_final = 0.5;
  cfg.scheme = Scheme::GeodesicEuler;
  const auto rho = two_body(e, 1.0);
  const auto sol = simulate(e, quadratic_profile(), rho, cfg);
  const auto again = picard_map(e, quadratic_profile(), rho, sol, cfg);
  EXPECT_LE(w1_sup(e, sol, again), 1e-14);

  const auto single = EmpiricalMeasure::dirac(e, e.home());
  const auto still = picard_map(e, quadratic_profile(), single, constant_trajectory(e, quadratic_profile(), single, cfg), cfg);
  for (const auto& mu : still.measures) EXPECT_EQ(mu.point(0).coords, e.home().coords);
  const auto res = picard_solve(e, quadratic_profile(), single, cfg, 1e-10, 10);
  EXPECT_EQ(res.distances.size(), 1u);
}

TEST(Picard, OneIterationContracts) {
  const auto e = Manifold::euclidean(2);
  const auto q = quadratic_profile();
  FlowConfig cfg;
  cfg.t_final = 0.5;
  cfg.dt = 1e-3;
  const auto rho = two_body(e, 1.0);
  const auto truth = simulate(e, q, rho, cfg);
  const auto c0 = constant_trajectory(e, q, rho, cfg);
  const auto c1 = picard_map(e, q, rho, c0, cfg);
  const double before = w1_sup(e, c0, truth), after = w1_sup(e, c1, truth);
  EXPECT_LT(after, before);
  EXPECT_LE(after / before, std::expm1(0.5) * (1 + 10 * cfg.dt));
}

TEST(Picard, SolveMatchesSimulateAndRatiosBounded) {
  const auto e = Manifold::euclidean(2);
  const auto q = quadratic_profile();
  FlowConfig cfg;
  cfg.t_final = 0.5;
  cfg.dt = 1e-3;
  cfg.scheme = Scheme::GeodesicEuler;
  const auto rho = two_body(e, 1.0);
  const double tol = 1e-8;
  const auto res = picard_solve(e, q, rho, cfg, tol, 200);
  EXPECT_NEAR(res.contraction_factor, std::expm1(0.5), 1e-12);
  for (std::size_t k = 1; k < res.distances.size(); ++k) {
    EXPECT_LE(res.distances[k] / res.distances[k - 1], std::expm1(0.5) * (1 + 10 * cfg.dt));
  }
  EXPECT_LE(w1_sup(e, res.solution, simulate(e, q, rho, cfg)), 10 * tol);
}

TEST(Picard, Errors) {
  const auto e = Manifold::euclidean(2);
  FlowConfig cfg;
  cfg.t_final = 1.0;
  try {
    picard_solve(e, quadratic_profile(), two_body(e, 1.0), cfg, 1e-8, 100);
    FAIL() << "expected NoContraction";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::NoContraction);
  }
  cfg.t_final = 0.5;
  try {
    picard_solve(e, quadratic_profile(), two_body(e, 1.0), cfg, 1e-14, 1);
    FAIL() << "expected MaxIterExceeded";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::MaxIterExceeded);
  }
  FlowConfig other = cfg;
  other.dt = 0.02;
  const auto rho = two_body(e, 1.0);
  const auto frozen = constant_trajectory(e, quadratic_profile(), rho, other);
  EXPECT_THROW(picard_map(e, quadratic_profile(), rho, frozen, cfg), Error);
}

TEST(Gronwall, FactorAndHorizon) {
  EXPECT_EQ(gronwall_factor(0.0, 0.7), 0.7);
  EXPECT_NEAR(gronwall_factor(1.0, 0.5), std::expm1(0.5), 1e-16);
  const double T = contraction_horizon(1.0, 1.0, 0.9);
  EXPECT_NEAR(gronwall_factor(1.0, T) * 1.0, 0.9, 1e-14);
}
