#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "manifold_agg/io.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/sampling.hpp"
#include "manifold_agg/trajectory.hpp"
#include "manifold_agg/transport.hpp"
#include "oracles.hpp"

using namespace manifold_agg;
using std::numbers::pi;

namespace {

std::vector<Manifold> all_manifolds() {
  return {Manifold::euclidean(2), Manifold::sphere(), Manifold::hyperbolic()};
}

double radius_for(const Manifold& m) { return m.kind() == ManifoldKind::Sphere ? pi / 4 : 1.5; }

std::vector<std::vector<double>> cost_table(const Manifold& m, const EmpiricalMeasure& a,
                                            const EmpiricalMeasure& b) {
  std::vector<std::vector<double>> c(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) c[i][j] = distance(m, a.point(i), b.point(j));
  }
  return c;
}

void expect_feasible(const CouplingPlan& plan, const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                     const Manifold& m) {
  std::vector<double> rows(a.size(), 0.0), cols(b.size(), 0.0);
  double cost = 0.0;
  for (const auto& e : plan.entries) {
    EXPECT_GT(e.mass, 0.0);
    rows[e.i] += e.mass;
    cols[e.j] += e.mass;
    cost += e.mass * distance(m, a.point(e.i), b.point(e.j));
  }
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(rows[i], a.weight(i), 1e-9);
  for (std::size_t j = 0; j < b.size(); ++j) EXPECT_NEAR(cols[j], b.weight(j), 1e-9);
  EXPECT_NEAR(cost, plan.cost, 1e-12);
}

}  // namespace

TEST(Measure, Invariants) {
  const auto e = Manifold::euclidean(1);
  const auto p = make_point(e, {0.0}), q = make_point(e, {1.0});
  EXPECT_NO_THROW(EmpiricalMeasure(e, {p, q}, {0.25, 0.75}));
  EXPECT_THROW(EmpiricalMeasure(e, {p, q}, {0.5, 0.6}), Error);
  EXPECT_THROW(EmpiricalMeasure(e, {p, q}, {1.0, 0.0}), Error);
  EXPECT_THROW(EmpiricalMeasure(e, {p}, {0.5, 0.5}), Error);
  EXPECT_THROW(EmpiricalMeasure(e, {}, {}), Error);
  const auto s = Manifold::sphere();
  EXPECT_THROW(EmpiricalMeasure::uniform(s, {ManifoldPoint{Coords::Constant(3, 1.0)}}), Error);
}

TEST(PushForward, Examples) {
  for (const auto& m : all_manifolds()) {
    const auto rho = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), radius_for(m), 10, 1));
    const auto same = push_forward(m, rho, [](const ManifoldPoint& x) { return x; });
    for (std::size_t i = 0; i < rho.size(); ++i) EXPECT_EQ(same.point(i).coords, rho.point(i).coords);
    const auto q = sample_in_ball(m, m.home(), 0.3, 1, 2).front();
    const auto collapsed = push_forward(m, rho, [&](const ManifoldPoint& x) { return exp_map(m, x, log_map(m, x, q)); });
    for (std::size_t i = 0; i < rho.size(); ++i) {
      EXPECT_LE(distance(m, collapsed.point(i), q), 1e-9);
      EXPECT_EQ(collapsed.weight(i), rho.weight(i));
    }
  }
}

TEST(PushForward, TestFunctionIdentity) {
  std::mt19937_64 rng(3);
  for (const auto& m : all_manifolds()) {
    for (int c = 0; c < 20; ++c) {
      std::uniform_real_distribution<double> u(0.5, 1.5);
      const auto pts = sample_in_ball(m, m.home(), radius_for(m), 7, 100 + c);
      std::vector<double> w(7);
      double tot = 0;
      for (auto& x : w) tot += (x = u(rng));
      for (auto& x : w) x /= tot;
      const EmpiricalMeasure rho(m, pts, w);
      const auto p = sample_in_ball(m, m.home(), 0.2, 1, 200 + c).front();
      const auto shift = random_tangent(m, m.home(), 0.3, rng);
      const auto psi = [&](const ManifoldPoint& x) { return exp_map(m, x, parallel_transport(m, m.home(), x, shift)); };
      const auto zeta = [&](const ManifoldPoint& x) { return distance(m, p, x); };
      const double lhs = integrate(push_forward(m, rho, psi), zeta);
      const double rhs = integrate(rho, [&](const ManifoldPoint& x) { return zeta(psi(x)); });
      EXPECT_NEAR(lhs, rhs, 1e-12);
    }
  }
}

TEST(W1, Examples) {
  for (const auto& m : all_manifolds()) {
    const auto rho = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), radius_for(m), 8, 4));
    const auto self = w1_distance(m, rho, rho);
    EXPECT_EQ(self.distance, 0.0);
    for (const auto& e : self.plan.entries) EXPECT_EQ(e.i, e.j);
    const auto x = rho.point(0), y = rho.point(1);
    EXPECT_NEAR(w1_distance(m, EmpiricalMeasure::dirac(m, x), EmpiricalMeasure::dirac(m, y)).distance,
                distance(m, x, y), 1e-15);
  }
  const auto e = Manifold::euclidean(1);
  const auto pt = [&](double v) { return make_point(e, {v}); };
  const auto rho = EmpiricalMeasure::uniform(e, {pt(0), pt(1)});
  const auto sigma = EmpiricalMeasure::uniform(e, {pt(0.2), pt(0.9)});
  EXPECT_NEAR(w1_distance(e, rho, sigma).distance, 0.15, 1e-15);
  EXPECT_NEAR(oracle::permutation_w1(cost_table(e, rho, sigma)), 0.15, 1e-15);
}

TEST(W1, AssignmentMatchesPermutationOracle) {
  for (const auto& m : all_manifolds()) {
    for (int c = 0; c < 40; ++c) {
      const std::size_t n = 1 + c % 7;
      const auto a = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), radius_for(m), n, 10 * c + 1));
      const auto b = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), radius_for(m), n, 10 * c + 2));
      const auto res = w1_distance(m, a, b);
      EXPECT_NEAR(res.distance, oracle::permutation_w1(cost_table(m, a, b)), 1e-12);
      EXPECT_NEAR(res.distance, w1_permutation_oracle(m, a, b), 1e-12);
      expect_feasible(res.plan, a, b, m);
    }
  }
}

TEST(W1, GeneralWeightsMatchReplication) {
  // Weights are multiples of 1/6 so each measure is 6 equal-mass atoms in disguise.
  const std::vector<std::vector<int>> splits = {{1, 2, 3}, {2, 4}, {1, 1, 4}, {3, 3}, {1, 5}, {2, 2, 1, 1}};
  for (const auto& m : all_manifolds()) {
    for (int c = 0; c < 30; ++c) {
      const auto& sa = splits[c % splits.size()];
      const auto& sb = splits[(c / 2 + 1) % splits.size()];
      const auto weights = [](const std::vector<int>& s) {
        std::vector<double> w;
        for (int k : s) w.push_back(k / 6.0);
        return w;
      };
      const EmpiricalMeasure a(m, sample_in_ball(m, m.home(), radius_for(m), sa.size(), 500 + c), weights(sa));
      const EmpiricalMeasure b(m, sample_in_ball(m, m.home(), radius_for(m), sb.size(), 600 + c), weights(sb));
      const auto res = w1_distance(m, a, b);
      EXPECT_NEAR(res.distance, oracle::replicated_w1(cost_table(m, a, b), sa, sb), 1e-12);
      expect_feasible(res.plan, a, b, m);
    }
  }
}

TEST(W1, DegenerateAndUnbalancedSizes) {
  const auto e = Manifold::euclidean(2);
  const auto p = make_point(e, {0, 0}), q = make_point(e, {1, 0});
  // Coincident atoms and a zero-cost edge.
  const EmpiricalMeasure a(e, {p, p, q}, {0.25, 0.25, 0.5});
  const EmpiricalMeasure b(e, {p, q}, {0.5, 0.5});
  EXPECT_NEAR(w1_distance(e, a, b).distance, 0.0, 1e-15);
  const auto c = EmpiricalMeasure::uniform(e, {p});
  EXPECT_NEAR(w1_distance(e, b, c).distance, 0.5, 1e-15);
}

TEST(W1, MetricAxioms) {
  std::mt19937_64 rng(17);
  for (const auto& m : all_manifolds()) {
    for (int c = 0; c < 50; ++c) {
      const auto make = [&](std::size_t n, std::uint64_t seed) {
        std::uniform_real_distribution<double> u(0.2, 1.0);
        std::vector<double> w(n);
        double t = 0;
        for (auto& x : w) t += (x = u(rng));
        for (auto& x : w) x /= t;
        return EmpiricalMeasure(m, sample_in_ball(m, m.home(), radius_for(m), n, seed), w);
      };
      const auto a = make(4, 3 * c), b = make(5, 3 * c + 1), d = make(3, 3 * c + 2);
      const double ab = w1_distance(m, a, b).distance, ba = w1_distance(m, b, a).distance;
      const double ad = w1_distance(m, a, d).distance, db = w1_distance(m, d, b).distance;
      EXPECT_NEAR(ab, ba, 1e-9);
      EXPECT_LE(ab, ad + db + 1e-9);
      EXPECT_GE(ab, 0.0);
      EXPECT_EQ(w1_distance(m, a, a).distance, 0.0);
    }
  }
}

TEST(W1, PushForwardLipschitz) {
  // W1(Psi1 # rho, Psi2 # rho) <= sup_x d(Psi1 x, Psi2 x).
  std::mt19937_64 rng(23);
  for (const auto& m : all_manifolds()) {
    for (int c = 0; c < 50; ++c) {
      const auto rho = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), radius_for(m) / 2, 6, 900 + c));
      const auto s1 = random_tangent(m, m.home(), 0.4, rng), s2 = random_tangent(m, m.home(), 0.4, rng);
      const auto psi = [&](const TangentVector& s) {
        return [&m, s](const ManifoldPoint& x) { return exp_map(m, x, parallel_transport(m, s.base, x, s)); };
      };
      const auto a = push_forward(m, rho, psi(s1)), b = push_forward(m, rho, psi(s2));
      double sup = 0.0;
      for (std::size_t i = 0; i < rho.size(); ++i) sup = std::max(sup, distance(m, a.point(i), b.point(i)));
      EXPECT_LE(w1_distance(m, a, b).distance, sup + 1e-12);
    }
  }
}

TEST(W1, ParallelCostsAreDeterministic) {
  const auto m = Manifold::sphere();
  const auto a = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), 1.0, 40, 1));
  const auto b = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), 1.0, 40, 2));
  EXPECT_EQ(w1_distance(m, a, b, 1).distance, w1_distance(m, a, b, 4).distance);
}

TEST(SupportRadius, Examples) {
  const auto e = Manifold::euclidean(2);
  const auto p = make_point(e, {1, 1});
  EXPECT_EQ(support_radius(e, EmpiricalMeasure::dirac(e, p), p), 0.0);
  const auto x = make_point(e, {4, 5}), y = make_point(e, {1, 3});
  EXPECT_DOUBLE_EQ(support_radius(e, EmpiricalMeasure::uniform(e, {x, y}), p), 5.0);
  for (const auto& m : all_manifolds()) {
    const auto rho = EmpiricalMeasure::uniform(m, sample_in_ball(m, m.home(), 0.6, 100, 5));
    EXPECT_LT(support_radius(m, rho, m.home()), 0.6);
  }
}

TEST(W1Sup, Examples) {
  const auto e = Manifold::euclidean(1);
  const auto make = [&](std::vector<std::pair<double, double>> pos) {
    TrajectoryRecord r;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      r.times.push_back(0.5 * static_cast<double>(k));
      r.measures.push_back(EmpiricalMeasure::uniform(e, {make_point(e, {pos[k].first}), make_point(e, {pos[k].second})}));
    }
    return r;
  };
  const auto a = make({{0, 1}, {0, 1}, {0, 1}});
  EXPECT_EQ(w1_sup(e, a, a), 0.0);
  const auto b = make({{0, 1}, {0.4, 1}, {0, 1}});
  EXPECT_NEAR(w1_sup(e, a, b), 0.2, 1e-15);
  // Linear drift of one particle: largest at the final time.
  const auto c = make({{0, 1}, {0.1, 1}, {0.2, 1}});
  const auto series = w1_series(e, a, c);
  EXPECT_NEAR(series.back(), 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(w1_sup(e, a, c), series.back());
  const auto short_traj = make({{0, 1}, {0, 1}});
  try {
    w1_sup(e, a, short_traj);
    FAIL() << "expected GridMismatch";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::GridMismatch);
  }
}

TEST(Io, MeasureRoundTripIsLossless) {
  const auto m = Manifold::hyperbolic();
  std::mt19937_64 rng(1);
  const auto pts = sample_in_ball(m, m.home(), 1.0, 5, 3);
  const EmpiricalMeasure rho(m, pts, {0.1, 0.2, 0.3, 0.15, 0.25});
  const auto back = io::measure_from_json(m, nlohmann::json::parse(io::to_json(rho).dump()));
  for (std::size_t i = 0; i < rho.size(); ++i) {
    EXPECT_EQ(back.point(i).coords, rho.point(i).coords);
    EXPECT_EQ(back.weight(i), rho.weight(i));
  }
  const auto uniform = io::measure_from_json(m, {{"points", io::to_json(rho)["points"]}});
  EXPECT_TRUE(uniform.has_uniform_weights());
}

TEST(Io, CouplingCsv) {
  const auto e = Manifold::euclidean(1);
  const auto rho = EmpiricalMeasure::uniform(e, {make_point(e, {0}), make_point(e, {1})});
  const auto sigma = EmpiricalMeasure::uniform(e, {make_point(e, {0.2}), make_point(e, {0.9})});
  std::ostringstream out;
  io::write_coupling_csv(e, rho, sigma, w1_distance(e, rho, sigma).plan, out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("i,j,mass,distance\n", 0), 0u);
  EXPECT_NE(s.find("0,0,0.5,0.20000000000000001"), std::string::npos);
  EXPECT_NE(s.find("1,1,0.5,"), std::string::npos);
}
