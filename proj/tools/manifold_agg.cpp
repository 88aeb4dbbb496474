// manifold_agg: simulate, verify, w1, constants.
//
// Exit codes: 0 success, 1 failed check, 2 configuration error,
// 3 guard violation, 4 any other library error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "manifold_agg/config.hpp"
#include "manifold_agg/dynamics.hpp"
#include "manifold_agg/io.hpp"
#include "manifold_agg/runner.hpp"
#include "manifold_agg/transport.hpp"

namespace fs = std::filesystem;
using namespace manifold_agg;
using nlohmann::json;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;
constexpr int kExitOther = 4;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output;
};

int resolve_threads(const CommonOptions& o, int fallback) {
  if (o.threads) return *o.threads;
  if (const char* env = std::getenv("MANIFOLD_AGG_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    fail(ErrorKind::ConfigError, std::string("MANIFOLD_AGG_THREADS must be a positive integer, got '") + env + "'");
  }
  return fallback;
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? parse_config("") : load_config(o.config);
  if (o.seed) {
    cfg.initial.seed = *o.seed;
    cfg.checks.seed = *o.seed;
  }
  cfg.flow.threads = resolve_threads(o, cfg.flow.threads);
  if (!o.output.empty()) cfg.output_dir = o.output;
  cfg.flow.validate();
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::ConfigError, "cannot create output directory " + dir + ": " + ec.message());
}

int cmd_simulate(const CommonOptions& o) {
  const RunConfig cfg = resolve_config(o);
  const Manifold m = config_manifold(cfg);
  const PotentialProfile profile = config_profile(cfg);
  const EmpiricalMeasure rho0 = build_initial_measure(m, cfg.initial);
  ensure_dir(cfg.output_dir);

  const auto start = std::chrono::steady_clock::now();
  const TrajectoryRecord traj = simulate(m, profile, rho0, cfg.flow);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const fs::path dir(cfg.output_dir);
  {
    std::ofstream out(dir / "trajectory.jsonl");
    io::write_trajectory_jsonl(traj, out);
  }
  {
    std::ofstream out(dir / "trajectory.csv");
    io::write_trajectory_csv(traj, out);
  }
  const auto& last = traj.diagnostics.back();
  json summary = {{"manifold", m.name()},
                  {"potential", profile.name},
                  {"particles", rho0.size()},
                  {"steps", cfg.flow.steps()},
                  {"recorded_times", traj.size()},
                  {"final_time", traj.times.back()},
                  {"final_support_radius", last.support_radius},
                  {"final_max_pairwise_distance", last.max_pairwise_distance},
                  {"final_velocity_sup_norm", last.velocity_sup_norm},
                  {"wall_time_seconds", wall},
                  {"config", to_json(cfg)}};
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  std::cout << "simulated " << rho0.size() << " particles on " << m.name() << " to t = " << traj.times.back()
            << "\nfinal support radius " << io::fmt(last.support_radius) << "\nfinal max pairwise distance "
            << io::fmt(last.max_pairwise_distance) << "\nwrote " << cfg.output_dir << '\n';
  return 0;
}

int cmd_verify(const CommonOptions& o, const std::vector<std::string>& override_specs) {
  const RunConfig cfg = resolve_config(o);
  ConstantOverrides overrides;
  for (const auto& spec : override_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) fail(ErrorKind::ConfigError, "--override-constant expects NAME=VALUE");
    double value = 0.0;
    try {
      value = std::stod(spec.substr(eq + 1));
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, "bad value in --override-constant " + spec);
    }
    overrides.set(spec.substr(0, eq), value);
  }
  ensure_dir(cfg.output_dir);
  const auto reports = run_checks(cfg, overrides);
  bool all = true;
  for (const auto& r : reports) {
    std::ofstream(fs::path(cfg.output_dir) / (r.check_name + ".json")) << to_json(r).dump(2) << '\n';
    std::cout << summary_line(r) << '\n';
    all = all && r.passed;
  }
  std::cout << (all ? "all checks passed" : "some checks FAILED") << '\n';
  return all ? 0 : kExitCheckFailed;
}

int cmd_w1(const CommonOptions& o, const std::string& a, const std::string& b, const std::string& manifold,
           bool oracle, const std::string& coupling) {
  const Manifold m = parse_manifold_spec(manifold);
  const EmpiricalMeasure rho = io::read_measure(m, a);
  const EmpiricalMeasure sigma = io::read_measure(m, b);
  const W1Result res = w1_distance(m, rho, sigma, resolve_threads(o, 1));
  std::cout << "w1 " << io::fmt(res.distance) << '\n';
  if (oracle) std::cout << "oracle " << io::fmt(w1_permutation_oracle(m, rho, sigma)) << '\n';
  if (!coupling.empty()) {
    std::ofstream out(coupling);
    if (!out) fail(ErrorKind::ConfigError, "cannot write " + coupling);
    io::write_coupling_csv(m, rho, sigma, res.plan, out);
  }
  return 0;
}

int cmd_constants(const std::string& manifold, const std::string& potential, double delta, double epsilon,
                  std::size_t grid, bool grid_only) {
  const Manifold m = parse_manifold_spec(manifold);
  const PotentialProfile profile = parse_potential_spec(potential);
  const PotentialConstants k =
      profile_constants(profile, delta, m.curvature_lower(), m.curvature_upper(), epsilon, grid, !grid_only);
  const auto row = [](const char* name, double v) {
    std::cout << std::left << std::setw(10) << name << io::fmt(v) << '\n';
  };
  std::cout << "manifold  " << m.name() << "\npotential " << profile.name << '\n';
  row("lambda_K", m.curvature_lower());
  row("mu_K", m.curvature_upper());
  row("delta", k.delta);
  row("epsilon", k.epsilon);
  row("c_gprime", k.c_gprime);
  row("l_gprime", k.l_gprime);
  row("L", k.L);
  row("ell", k.ell);
  row("lbar", k.lbar);
  row("Lambda", k.lambda);
  std::cout << std::left << std::setw(10) << "source"
            << (k.closed_form ? "closed form" : "grid of " + std::to_string(k.grid_size) + " points") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle simulation and certification of aggregation flows on manifolds"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");

  CommonOptions common;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Seed for sampled initial data and checks");
    sub->add_option("--threads", common.threads, "Worker threads (fallback: MANIFOLD_AGG_THREADS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--output", common.output, "Output directory");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the particle flow and export the trajectory");
  add_common(simulate_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "Run the configured checks, one JSON report each");
  add_common(verify_cmd);
  std::vector<std::string> overrides;
  verify_cmd->add_option("--override-constant", overrides, "Replace a constant, NAME=VALUE (repeatable)");

  auto* w1_cmd = app.add_subcommand("w1", "Exact W1 distance between two measure files");
  std::string file_a, file_b, w1_manifold = "euclidean:2", coupling;
  bool oracle = false;
  w1_cmd->add_option("file_a", file_a, "First measure (JSON)")->required()->check(CLI::ExistingFile);
  w1_cmd->add_option("file_b", file_b, "Second measure (JSON)")->required()->check(CLI::ExistingFile);
  w1_cmd->add_option("--manifold", w1_manifold, "euclidean[:n] | sphere | hyperbolic");
  w1_cmd->add_flag("--oracle", oracle, "Also print the brute-force permutation value (N <= 9)");
  w1_cmd->add_option("--coupling", coupling, "Write the optimal coupling as CSV");
  w1_cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* constants_cmd = app.add_subcommand("constants", "Print the analytic constants for a diameter");
  std::string c_manifold = "euclidean:2", c_potential = "quadratic";
  double delta = 1.0, epsilon = std::numbers::pi / 2;
  std::size_t grid = 10000;
  bool grid_only = false;
  constants_cmd->add_option("--manifold", c_manifold, "euclidean[:n] | sphere | hyperbolic");
  constants_cmd->add_option("--potential", c_potential, "quadratic | power:p | bounded-attractive | constant[:c]");
  constants_cmd->add_option("--delta", delta, "Diameter of the working set");
  constants_cmd->add_option("--epsilon", epsilon, "Cut-off in (0, pi) for the sphere log constant");
  constants_cmd->add_option("--grid", grid, "Grid size for estimated constants");
  constants_cmd->add_flag("--grid-only", grid_only, "Ignore closed forms and estimate on the grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (print_defaults) {
      std::cout << default_config_text();
      return 0;
    }
    if (*simulate_cmd) return cmd_simulate(common);
    if (*verify_cmd) return cmd_verify(common, overrides);
    if (*w1_cmd) return cmd_w1(common, file_a, file_b, w1_manifold, oracle, coupling);
    if (*constants_cmd) return cmd_constants(c_manifold, c_potential, delta, epsilon, grid, grid_only);
    std::cout << app.help();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.kind() == ErrorKind::ConfigError) return kExitConfig;
    if (e.is_guard_violation()) return kExitGuard;
    return kExitOther;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
