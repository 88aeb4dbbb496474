#pragma once

// Run configuration in a small TOML subset:
//
//   # comment
//   [section]
//   key = value
//
// Values are JSON literals (numbers, "strings", true/false, [arrays]); bare
// words are read as strings. Arrays may span lines.

#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
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

namespace manifold_agg {

using nlohmann::json;

struct InitialSpec {
  std::string mode = "ball";  // "ball" or "explicit"
  std::vector<Coords> points;
  std::vector<double> weights;
  std::vector<double> center;  // empty: the manifold's home point
  double radius = 0.5;
  std::size_t count = 50;
  std::uint64_t seed = 1;
  RadialMode radial = RadialMode::Volume;
};

struct ChecksSpec {
  std::vector<std::string> names;
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  /// Diameter for the pointwise geometric checks; unset means a per-manifold default.
  std::optional<double> delta;
  double epsilon = std::numbers::pi / 2;
  double stability_t_final = 2.0;
  double perturbation = 0.05;
  double support_t_final = 5.0;
  /// Unset: min(0.5, horizon where C(T) Lambda = 0.9).
  std::optional<double> contraction_t_final;
  double contraction_tol = 1e-8;
  std::size_t contraction_max_iter = 200;
  std::size_t field_pairs = 3;
  double kglob_grid_max = 10.0;
  std::size_t kglob_grid_size = 2000;
};

struct RunConfig {
  std::string manifold = "euclidean";
  int dim = 2;
  std::string potential = "quadratic";
  std::vector<double> potential_params;
  InitialSpec initial;
  FlowConfig flow;
  std::string output_dir = "out";
  ChecksSpec checks;
};

inline const std::vector<std::string>& all_check_names() {
  static const std::vector<std::string> names = {
      "transport_identities", "hessian_bounds",  "log_lipschitz_second_arg",
      "gronwall_flow_bound",  "stability",       "contraction",
      "support_containment",  "field_lipschitz", "measure_lipschitz",
      "kglob"};
  return names;
}

inline std::vector<std::string> default_check_names() {
  auto names = all_check_names();
  names.pop_back();  // kglob needs a profile-specific global constant
  return names;
}

/// "euclidean:3", "euclidean" (dim 2), "sphere", "hyperbolic".
inline Manifold make_manifold(const std::string& name, int dim = 2) {
  if (name == "euclidean") return Manifold::euclidean(dim);
  if (name == "sphere") return Manifold::sphere();
  if (name == "hyperbolic") return Manifold::hyperbolic();
  fail(ErrorKind::ConfigError, "unknown manifold '" + name + "'");
}

namespace detail {

inline std::pair<std::string, std::vector<double>> split_spec(const std::string& spec) {
  std::vector<double> params;
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream rest(spec.substr(colon + 1));
    std::string item;
    while (std::getline(rest, item, ',')) {
      try {
        std::size_t used = 0;
        params.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        fail(ErrorKind::ConfigError, "bad parameter '" + item + "' in '" + spec + "'");
      }
    }
  }
  return {name, params};
}

}  // namespace detail

inline Manifold parse_manifold_spec(const std::string& spec) {
  const auto [name, params] = detail::split_spec(spec);
  if (name == "euclidean") {
    if (params.size() > 1) fail(ErrorKind::ConfigError, "euclidean takes one dimension");
    return Manifold::euclidean(params.empty() ? 2 : static_cast<int>(params[0]));
  }
  if (!params.empty()) fail(ErrorKind::ConfigError, "'" + name + "' takes no parameters");
  return make_manifold(name);
}

/// "quadratic", "power:4", "bounded-attractive", "constant:1".
inline PotentialProfile parse_potential_spec(const std::string& spec) {
  const auto [name, params] = detail::split_spec(spec);
  return make_profile(name, params);
}

inline std::string default_config_text() {
  return R"(# manifold_agg run configuration; every key is shown with its default.

[manifold]
name = "euclidean"        # euclidean | sphere | hyperbolic
dim = 2                   # euclidean only

[potential]
name = "quadratic"        # quadratic | power | bounded-attractive | constant
params = []               # power: [p] with p = 2 or p >= 4; constant: [value]

[initial]
mode = "ball"             # ball | explicit
center = []               # empty: (0,..,0), north pole, or hyperboloid vertex
radius = 0.5
count = 50
seed = 1
radial = "volume"         # volume | uniform
points = []               # explicit mode: list of ambient coordinates
weights = []              # explicit mode: empty means uniform

[flow]
dt = 0.01
t_final = 1.0
scheme = "geodesic-rk4"   # geodesic-euler | geodesic-rk4
record_every = 1
diameter_margin = 0.1     # guard margin, fraction of the initial diameter
reference_index = 0       # particle used as the support-radius center
threads = 1

[output]
dir = "out"

[checks]
names = ["transport_identities", "hessian_bounds", "log_lipschitz_second_arg", "gronwall_flow_bound", "stability", "contraction", "support_containment", "field_lipschitz", "measure_lipschitz"]
samples = 500
seed = 1
delta = "auto"            # diameter for pointwise checks
epsilon = 1.5707963267948966
stability_t_final = 2.0
perturbation = 0.05
support_t_final = 5.0
contraction_t_final = "auto"
contraction_tol = 1e-8
contraction_max_iter = 200
field_pairs = 3
kglob_grid_max = 10.0
kglob_grid_size = 2000
)";
}

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline int bracket_depth(const std::string& s) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (in_string) continue;
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
  }
  return depth;
}

inline json parse_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty()) fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": missing value");
  try {
    return json::parse(v);
  } catch (const json::exception&) {
    if (v.find_first_of("[]{}\"") != std::string::npos) {
      fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
    }
    return json(v);
  }
}

}  // namespace detail

/// Parses the TOML subset into {section: {key: value}}.
inline json parse_config_tree(const std::string& text) {
  json tree = json::object();
  std::string section;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = detail::trim(detail::strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[' && s.find('=') == std::string::npos) {
      if (s.back() != ']') fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": bad section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (!tree.contains(section)) tree[section] = json::object();
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) fail(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": key outside a section");
    const std::string key = detail::trim(s.substr(0, eq));
    std::string value = s.substr(eq + 1);
    const int start_line = line_no;
    while (detail::bracket_depth(value) > 0 && std::getline(in, line)) {
      ++line_no;
      value += " " + detail::strip_comment(line);
    }
    tree[section][key] = detail::parse_value(value, start_line);
  }
  return tree;
}

namespace detail {

template <class T>
T get_as(const json& sec, const std::string& section, const std::string& key) {
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::ConfigError, "[" + section + "] " + key + ": wrong type");
  }
}

template <class T>
void read_key(const json& tree, const std::string& section, const std::string& key, T& out) {
  if (tree.contains(section) && tree[section].contains(key)) out = get_as<T>(tree[section], section, key);
}

inline void read_optional(const json& tree, const std::string& section, const std::string& key,
                          std::optional<double>& out) {
  if (!(tree.contains(section) && tree[section].contains(key))) return;
  const json& v = tree[section][key];
  if (v.is_string() && v.get<std::string>() == "auto") {
    out.reset();
  } else if (v.is_number()) {
    out = v.get<double>();
  } else {
    fail(ErrorKind::ConfigError, "[" + section + "] " + key + ": expected a number or \"auto\"");
  }
}

inline void reject_unknown(const json& tree) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"manifold", {"name", "dim"}},
      {"potential", {"name", "params"}},
      {"initial", {"mode", "center", "radius", "count", "seed", "radial", "points", "weights"}},
      {"flow", {"dt", "t_final", "scheme", "record_every", "diameter_margin", "reference_index", "threads"}},
      {"output", {"dir"}},
      {"checks", {"names", "samples", "seed", "delta", "epsilon", "stability_t_final", "perturbation",
                  "support_t_final", "contraction_t_final", "contraction_tol", "contraction_max_iter",
                  "field_pairs", "kglob_grid_max", "kglob_grid_size"}}};
  for (const auto& [section, keys] : tree.items()) {
    const auto it = known.find(section);
    if (it == known.end()) fail(ErrorKind::ConfigError, "unknown section [" + section + "]");
    for (const auto& [key, v] : keys.items()) {
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        fail(ErrorKind::ConfigError, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  const json tree = parse_config_tree(text);
  detail::reject_unknown(tree);
  RunConfig c;
  c.checks.names = default_check_names();
  using detail::read_key;
  read_key(tree, "manifold", "name", c.manifold);
  read_key(tree, "manifold", "dim", c.dim);
  read_key(tree, "potential", "name", c.potential);
  read_key(tree, "potential", "params", c.potential_params);

  auto& in = c.initial;
  read_key(tree, "initial", "mode", in.mode);
  read_key(tree, "initial", "center", in.center);
  read_key(tree, "initial", "radius", in.radius);
  read_key(tree, "initial", "count", in.count);
  read_key(tree, "initial", "seed", in.seed);
  std::string radial = "volume";
  read_key(tree, "initial", "radial", radial);
  if (radial == "volume") {
    in.radial = RadialMode::Volume;
  } else if (radial == "uniform") {
    in.radial = RadialMode::Uniform;
  } else {
    fail(ErrorKind::ConfigError, "[initial] radial must be volume or uniform");
  }
  if (tree.contains("initial") && tree["initial"].contains("points")) {
    for (const auto& p : tree["initial"]["points"]) in.points.push_back(io::coords_from_json(p));
  }
  read_key(tree, "initial", "weights", in.weights);
  if (in.mode != "ball" && in.mode != "explicit") {
    fail(ErrorKind::ConfigError, "[initial] mode must be ball or explicit");
  }

  auto& f = c.flow;
  read_key(tree, "flow", "dt", f.dt);
  read_key(tree, "flow", "t_final", f.t_final);
  std::string scheme = to_string(f.scheme);
  read_key(tree, "flow", "scheme", scheme);
  f.scheme = parse_scheme(scheme);
  read_key(tree, "flow", "record_every", f.record_every);
  read_key(tree, "flow", "diameter_margin", f.diameter_margin);
  read_key(tree, "flow", "reference_index", f.reference_index);
  read_key(tree, "flow", "threads", f.threads);
  f.validate();

  read_key(tree, "output", "dir", c.output_dir);

  auto& k = c.checks;
  read_key(tree, "checks", "names", k.names);
  for (const auto& n : k.names) {
    if (std::find(all_check_names().begin(), all_check_names().end(), n) == all_check_names().end()) {
      fail(ErrorKind::ConfigError, "unknown check '" + n + "'");
    }
  }
  read_key(tree, "checks", "samples", k.samples);
  read_key(tree, "checks", "seed", k.seed);
  detail::read_optional(tree, "checks", "delta", k.delta);
  read_key(tree, "checks", "epsilon", k.epsilon);
  read_key(tree, "checks", "stability_t_final", k.stability_t_final);
  read_key(tree, "checks", "perturbation", k.perturbation);
  read_key(tree, "checks", "support_t_final", k.support_t_final);
  detail::read_optional(tree, "checks", "contraction_t_final", k.contraction_t_final);
  read_key(tree, "checks", "contraction_tol", k.contraction_tol);
  read_key(tree, "checks", "contraction_max_iter", k.contraction_max_iter);
  read_key(tree, "checks", "field_pairs", k.field_pairs);
  read_key(tree, "checks", "kglob_grid_max", k.kglob_grid_max);
  read_key(tree, "checks", "kglob_grid_size", k.kglob_grid_size);

  // Resolve references now so errors surface as configuration errors.
  make_manifold(c.manifold, c.dim);
  make_profile(c.potential, c.potential_params);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline Manifold config_manifold(const RunConfig& c) { return make_manifold(c.manifold, c.dim); }

inline PotentialProfile config_profile(const RunConfig& c) {
  return make_profile(c.potential, c.potential_params);
}

inline EmpiricalMeasure build_initial_measure(const Manifold& m, const InitialSpec& in) {
  try {
    if (in.mode == "explicit") {
      std::vector<ManifoldPoint> pts;
      for (const auto& p : in.points) pts.push_back(make_point(m, p));
      if (in.weights.empty()) return EmpiricalMeasure::uniform(m, std::move(pts));
      return EmpiricalMeasure(m, std::move(pts), in.weights);
    }
    ManifoldPoint center = m.home();
    if (!in.center.empty()) {
      Coords c(static_cast<Eigen::Index>(in.center.size()));
      for (std::size_t i = 0; i < in.center.size(); ++i) c[static_cast<Eigen::Index>(i)] = in.center[i];
      center = make_point(m, c);
    }
    return EmpiricalMeasure::uniform(m, sample_in_ball(m, center, in.radius, in.count, in.seed, in.radial));
  } catch (const Error& e) {
    // Everything wrong with the initial data is a configuration problem.
    fail(ErrorKind::ConfigError, std::string("[initial] ") + e.what());
  }
}

inline json to_json(const RunConfig& c) {
  json initial = {{"mode", c.initial.mode},
                  {"center", c.initial.center},
                  {"radius", c.initial.radius},
                  {"count", c.initial.count},
                  {"seed", c.initial.seed},
                  {"radial", to_string(c.initial.radial)},
                  {"weights", c.initial.weights}};
  initial["points"] = json::array();
  for (const auto& p : c.initial.points) initial["points"].push_back(io::to_json(p));
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json("auto"); };
  return {
      {"manifold", {{"name", c.manifold}, {"dim", c.dim}}},
      {"potential", {{"name", c.potential}, {"params", c.potential_params}}},
      {"initial", initial},
      {"flow",
       {{"dt", c.flow.dt},
        {"t_final", c.flow.t_final},
        {"scheme", to_string(c.flow.scheme)},
        {"record_every", c.flow.record_every},
        {"diameter_margin", c.flow.diameter_margin},
        {"reference_index", c.flow.reference_index},
        {"threads", c.flow.threads}}},
      {"output", {{"dir", c.output_dir}}},
      {"checks",
       {{"names", c.checks.names},
        {"samples", c.checks.samples},
        {"seed", c.checks.seed},
        {"delta", opt(c.checks.delta)},
        {"epsilon", c.checks.epsilon},
        {"stability_t_final", c.checks.stability_t_final},
        {"perturbation", c.checks.perturbation},
        {"support_t_final", c.checks.support_t_final},
        {"contraction_t_final", opt(c.checks.contraction_t_final)},
        {"contraction_tol", c.checks.contraction_tol},
        {"contraction_max_iter", c.checks.contraction_max_iter},
        {"field_pairs", c.checks.field_pairs},
        {"kglob_grid_max", c.checks.kglob_grid_max},
        {"kglob_grid_size", c.checks.kglob_grid_size}}}};
}

}  // namespace manifold_agg
