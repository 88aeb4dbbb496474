#pragma once

// File formats:
//   measure     {"points": [[...], ...], "weights": [...]}
//   coupling    CSV rows i,j,mass,distance
//   trajectory  JSONL, one {t, points, weights, diagnostics} per recorded time,
//               and CSV rows t,particle_id,coords...,speed
// Reals are written with 17 significant digits.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "manifold_agg/errors.hpp"
#include "manifold_agg/geometry.hpp"
#include "manifold_agg/measures.hpp"
#include "manifold_agg/trajectory.hpp"
#include "manifold_agg/transport.hpp"

namespace manifold_agg::io {

using nlohmann::json;

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const Coords& c) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < c.size(); ++i) arr.push_back(c[i]);
  return arr;
}

inline Coords coords_from_json(const json& j) {
  if (!j.is_array() || j.empty() || j.size() > kMaxAmbientDim) {
    fail(ErrorKind::ConfigError, "a point must be a non-empty array of at most " +
                                     std::to_string(kMaxAmbientDim) + " numbers");
  }
  Coords c(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::ConfigError, "point coordinates must be numbers");
    c[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return c;
}

inline json to_json(const EmpiricalMeasure& rho) {
  json pts = json::array();
  for (const auto& p : rho.points()) pts.push_back(to_json(p.coords));
  return {{"points", pts}, {"weights", rho.weights()}};
}

/// Parses a measure; missing weights mean uniform weights.
inline EmpiricalMeasure measure_from_json(const Manifold& m, const json& j) {
  if (!j.is_object() || !j.contains("points")) fail(ErrorKind::ConfigError, "measure needs \"points\"");
  std::vector<ManifoldPoint> pts;
  for (const auto& p : j.at("points")) pts.push_back({coords_from_json(p)});
  if (!j.contains("weights")) return EmpiricalMeasure::uniform(m, std::move(pts));
  std::vector<double> w = j.at("weights").get<std::vector<double>>();
  return EmpiricalMeasure(m, std::move(pts), std::move(w));
}

inline EmpiricalMeasure read_measure(const Manifold& m, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigError, path + ": " + e.what());
  }
  return measure_from_json(m, j);
}

inline void write_measure(const EmpiricalMeasure& rho, const std::string& path) {
  std::ofstream out(path);
  out << to_json(rho).dump(2) << '\n';
}

inline void write_coupling_csv(const Manifold& m, const EmpiricalMeasure& rho,
                               const EmpiricalMeasure& sigma, const CouplingPlan& plan,
                               std::ostream& out) {
  out << "i,j,mass,distance\n";
  for (const auto& e : plan.entries) {
    out << e.i << ',' << e.j << ',' << fmt(e.mass) << ','
        << fmt(distance(m, rho.point(e.i), sigma.point(e.j))) << '\n';
  }
}

inline json to_json(const Diagnostics& d) {
  return {{"support_radius", d.support_radius},
          {"max_pairwise_distance", d.max_pairwise_distance},
          {"velocity_sup_norm", d.velocity_sup_norm}};
}

inline void write_trajectory_jsonl(const TrajectoryRecord& rec, std::ostream& out) {
  for (std::size_t k = 0; k < rec.size(); ++k) {
    json line = to_json(rec.measures[k]);
    line["t"] = rec.times[k];
    line["diagnostics"] = to_json(rec.diagnostics[k]);
    out << line.dump() << '\n';
  }
}

inline void write_trajectory_csv(const TrajectoryRecord& rec, std::ostream& out) {
  if (rec.size() == 0) return;
  const Eigen::Index dim = rec.measures.front().point(0).coords.size();
  out << "t,particle_id";
  for (Eigen::Index c = 0; c < dim; ++c) out << ",x" << c;
  out << ",speed\n";
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const auto& mu = rec.measures[k];
    for (std::size_t i = 0; i < mu.size(); ++i) {
      out << fmt(rec.times[k]) << ',' << i;
      for (Eigen::Index c = 0; c < dim; ++c) out << ',' << fmt(mu.point(i).coords[c]);
      out << ',' << fmt(rec.speeds[k][i]) << '\n';
    }
  }
}

/// Reads back a JSONL trajectory (weights and points only).
inline std::vector<std::pair<double, EmpiricalMeasure>> read_trajectory_jsonl(const Manifold& m,
                                                                              std::istream& in) {
  std::vector<std::pair<double, EmpiricalMeasure>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    out.emplace_back(j.at("t").get<double>(), measure_from_json(m, j));
  }
  return out;
}

}  // namespace manifold_agg::io
