#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slipgrasp/core.hpp"
#include "slipgrasp/geometry.hpp"
#include "slipgrasp/physics.hpp"

namespace slipgrasp::harness {

using Json = nlohmann::json;

// Raised while decoding a record; the caller prefixes file and line.
inline void schema_check(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::schema, what);
}

inline const Json& field(const Json& j, const char* key) {
  schema_check(j.is_object(), "expected an object");
  const auto it = j.find(key);
  schema_check(it != j.end(), std::string("missing field '") + key + "'");
  return *it;
}

inline double num(const Json& j, const char* key) {
  const Json& v = field(j, key);
  schema_check(v.is_number(), std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline std::string str(const Json& j, const char* key) {
  const Json& v = field(j, key);
  schema_check(v.is_string(), std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline Json to_json(const Vec2& v) { return Json::array({v.x(), v.y()}); }

inline Vec2 vec2_from(const Json& j) {
  schema_check(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from(const Json& j, Eigen::Index expected_cols = -1) {
  schema_check(j.is_array(), "matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = expected_cols;
  if (cols < 0) cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    schema_check(row.is_array() && static_cast<Eigen::Index>(row.size()) == cols,
                 "row " + std::to_string(r) + " must have " + std::to_string(cols) + " entries");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      schema_check(v.is_number(), "non-numeric entry at row " + std::to_string(r));
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from(const Json& j) {
  schema_check(j.is_array(), "vector must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    schema_check(j[i].is_number(), "non-numeric vector entry");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

struct ObjectEntry {
  geometry::ObjectModel model;
  std::string split;  // "train" or "test"
};

inline Json to_json(const geometry::ObjectModel& o) {
  Json poly = Json::array();
  for (const auto& v : o.polygon) poly.push_back(to_json(v));
  Json att = Json::array();
  for (const auto& pm : o.attachments) att.push_back({{"position", to_json(pm.position)}, {"mass", pm.mass}});
  return {{"name", o.name},     {"polygon", poly},          {"body_mass", o.body_mass},
          {"attachments", att}, {"height", o.height},       {"surface_friction", o.surface_friction}};
}

inline geometry::ObjectModel object_from(const Json& j) {
  geometry::ObjectModel o;
  o.name = str(j, "name");
  const Json& poly = field(j, "polygon");
  schema_check(poly.is_array(), "polygon must be an array");
  for (const auto& v : poly) o.polygon.push_back(vec2_from(v));
  o.body_mass = num(j, "body_mass");
  if (j.contains("attachments")) {
    for (const auto& a : field(j, "attachments")) o.attachments.push_back({vec2_from(field(a, "position")), num(a, "mass")});
  }
  if (j.contains("height")) o.height = num(j, "height");
  if (j.contains("surface_friction")) o.surface_friction = num(j, "surface_friction");
  geometry::validate(o);
  return o;
}

inline Json to_json(const geometry::GraspPose& g) {
  return {{"contact_a", to_json(g.contact_a)},
          {"contact_b", to_json(g.contact_b)},
          {"center", to_json(g.center)},
          {"normal_dir", to_json(g.normal_dir)},
          {"depth_z", g.depth_z},
          {"grip_force", g.grip_force},
          {"friction_coefficient", g.friction_coefficient},
          {"closure_friction", g.closure_friction}};
}

inline geometry::GraspPose grasp_from(const Json& j) {
  geometry::GraspPose g;
  g.contact_a = vec2_from(field(j, "contact_a"));
  g.contact_b = vec2_from(field(j, "contact_b"));
  g.center = vec2_from(field(j, "center"));
  g.normal_dir = vec2_from(field(j, "normal_dir"));
  g.depth_z = num(j, "depth_z");
  g.grip_force = num(j, "grip_force");
  g.friction_coefficient = num(j, "friction_coefficient");
  g.closure_friction = num(j, "closure_friction");
  return g;
}

inline physics::SlipLabel label_from_name(const std::string& s) {
  for (auto l : physics::all_labels)
    if (physics::label_name(l) == s) return l;
  throw Error(ErrorCode::schema, "unknown slip label '" + s + "'");
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Parses one JSON line; errors carry file and line number.
inline Json parse_line(const std::string& text, const std::filesystem::path& path, std::size_t line_no) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::schema, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

inline std::vector<ObjectEntry> load_object_library(const std::filesystem::path& path) {
  std::vector<ObjectEntry> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    const Json j = parse_line(lines[i], path, i + 1);
    try {
      ObjectEntry e{object_from(j), str(j, "split")};
      schema_check(e.split == "train" || e.split == "test", "split must be 'train' or 'test'");
      out.push_back(std::move(e));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::empty_input, "object library " + path.string() + " is empty");
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace slipgrasp::harness
