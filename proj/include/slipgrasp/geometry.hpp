#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "slipgrasp/core.hpp"

namespace slipgrasp::geometry {

inline constexpr double boundary_tolerance = 1e-7;

struct PointMass {
  Vec2 position = Vec2::Zero();
  double mass = 0.0;  // kg
};

// Planar object as seen top-down from the camera. The polygon is counterclockwise,
// in meters; body_mass is spread uniformly over its area.
struct ObjectModel {
  std::string name;
  std::vector<Vec2> polygon;
  double body_mass = 0.0;
  std::vector<PointMass> attachments;
  double height = 0.04;            // extent above the table, meters
  double surface_friction = 0.5;   // Coulomb coefficient at the finger pads

  double total_mass() const {
    double m = body_mass;
    for (const auto& pm : attachments) m += pm.mass;
    return m;
  }
};

struct GraspPose {
  Vec2 contact_a = Vec2::Zero();
  Vec2 contact_b = Vec2::Zero();
  Vec2 center = Vec2::Zero();
  Vec2 normal_dir = Vec2::UnitY();   // unit vector along the closing line
  double depth_z = 0.0;              // camera depth of the finger pad center
  double grip_force = 40.0;          // N
  double friction_coefficient = 0.5; // physical contact friction used by the simulator
  double closure_friction = 0.0;     // sampler friction step at which closure was found

  double width() const { return (contact_a - contact_b).norm(); }
};

// Exits of the grasp-normal line: a on the +perpendicular side, a_prime on the other.
struct BoundaryPair {
  Vec2 a = Vec2::Zero();
  Vec2 a_prime = Vec2::Zero();
};

inline double cross(const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

// Perpendicular to the closing line; the grasp normal of the regrasp geometry.
inline Vec2 grasp_perpendicular(const Vec2& normal_dir) { return {normal_dir.y(), -normal_dir.x()}; }

// Closing direction with its perpendicular pointing toward +x (or +y when vertical).
inline Vec2 canonical_closing_direction(const Vec2& dir) {
  Vec2 n = dir.normalized();
  const Vec2 p = grasp_perpendicular(n);
  if (p.x() < -1e-12 || (std::abs(p.x()) <= 1e-12 && p.y() < 0.0)) n = -n;
  return n;
}

inline double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * a;
}

inline Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double w = cross(p, q);
    a += w;
    c += (p + q) * w;
  }
  return c / (3.0 * a);
}

inline double perimeter(const std::vector<Vec2>& poly) {
  double len = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) len += (poly[(i + 1) % n] - poly[i]).norm();
  return len;
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double len2 = e.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(e) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * e - p).norm();
}

inline double distance_to_boundary(const std::vector<Vec2>& poly, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0, n = poly.size(); i < n; ++i)
    best = std::min(best, distance_to_segment(p, poly[i], poly[(i + 1) % n]));
  return best;
}

inline bool on_boundary(const std::vector<Vec2>& poly, const Vec2& p, double tol = boundary_tolerance) {
  return distance_to_boundary(poly, p) <= tol;
}

// Crossing-number test; points on the boundary are reported inconsistently, callers
// that care check on_boundary first.
inline bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool inside = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

inline bool strictly_inside(const std::vector<Vec2>& poly, const Vec2& p) {
  return !on_boundary(poly, p) && point_in_polygon(poly, p);
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = cross(b - a, c - a);
    return (v > 1e-15) - (v < -1e-15);
  };
  auto on_seg = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a.x(), b.x()) - 1e-15 <= c.x() && c.x() <= std::max(a.x(), b.x()) + 1e-15 &&
           std::min(a.y(), b.y()) - 1e-15 <= c.y() && c.y() <= std::max(a.y(), b.y()) + 1e-15;
  };
  const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_seg(p1, p2, q1)) return true;
  if (o2 == 0 && on_seg(p1, p2, q2)) return true;
  if (o3 == 0 && on_seg(q1, q2, p1)) return true;
  if (o4 == 0 && on_seg(q1, q2, p2)) return true;
  return false;
}

inline bool is_simple(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) return false;
    }
  }
  return true;
}

inline void validate(const ObjectModel& obj) {
  if (obj.polygon.size() < 3) throw Error(ErrorCode::invalid_object, obj.name + ": fewer than 3 vertices");
  if (!(signed_area(obj.polygon) > 0.0))
    throw Error(ErrorCode::invalid_object, obj.name + ": polygon must be counterclockwise with positive area");
  if (!is_simple(obj.polygon)) throw Error(ErrorCode::invalid_object, obj.name + ": polygon self-intersects");
  if (!(obj.body_mass > 0.0)) throw Error(ErrorCode::invalid_object, obj.name + ": body_mass must be positive");
  if (!(obj.height > 0.0)) throw Error(ErrorCode::invalid_object, obj.name + ": height must be positive");
  if (!(obj.surface_friction >= 0.0 && obj.surface_friction <= 1.0))
    throw Error(ErrorCode::invalid_object, obj.name + ": surface_friction outside [0,1]");
  for (const auto& pm : obj.attachments) {
    if (!(pm.mass >= 0.0)) throw Error(ErrorCode::invalid_object, obj.name + ": negative attachment mass");
    if (!on_boundary(obj.polygon, pm.position) && !point_in_polygon(obj.polygon, pm.position))
      throw Error(ErrorCode::invalid_object, obj.name + ": attachment outside polygon");
  }
}

inline Vec2 center_of_mass(const ObjectModel& obj) {
  Vec2 weighted = obj.body_mass * polygon_centroid(obj.polygon);
  double m = obj.body_mass;
  for (const auto& pm : obj.attachments) {
    weighted += pm.mass * pm.position;
    m += pm.mass;
  }
  return weighted / m;
}

inline ObjectModel transformed(const ObjectModel& obj, double angle, const Vec2& translation) {
  ObjectModel out = obj;
  for (auto& v : out.polygon) v = rotate(v, angle) + translation;
  for (auto& pm : out.attachments) pm.position = rotate(pm.position, angle) + translation;
  return out;
}

inline Vec2 mirror_x(const Vec2& v) { return {-v.x(), v.y()}; }

// Reflection across the vertical plane x = 0. Vertex order is reversed to stay CCW.
inline ObjectModel mirrored(const ObjectModel& obj) {
  ObjectModel out = obj;
  std::reverse(out.polygon.begin(), out.polygon.end());
  for (auto& v : out.polygon) v = mirror_x(v);
  for (auto& pm : out.attachments) pm.position = mirror_x(pm.position);
  return out;
}

inline GraspPose mirrored(const GraspPose& g) {
  GraspPose out = g;
  out.contact_a = mirror_x(g.contact_a);
  out.contact_b = mirror_x(g.contact_b);
  out.center = mirror_x(g.center);
  out.normal_dir = mirror_x(g.normal_dir);
  return out;
}

// Signed distance from grasp center to COM along the grasp normal. Positive means the
// COM lies on the side of boundary point a.
inline double signed_com_offset(const ObjectModel& obj, const GraspPose& grasp) {
  return (center_of_mass(obj) - grasp.center).dot(grasp_perpendicular(grasp.normal_dir));
}

// Nearest boundary crossing along origin + t*dir for t > min_t.
inline std::optional<double> ray_exit(const std::vector<Vec2>& poly, const Vec2& origin, const Vec2& dir,
                                      double min_t = 1e-9) {
  std::optional<double> best;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2 e = poly[(i + 1) % n] - p;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-15) continue;
    const Vec2 w = p - origin;
    const double t = cross(w, e) / denom;
    const double s = cross(w, dir) / denom;
    if (s < -1e-12 || s > 1.0 + 1e-12 || t <= min_t) continue;
    if (!best || t < *best) best = t;
  }
  return best;
}

inline BoundaryPair boundary_intersections(const ObjectModel& obj, const GraspPose& grasp) {
  if (!strictly_inside(obj.polygon, grasp.center))
    throw Error(ErrorCode::no_intersection, "grasp center is not strictly inside " + obj.name);
  const Vec2 perp = grasp_perpendicular(grasp.normal_dir.normalized());
  const auto tp = ray_exit(obj.polygon, grasp.center, perp, 0.0);
  const auto tm = ray_exit(obj.polygon, grasp.center, -perp, 0.0);
  if (!tp || !tm) throw Error(ErrorCode::no_intersection, "grasp normal does not exit " + obj.name);
  return {grasp.center + *tp * perp, grasp.center - *tm * perp};
}

// Inward unit normal at a boundary point. Vertices use the bisector of the two
// adjacent edge normals.
inline Vec2 inward_normal_at(const std::vector<Vec2>& poly, const Vec2& p, double tol = boundary_tolerance) {
  const std::size_t n = poly.size();
  auto edge_normal = [&](std::size_t i) {
    const Vec2 e = (poly[(i + 1) % n] - poly[i]).normalized();
    return Vec2(-e.y(), e.x());
  };
  for (std::size_t i = 0; i < n; ++i) {
    if ((poly[i] - p).norm() <= tol) {
      const Vec2 bis = edge_normal((i + n - 1) % n) + edge_normal(i);
      if (bis.norm() < 1e-12) return edge_normal(i);
      return bis.normalized();
    }
  }
  std::size_t best = n;
  double best_d = tol;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = distance_to_segment(p, poly[i], poly[(i + 1) % n]);
    if (d <= best_d) {
      best_d = d;
      best = i;
    }
  }
  if (best == n) throw Error(ErrorCode::invalid_argument, "contact is not on the object boundary");
  return edge_normal(best);
}

inline double angle_between(const Vec2& u, const Vec2& v) {
  return std::atan2(std::abs(cross(u, v)), u.dot(v));
}

inline bool is_force_closure(const ObjectModel& obj, const Vec2& contact_a, const Vec2& contact_b,
                             double friction_coefficient) {
  if ((contact_a - contact_b).norm() < 1e-9)
    throw Error(ErrorCode::degenerate_contact, "contacts coincide");
  if (friction_coefficient < 0.0 || friction_coefficient > 1.0)
    throw Error(ErrorCode::invalid_argument, "friction coefficient outside [0,1]");
  const Vec2 na = inward_normal_at(obj.polygon, contact_a);
  const Vec2 nb = inward_normal_at(obj.polygon, contact_b);
  const Vec2 line = (contact_b - contact_a).normalized();
  const double half_angle = std::atan(friction_coefficient) + 1e-9;
  return angle_between(line, na) <= half_angle && angle_between(-line, nb) <= half_angle;
}

inline GraspPose make_grasp(const Vec2& contact_a, const Vec2& contact_b, double depth_z, double grip_force,
                            double friction_coefficient) {
  GraspPose g;
  g.contact_a = contact_a;
  g.contact_b = contact_b;
  g.center = 0.5 * (contact_a + contact_b);
  g.normal_dir = canonical_closing_direction(contact_b - contact_a);
  g.depth_z = depth_z;
  g.grip_force = grip_force;
  g.friction_coefficient = friction_coefficient;
  return g;
}

struct SamplerConfig {
  int budget_per_step = 200;   // contact candidates drawn per friction step
  double friction_step = 0.2;
  double max_width = 0.08;     // gripper stroke
  double min_width = 1e-3;
  double grip_force = 40.0;
};

// Point at arc-length s along the closed boundary.
inline Vec2 boundary_point_at(const std::vector<Vec2>& poly, double s) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    const double len = e.norm();
    if (s <= len || i + 1 == n) return poly[i] + e * std::clamp(s / len, 0.0, 1.0);
    s -= len;
  }
  return poly.front();
}

// Antipodal sampler. The friction coefficient starts at 0 and grows in fixed steps up
// to 1 until n_target closure poses are collected.
inline std::vector<GraspPose> sample_antipodal_grasps(const ObjectModel& obj, int n_target, double table_depth,
                                                      std::uint64_t rng_seed, const SamplerConfig& cfg = {}) {
  if (n_target < 1) throw Error(ErrorCode::invalid_argument, "n_target must be >= 1");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double len = perimeter(obj.polygon);
  const int steps = static_cast<int>(std::lround(1.0 / cfg.friction_step));

  std::vector<GraspPose> poses;
  for (int k = 0; k <= steps && static_cast<int>(poses.size()) < n_target; ++k) {
    const double mu = std::min(1.0, k * cfg.friction_step);
    const double half = std::atan(mu);
    for (int draw = 0; draw < cfg.budget_per_step; ++draw) {
      const Vec2 a = boundary_point_at(obj.polygon, unit(rng) * len);
      const double phi = (2.0 * unit(rng) - 1.0) * half;
      const double depth_u = unit(rng);
      const Vec2 dir = rotate(inward_normal_at(obj.polygon, a), phi);
      const auto t = ray_exit(obj.polygon, a, dir);
      if (!t || *t > cfg.max_width || *t < cfg.min_width) continue;
      const Vec2 b = a + *t * dir;
      if (!is_force_closure(obj, a, b, mu)) continue;
      const double top = table_depth - obj.height;
      GraspPose g = make_grasp(a, b, top + depth_u * (table_depth - top), cfg.grip_force, obj.surface_friction);
      g.closure_friction = mu;
      poses.push_back(g);
    }
  }
  if (static_cast<int>(poses.size()) < n_target)
    throw Error(ErrorCode::sampler_exhausted, obj.name + ": found " + std::to_string(poses.size()) + " of " +
                                                  std::to_string(n_target) + " closure poses");
  poses.resize(static_cast<std::size_t>(n_target));
  return poses;
}

struct OccupancyGrid {
  Vec2 origin = Vec2::Zero();  // lower-left corner
  double cell = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> cells;  // row-major, index iy * nx + ix

  bool occupied(int ix, int iy) const {
    if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return false;
    return cells[static_cast<std::size_t>(iy) * nx + ix] != 0;
  }
  Vec2 cell_center(int ix, int iy) const { return origin + Vec2((ix + 0.5) * cell, (iy + 0.5) * cell); }
  std::size_t count() const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), 1)); }
  double area() const { return static_cast<double>(count()) * cell * cell; }

  // Pixel-wise centroid of the segmented object.
  Vec2 centroid() const {
    Vec2 c = Vec2::Zero();
    std::size_t k = 0;
    for (int iy = 0; iy < ny; ++iy)
      for (int ix = 0; ix < nx; ++ix)
        if (occupied(ix, iy)) {
          c += cell_center(ix, iy);
          ++k;
        }
    return k ? Vec2(c / static_cast<double>(k)) : c;
  }
};

struct Segmentation {
  OccupancyGrid grid;
  std::vector<std::vector<Vec2>> boundary;  // closed polylines, first vertex not repeated
};

namespace detail {

// Marching squares on the binary grid sampled at cell centers, iso level 1/2.
// Points are keyed in doubled cell-center coordinates so shared midpoints match exactly.
inline std::vector<std::vector<Vec2>> trace_boundary(const OccupancyGrid& g) {
  using Key = std::pair<int, int>;
  std::map<Key, std::vector<Key>> adj;
  auto link = [&](Key p, Key q) {
    adj[p].push_back(q);
    adj[q].push_back(p);
  };
  for (int j = -1; j < g.ny; ++j) {
    for (int i = -1; i < g.nx; ++i) {
      const int v00 = g.occupied(i, j), v10 = g.occupied(i + 1, j);
      const int v11 = g.occupied(i + 1, j + 1), v01 = g.occupied(i, j + 1);
      const int code = v00 | (v10 << 1) | (v11 << 2) | (v01 << 3);
      const Key bottom{2 * i + 1, 2 * j}, right{2 * i + 2, 2 * j + 1};
      const Key top{2 * i + 1, 2 * j + 2}, left{2 * i, 2 * j + 1};
      switch (code) {
        case 0: case 15: break;
        case 1: case 14: link(left, bottom); break;
        case 2: case 13: link(bottom, right); break;
        case 3: case 12: link(left, right); break;
        case 4: case 11: link(right, top); break;
        case 6: case 9: link(bottom, top); break;
        case 7: case 8: link(left, top); break;
        case 5: link(left, top); link(bottom, right); break;    // diagonal occupied corners kept apart
        case 10: link(left, bottom); link(right, top); break;
      }
    }
  }
  std::vector<std::vector<Vec2>> loops;
  std::map<Key, bool> seen;
  auto to_world = [&](const Key& k) {
    return Vec2(g.origin + Vec2((k.first * 0.5 + 0.5) * g.cell, (k.second * 0.5 + 0.5) * g.cell));
  };
  for (const auto& [start, _] : adj) {
    if (seen[start]) continue;
    std::vector<Vec2> loop{to_world(start)};
    seen[start] = true;
    Key prev = start, cur = adj[start][0];
    while (cur != start && !seen[cur]) {
      seen[cur] = true;
      loop.push_back(to_world(cur));
      const auto& nb = adj[cur];
      const Key next = (nb.size() > 1 && nb[0] == prev) ? nb[1] : nb[0];
      prev = cur;
      cur = next;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace detail

// Top-down occupancy grid plus marching-squares outline; stands in for depth-image
// plane segmentation.
inline Segmentation rasterize_and_segment(const ObjectModel& obj, double cell) {
  if (!(cell > 0.0)) throw Error(ErrorCode::invalid_argument, "cell must be positive");
  Vec2 lo = obj.polygon.front(), hi = obj.polygon.front();
  for (const auto& v : obj.polygon) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  // Local thickness: distance from each edge midpoint to the opposite boundary.
  for (std::size_t i = 0, n = obj.polygon.size(); i < n; ++i) {
    const Vec2 mid = 0.5 * (obj.polygon[i] + obj.polygon[(i + 1) % n]);
    const auto w = ray_exit(obj.polygon, mid, inward_normal_at(obj.polygon, mid));
    if (w && *w < 2.0 * cell)
      throw Error(ErrorCode::cell_too_coarse, obj.name + ": polygon thinner than two cells");
  }
  Segmentation seg;
  OccupancyGrid& g = seg.grid;
  g.origin = lo;
  g.cell = cell;
  g.nx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / cell - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / cell - 1e-9)));
  if (g.nx < 2 || g.ny < 2) throw Error(ErrorCode::cell_too_coarse, obj.name + ": fewer than two cells across");
  g.cells.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      g.cells[static_cast<std::size_t>(iy) * g.nx + ix] = point_in_polygon(obj.polygon, g.cell_center(ix, iy));
  seg.boundary = detail::trace_boundary(g);
  return seg;
}

}  // namespace slipgrasp::geometry
