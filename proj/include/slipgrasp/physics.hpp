#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "slipgrasp/core.hpp"
#include "slipgrasp/geometry.hpp"
#include "slipgrasp/signal.hpp"

namespace slipgrasp::physics {

using geometry::GraspPose;
using geometry::ObjectModel;

enum class SlipLabel : int {
  no_slip = 0,
  cw_rotational = 1,
  ccw_rotational = 2,
  translational = 3,
};

inline constexpr std::array<SlipLabel, 4> all_labels{SlipLabel::no_slip, SlipLabel::cw_rotational,
                                                     SlipLabel::ccw_rotational, SlipLabel::translational};

inline std::string_view label_name(SlipLabel label) {
  switch (label) {
    case SlipLabel::no_slip: return "no_slip";
    case SlipLabel::cw_rotational: return "cw_rotational";
    case SlipLabel::ccw_rotational: return "ccw_rotational";
    case SlipLabel::translational: return "translational";
  }
  return "unknown";
}

inline SlipLabel label_from_int(int v) {
  if (v < 0 || v > 3) throw Error(ErrorCode::schema, "slip label must be in 0..3, got " + std::to_string(v));
  return static_cast<SlipLabel>(v);
}

inline bool is_rotational(SlipLabel l) { return l == SlipLabel::cw_rotational || l == SlipLabel::ccw_rotational; }

inline SlipLabel mirrored(SlipLabel l) {
  if (l == SlipLabel::cw_rotational) return SlipLabel::ccw_rotational;
  if (l == SlipLabel::ccw_rotational) return SlipLabel::cw_rotational;
  return l;
}

// Tactile layout: two pads of 4x4 taxels at 4 mm pitch. Feature index is
// sensor * 16 + row * 4 + col; row 0 is the top of the pad, col 0 the -u side.
inline constexpr int taxel_rows = 4;
inline constexpr int taxel_cols = 4;
inline constexpr int taxels_per_sensor = 16;
inline constexpr int sensor_count = 2;
inline constexpr int tactile_features = 32;
inline constexpr int wrench_features = 6;
inline constexpr double taxel_pitch = 0.004;
inline constexpr double pad_half_extent = 0.008;

inline Vec2 taxel_position(int index) {
  const int row = index / taxel_cols, col = index % taxel_cols;
  return {(col - 1.5) * taxel_pitch, (1.5 - row) * taxel_pitch};
}

// Sum of taxel distances from the patch center, about 95.85 mm.
inline double taxel_radius_sum() {
  double s = 0.0;
  for (int i = 0; i < taxels_per_sensor; ++i) s += taxel_position(i).norm();
  return s;
}

struct TactileFrame {
  std::array<double, tactile_features> pressures{};
  double timestamp = 0.0;
};

struct WrenchSample {
  Vec3 force = Vec3::Zero();   // end-effector frame: x along grasp normal, y closing, z up
  Vec3 torque = Vec3::Zero();
  double timestamp = 0.0;
};

struct Episode {
  Matrix tactile;                  // T x 32
  Matrix wrench;                   // T x 6: fx fy fz tx ty tz
  std::vector<double> timestamps;  // seconds
  SlipLabel label = SlipLabel::no_slip;
  std::string object_name;
  GraspPose grasp;
  double com_offset_d = 0.0;
  double lift_height = 0.1;
  double sample_rate = 50.0;

  int length() const { return static_cast<int>(tactile.rows()); }

  TactileFrame tactile_frame(int t) const {
    TactileFrame f;
    for (int i = 0; i < tactile_features; ++i) f.pressures[static_cast<std::size_t>(i)] = tactile(t, i);
    f.timestamp = timestamps[static_cast<std::size_t>(t)];
    return f;
  }
  WrenchSample wrench_sample(int t) const {
    WrenchSample w;
    w.force = wrench.row(t).head<3>().transpose();
    w.torque = wrench.row(t).tail<3>().transpose();
    w.timestamp = timestamps[static_cast<std::size_t>(t)];
    return w;
  }
};

struct NoiseConfig {
  double tactile_sigma = 0.02;  // 2% of unit full scale
  double force_sigma = 0.2;     // N
  double torque_sigma = 0.01;   // N m
  double force_drift = 0.02;    // N/s, per-episode rate drawn from [-drift, drift]
  double torque_drift = 0.002;  // N m / s

  static NoiseConfig none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

struct SimConfig {
  double raw_rate = 1000.0;
  double output_rate = 50.0;
  double cutoff_hz = 25.0;
  double settle_duration = 0.1;   // gripper closed, object resting on the table
  double lift_duration = 0.6;
  double hold_min = 0.6;
  double hold_max = 1.0;
  double liftoff_height = 0.02;   // lift over which the load moves from table to gripper
  double slip_rate_gain = 20.0;   // rad / (N m s)
  double table_depth = 0.80;
  double sigma_u = 0.005;         // contact footprint, along the grasp normal
  double sigma_v = 0.003;         // contact footprint, vertical
  double full_scale_force = 100.0;
  int max_steps = 150;
};

// Quasi-static Coulomb quantities of one grasp.
struct GraspMechanics {
  double mass = 0.0;
  double offset_d = 0.0;            // signed grasp-center to COM distance
  double friction = 0.0;
  double grip_force = 0.0;
  double translational_capacity = 0.0;
  double torque_capacity = 0.0;
};

inline double torque_capacity(double friction, double grip_force) {
  return 2.0 * friction * (grip_force / taxels_per_sensor) * taxel_radius_sum();
}

inline GraspMechanics grasp_mechanics(const ObjectModel& obj, const GraspPose& grasp) {
  if (!geometry::is_force_closure(obj, grasp.contact_a, grasp.contact_b, grasp.friction_coefficient))
    throw Error(ErrorCode::not_force_closure, "grasp on " + obj.name + " is not force closure");
  GraspMechanics m;
  m.mass = obj.total_mass();
  m.offset_d = geometry::signed_com_offset(obj, grasp);
  m.friction = grasp.friction_coefficient;
  m.grip_force = grasp.grip_force;
  m.translational_capacity = 2.0 * m.friction * m.grip_force;
  m.torque_capacity = torque_capacity(m.friction, m.grip_force);
  return m;
}

inline SlipLabel classify_mechanics(const GraspMechanics& m) {
  const double weight = m.mass * gravity;
  if (weight > m.translational_capacity) return SlipLabel::translational;
  const double gravity_torque = weight * std::abs(m.offset_d);
  if (gravity_torque > m.torque_capacity) return m.offset_d > 0.0 ? SlipLabel::cw_rotational : SlipLabel::ccw_rotational;
  return SlipLabel::no_slip;
}

// Analytic ground truth for a lift.
inline SlipLabel slip_outcome(const ObjectModel& obj, const GraspPose& grasp) {
  return classify_mechanics(grasp_mechanics(obj, grasp));
}

// Contact patch on one pad, in pad coordinates (u along the grasp normal, v up).
struct PadContact {
  double amplitude = 0.0;   // mean taxel pressure for a fully seated footprint
  Vec2 offset = Vec2::Zero();
  double sigma_u = 0.005;
  double sigma_v = 0.003;
  double angle = 0.0;       // footprint rotation about the patch center
  double slide = 0.0;       // downward translation of the object relative to the pad
  double contact_fraction = 1.0;
};

inline std::array<double, taxels_per_sensor> render_pad(const PadContact& c) {
  std::array<double, taxels_per_sensor> out{};
  if (c.amplitude <= 0.0 || c.contact_fraction <= 0.0) return out;
  const double peak = c.amplitude * c.contact_fraction * taxels_per_sensor * taxel_pitch * taxel_pitch /
                      (2.0 * std::numbers::pi * c.sigma_u * c.sigma_v);
  const double cs = std::cos(c.angle), sn = std::sin(c.angle);
  const Vec2 center(cs * c.offset.x() - sn * c.offset.y(), sn * c.offset.x() + cs * c.offset.y() - c.slide);
  for (int i = 0; i < taxels_per_sensor; ++i) {
    const Vec2 r = taxel_position(i) - center;
    const double qu = cs * r.x() + sn * r.y();
    const double qv = -sn * r.x() + cs * r.y();
    out[static_cast<std::size_t>(i)] = peak * std::exp(-0.5 * (qu * qu / (c.sigma_u * c.sigma_u) + qv * qv / (c.sigma_v * c.sigma_v)));
  }
  return out;
}

// Shared physical contact state; the second pad faces the first, so it sees the
// pattern mirrored in u and the rotation reversed.
struct ContactState {
  PadContact pad;
  double timestamp = 0.0;
};

inline TactileFrame taxel_pressures(const ContactState& state) {
  TactileFrame f;
  f.timestamp = state.timestamp;
  PadContact other = state.pad;
  other.angle = -state.pad.angle;
  other.offset.x() = -state.pad.offset.x();
  const auto a = render_pad(state.pad);
  const auto b = render_pad(other);
  std::copy(a.begin(), a.end(), f.pressures.begin());
  std::copy(b.begin(), b.end(), f.pressures.begin() + taxels_per_sensor);
  return f;
}

// Footprint placement from how the pad overlaps the object's side face.
inline PadContact seat_contact(const ObjectModel& obj, const GraspPose& grasp, const SimConfig& cfg) {
  PadContact c;
  c.amplitude = grasp.grip_force / cfg.full_scale_force;
  c.sigma_u = cfg.sigma_u;
  const double top = cfg.table_depth - obj.height;
  const double lo = std::max(grasp.depth_z - pad_half_extent, top);
  const double hi = std::min(grasp.depth_z + pad_half_extent, cfg.table_depth);
  const double overlap = std::max(hi - lo, 1e-3);
  c.sigma_v = std::clamp(overlap / 4.0, 1e-3, cfg.sigma_v);
  c.offset = Vec2(0.0, grasp.depth_z - 0.5 * (lo + hi));  // depth grows downward, v grows upward
  return c;
}

namespace detail {

inline SlipLabel label_from_trajectory(double rotation, double slide, double offset_d) {
  if (slide > 0.0) return SlipLabel::translational;
  if (rotation > 0.0) return offset_d > 0.0 ? SlipLabel::cw_rotational : SlipLabel::ccw_rotational;
  return SlipLabel::no_slip;
}

}  // namespace detail

// Quasi-static lift at 1 kHz, low-pass filtered and decimated to the output rate.
// The label is read off the simulated trajectory, not copied from slip_outcome.
inline Episode simulate_lift(const ObjectModel& obj, const GraspPose& grasp, double lift_height,
                             std::uint64_t rng_seed, const NoiseConfig& noise = {}, const SimConfig& cfg = {}) {
  if (!(lift_height > 0.0)) throw Error(ErrorCode::invalid_argument, "lift_height must be positive");
  const GraspMechanics mech = grasp_mechanics(obj, grasp);
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double hold = cfg.hold_min + (cfg.hold_max - cfg.hold_min) * unit(rng);
  const int factor = static_cast<int>(std::lround(cfg.raw_rate / cfg.output_rate));
  const int max_raw = cfg.max_steps * factor;
  const int n_raw = std::min(max_raw, static_cast<int>(std::lround((cfg.settle_duration + cfg.lift_duration + hold) * cfg.raw_rate)));
  std::array<double, wrench_features> drift{};
  for (int k = 0; k < wrench_features; ++k)
    drift[static_cast<std::size_t>(k)] = (2.0 * unit(rng) - 1.0) * (k < 3 ? noise.force_drift : noise.torque_drift);

  const double dt = 1.0 / cfg.raw_rate;
  const double weight = mech.mass * gravity;
  const double abs_d = std::abs(mech.offset_d);
  const double sign_d = mech.offset_d > 0.0 ? 1.0 : (mech.offset_d < 0.0 ? -1.0 : 0.0);
  const double lift_speed = lift_height / cfg.lift_duration;
  const double liftoff = std::min(cfg.liftoff_height, lift_height);

  PadContact seated = seat_contact(obj, grasp, cfg);
  Matrix tactile(n_raw, tactile_features);
  Matrix wrench(n_raw, wrench_features);
  std::vector<double> stamps(static_cast<std::size_t>(n_raw));

  double rotation = 0.0;       // magnitude of in-hand rotation, rad
  double slide = 0.0;          // pad travel along the object after translational slip
  double truncated_load = -1.0;
  double prev_height = 0.0;

  for (int i = 0; i < n_raw; ++i) {
    const double t = i * dt;
    double height = 0.0;
    if (t >= cfg.settle_duration) height = std::min(lift_height, lift_speed * (t - cfg.settle_duration));
    const double load_fraction = std::min(1.0, height / liftoff);
    const double gripper_travel = height - prev_height;
    prev_height = height;

    double load = load_fraction * weight;
    double torque_mag = load * abs_d;
    if (load > mech.translational_capacity || slide > 0.0) {
      // Fingers slide up along the object; it stays on the table.
      slide += gripper_travel;
      const double fraction = std::clamp(1.0 - slide / (2.0 * pad_half_extent), 0.0, 1.0);
      load = std::min(load, mech.translational_capacity) * fraction;
      torque_mag = std::min(load * abs_d, mech.torque_capacity * fraction);
      seated.contact_fraction = fraction;
    } else {
      const double excess = load_fraction * weight * abs_d * std::cos(rotation) - mech.torque_capacity;
      if (excess > 0.0) {
        if (truncated_load < 0.0 && load_fraction < 1.0) truncated_load = load;
        rotation += dt * cfg.slip_rate_gain * excess;
        torque_mag = mech.torque_capacity;
      } else if (rotation > 0.0) {
        torque_mag = std::min(load_fraction * weight * abs_d * std::cos(rotation), mech.torque_capacity);
      }
      if (truncated_load >= 0.0) load = std::min(load, truncated_load);
    }
    seated.angle = sign_d * rotation;
    seated.slide = std::max(slide, 0.0);

    const auto a = render_pad(seated);
    PadContact other = seated;
    other.angle = -seated.angle;
    other.offset.x() = -seated.offset.x();
    const auto b = render_pad(other);
    for (int k = 0; k < taxels_per_sensor; ++k) {
      tactile(i, k) = a[static_cast<std::size_t>(k)] + noise.tactile_sigma * gauss(rng);
      tactile(i, k + taxels_per_sensor) = b[static_cast<std::size_t>(k)] + noise.tactile_sigma * gauss(rng);
    }
    const std::array<double, wrench_features> clean{0.0, 0.0, -load, 0.0, -sign_d * torque_mag, 0.0};
    for (int k = 0; k < wrench_features; ++k) {
      const double sigma = k < 3 ? noise.force_sigma : noise.torque_sigma;
      wrench(i, k) = clean[static_cast<std::size_t>(k)] + drift[static_cast<std::size_t>(k)] * t + sigma * gauss(rng);
    }
    stamps[static_cast<std::size_t>(i)] = t;
  }

  Episode ep;
  ep.tactile = signal::decimate(signal::iir_lowpass(tactile, cfg.cutoff_hz, cfg.raw_rate), factor).cwiseMax(0.0);
  ep.wrench = signal::decimate(signal::iir_lowpass(wrench, cfg.cutoff_hz, cfg.raw_rate), factor);
  ep.timestamps = signal::decimate(stamps, factor);
  ep.label = detail::label_from_trajectory(rotation, slide, mech.offset_d);
  ep.object_name = obj.name;
  ep.grasp = grasp;
  ep.com_offset_d = mech.offset_d;
  ep.lift_height = lift_height;
  ep.sample_rate = cfg.output_rate;
  return ep;
}

// Exact image of an episode under reflection across the vertical plane: the pad u axis,
// force x, and torques about y and z change sign.
inline Episode mirror_episode(const Episode& ep) {
  Episode out = ep;
  for (int s = 0; s < sensor_count; ++s)
    for (int r = 0; r < taxel_rows; ++r)
      for (int c = 0; c < taxel_cols; ++c)
        out.tactile.col(s * taxels_per_sensor + r * taxel_cols + c) =
            ep.tactile.col(s * taxels_per_sensor + r * taxel_cols + (taxel_cols - 1 - c));
  out.wrench.col(0) = -ep.wrench.col(0);
  out.wrench.col(4) = -ep.wrench.col(4);
  out.wrench.col(5) = -ep.wrench.col(5);
  out.label = mirrored(ep.label);
  out.grasp = geometry::mirrored(ep.grasp);
  out.com_offset_d = -ep.com_offset_d;
  return out;
}

}  // namespace slipgrasp::physics
