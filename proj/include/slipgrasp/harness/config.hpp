#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "slipgrasp/core.hpp"
#include "slipgrasp/detector.hpp"
#include "slipgrasp/physics.hpp"
#include "slipgrasp/regrasp.hpp"

namespace slipgrasp::harness {

struct ExperimentConfig {
  std::filesystem::path objects = "data/objects.jsonl";
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;

  int slip_episodes = 1039;
  double lift_height = 0.1;
  double grip_force_min = 25.0;
  double grip_force_max = 50.0;

  int regrasp_samples = 1347;

  physics::NoiseConfig noise;
  physics::SimConfig sim;

  detector::DetectorConfig detector;
  std::vector<detector::Backend> backends{detector::Backend::linear_svm, detector::Backend::rbf_svm,
                                          detector::Backend::lstm};
  int folds = 5;
  detector::Backend benchmark_backend = detector::Backend::linear_svm;
  detector::InputMode benchmark_mode = detector::InputMode::tactile;

  regrasp::PlannerConfig planner;
  int grasps_per_object = 20;
  regrasp::RolloutConfig rollout;
};

namespace detail {

inline void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw Error(ErrorCode::config, where + " must be a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw Error(ErrorCode::config, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  if (!node[key]) return;
  try {
    out = node[key].as<T>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::config, where + "." + key + ": " + e.what());
  }
}

inline void read_train(const YAML::Node& n, ml::TrainOptions& t, const std::string& where) {
  read(n, "epochs", t.epochs, where);
  read(n, "batch_size", t.batch_size, where);
  read(n, "patience", t.patience, where);
  read(n, "learning_rate", t.learning_rate, where);
}

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::config, msg);
}

}  // namespace detail

// Relative paths are resolved against the directory holding the config file.
inline ExperimentConfig parse_config(const YAML::Node& root, const std::filesystem::path& base_dir) {
  using detail::read;
  ExperimentConfig c;
  if (!root || root.IsNull()) return c;
  detail::check_keys(root, "config", {"objects", "output_dir", "seed", "slip", "regrasp", "noise", "simulation",
                                      "detector", "planner", "benchmark"});
  std::string objects = c.objects.string(), out = c.output_dir.string();
  read(root, "objects", objects, "config");
  read(root, "output_dir", out, "config");
  read(root, "seed", c.seed, "config");
  c.objects = std::filesystem::path(objects).is_absolute() ? std::filesystem::path(objects) : base_dir / objects;
  c.output_dir = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;

  if (const auto n = root["slip"]) {
    detail::check_keys(n, "slip", {"episodes", "lift_height", "grip_force_min", "grip_force_max"});
    read(n, "episodes", c.slip_episodes, "slip");
    read(n, "lift_height", c.lift_height, "slip");
    read(n, "grip_force_min", c.grip_force_min, "slip");
    read(n, "grip_force_max", c.grip_force_max, "slip");
  }
  if (const auto n = root["regrasp"]) {
    detail::check_keys(n, "regrasp", {"samples"});
    read(n, "samples", c.regrasp_samples, "regrasp");
  }
  if (const auto n = root["noise"]) {
    detail::check_keys(n, "noise", {"tactile_sigma", "force_sigma", "torque_sigma", "force_drift", "torque_drift"});
    read(n, "tactile_sigma", c.noise.tactile_sigma, "noise");
    read(n, "force_sigma", c.noise.force_sigma, "noise");
    read(n, "torque_sigma", c.noise.torque_sigma, "noise");
    read(n, "force_drift", c.noise.force_drift, "noise");
    read(n, "torque_drift", c.noise.torque_drift, "noise");
  }
  if (const auto n = root["simulation"]) {
    detail::check_keys(n, "simulation", {"cutoff_hz", "hold_min", "hold_max", "slip_rate_gain", "table_depth"});
    read(n, "cutoff_hz", c.sim.cutoff_hz, "simulation");
    read(n, "hold_min", c.sim.hold_min, "simulation");
    read(n, "hold_max", c.sim.hold_max, "simulation");
    read(n, "slip_rate_gain", c.sim.slip_rate_gain, "simulation");
    read(n, "table_depth", c.sim.table_depth, "simulation");
  }
  if (const auto n = root["detector"]) {
    detail::check_keys(n, "detector", {"backends", "c_linear", "c_rbf", "gamma", "svm_steps", "folds",
                                       "contact_threshold", "contact_window", "min_translational_support", "lstm",
                                       "benchmark_backend", "benchmark_mode"});
    auto& d = c.detector;
    if (n["backends"]) {
      c.backends.clear();
      for (const auto& b : n["backends"]) c.backends.push_back(detector::backend_from_name(b.as<std::string>()));
    }
    read(n, "c_linear", d.c_linear, "detector");
    read(n, "c_rbf", d.c_rbf, "detector");
    read(n, "gamma", d.gamma, "detector");
    read(n, "svm_steps", d.svm_steps, "detector");
    read(n, "folds", c.folds, "detector");
    read(n, "contact_threshold", d.contact_threshold, "detector");
    read(n, "contact_window", d.contact_window, "detector");
    read(n, "min_translational_support", d.min_translational_support, "detector");
    std::string bb, bm;
    read(n, "benchmark_backend", bb, "detector");
    read(n, "benchmark_mode", bm, "detector");
    if (!bb.empty()) c.benchmark_backend = detector::backend_from_name(bb);
    if (!bm.empty()) c.benchmark_mode = detector::mode_from_name(bm);
    if (const auto l = n["lstm"]) {
      detail::check_keys(l, "detector.lstm", {"cells", "hidden", "input_dropout", "recurrent_dropout", "head_dropout",
                                              "epochs", "batch_size", "patience", "learning_rate"});
      read(l, "cells", d.net.cells, "detector.lstm");
      read(l, "hidden", d.net.hidden, "detector.lstm");
      read(l, "input_dropout", d.net.input_dropout, "detector.lstm");
      read(l, "recurrent_dropout", d.net.recurrent_dropout, "detector.lstm");
      read(l, "head_dropout", d.net.head_dropout, "detector.lstm");
      detail::read_train(l, d.train, "detector.lstm");
    }
  }
  if (const auto n = root["planner"]) {
    detail::check_keys(n, "planner", {"cells", "scalar_width", "hidden", "input_dropout", "recurrent_dropout",
                                      "head_dropout", "n_candidates", "force_deltas", "epochs", "batch_size",
                                      "patience", "learning_rate"});
    auto& p = c.planner;
    read(n, "cells", p.cells, "planner");
    read(n, "scalar_width", p.scalar_width, "planner");
    read(n, "hidden", p.hidden, "planner");
    read(n, "input_dropout", p.input_dropout, "planner");
    read(n, "recurrent_dropout", p.recurrent_dropout, "planner");
    read(n, "head_dropout", p.head_dropout, "planner");
    read(n, "n_candidates", p.n_candidates, "planner");
    read(n, "force_deltas", p.force_deltas, "planner");
    detail::read_train(n, p.train, "planner");
  }
  if (const auto n = root["benchmark"]) {
    detail::check_keys(n, "benchmark", {"grasps_per_object", "candidate_poses", "fixed_ratio", "grid_cell"});
    read(n, "grasps_per_object", c.grasps_per_object, "benchmark");
    read(n, "candidate_poses", c.rollout.candidate_poses, "benchmark");
    read(n, "fixed_ratio", c.rollout.fixed_ratio, "benchmark");
    read(n, "grid_cell", c.rollout.grid_cell, "benchmark");
  }

  detail::require(c.slip_episodes >= 1, "slip.episodes must be >= 1");
  detail::require(c.regrasp_samples >= 1, "regrasp.samples must be >= 1");
  detail::require(c.grasps_per_object >= 1, "benchmark.grasps_per_object must be >= 1");
  detail::require(c.folds >= 2, "detector.folds must be >= 2");
  detail::require(c.grip_force_min > 0.0 && c.grip_force_max >= c.grip_force_min, "invalid grip force range");
  detail::require(c.detector.contact_threshold > 0.0, "detector.contact_threshold must be positive");
  detail::require(!c.planner.force_deltas.empty(), "planner.force_deltas must not be empty");
  detail::require(std::filesystem::exists(c.objects), "object library not found: " + c.objects.string());
  c.rollout.noise = c.noise;
  c.rollout.sim = c.sim;
  c.rollout.lift_height = c.lift_height;
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw Error(ErrorCode::io, "cannot read config " + path.string());
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::config, path.string() + ": " + e.what());
  }
  return parse_config(root, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

}  // namespace slipgrasp::harness
