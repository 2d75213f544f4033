#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "slipgrasp/core.hpp"
#include "slipgrasp/geometry.hpp"
#include "slipgrasp/harness/config.hpp"
#include "slipgrasp/harness/io.hpp"
#include "slipgrasp/physics.hpp"
#include "slipgrasp/regrasp.hpp"

namespace slipgrasp::harness {

inline constexpr int dataset_version = 1;

struct SlipRecord {
  int index = 0;
  std::string split;
  physics::Episode episode;
};

struct SlipDataset {
  std::uint64_t seed = 0;
  double sample_rate = 50.0;
  std::vector<SlipRecord> records;
  std::vector<std::string> skipped;  // objects the sampler could not grasp

  std::vector<const physics::Episode*> episodes(const std::string& split = "") const {
    std::vector<const physics::Episode*> out;
    for (const auto& r : records)
      if (split.empty() || r.split == split) out.push_back(&r.episode);
    return out;
  }

  std::map<std::string, int> class_counts() const {
    std::map<std::string, int> c;
    for (auto l : physics::all_labels) c[std::string(physics::label_name(l))] = 0;
    for (const auto& r : records) ++c[std::string(physics::label_name(r.episode.label))];
    return c;
  }
};

struct RegraspRecord {
  int index = 0;
  std::string split;
  geometry::GraspPose grasp;
  regrasp::RegraspSample sample;
};

struct RegraspDataset {
  std::uint64_t seed = 0;
  std::vector<RegraspRecord> records;
  std::vector<std::string> skipped;

  std::vector<regrasp::RegraspSample> samples() const {
    std::vector<regrasp::RegraspSample> out;
    for (const auto& r : records) out.push_back(r.sample);
    return out;
  }
};

// Random planar pose on the table: rotation about the vertical and a small shift.
inline geometry::ObjectModel random_pose(const geometry::ObjectModel& obj, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> shift(-0.05, 0.05);
  const double a = angle(rng);
  const double tx = shift(rng);
  const double ty = shift(rng);
  return geometry::transformed(obj, a, Vec2(tx, ty));
}

struct FirstGrasp {
  geometry::ObjectModel object;
  geometry::GraspPose grasp;
  physics::Episode episode;
};

// Poses the object, samples one antipodal grasp at a random force, simulates the lift.
inline FirstGrasp first_grasp(const geometry::ObjectModel& obj, const ExperimentConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  FirstGrasp f;
  f.object = random_pose(obj, rng);
  std::uniform_real_distribution<double> force(cfg.grip_force_min, cfg.grip_force_max);
  geometry::SamplerConfig sc = cfg.rollout.sampler;
  sc.grip_force = force(rng);
  f.grasp = geometry::sample_antipodal_grasps(f.object, 1, cfg.sim.table_depth, derive_seed(seed, 1), sc).front();
  f.episode = physics::simulate_lift(f.object, f.grasp, cfg.lift_height, derive_seed(seed, 2), cfg.noise, cfg.sim);
  return f;
}

enum : std::uint64_t { stream_slip = 101, stream_regrasp = 202, stream_policy = 303, stream_train = 404 };

// Objects are visited round-robin; each episode gets its own derived seed.
inline SlipDataset collect_slip_dataset(const std::vector<ObjectEntry>& objects, const ExperimentConfig& cfg,
                                        std::uint64_t seed) {
  if (objects.empty()) throw Error(ErrorCode::empty_input, "no objects");
  SlipDataset ds;
  ds.seed = seed;
  ds.sample_rate = cfg.sim.output_rate;
  for (int i = 0; i < cfg.slip_episodes; ++i) {
    const ObjectEntry& e = objects[static_cast<std::size_t>(i) % objects.size()];
    try {
      FirstGrasp f = first_grasp(e.model, cfg, derive_seed(seed, stream_slip, static_cast<std::uint64_t>(i)));
      ds.records.push_back({i, e.split, std::move(f.episode)});
    } catch (const Error& err) {
      if (err.code() != ErrorCode::sampler_exhausted) throw;
      std::cerr << "skipping episode " << i << ": " << err.what() << "\n";
      ds.skipped.push_back(e.model.name);
    }
  }
  return ds;
}

// First grasps on training objects that truly slip rotationally, each paired with a
// random ratio and force delta and the oracle outcome of the resulting second grasp.
inline RegraspDataset collect_regrasp_dataset(const std::vector<ObjectEntry>& objects, const ExperimentConfig& cfg,
                                              std::uint64_t seed) {
  std::vector<const ObjectEntry*> train;
  for (const auto& e : objects)
    if (e.split == "train") train.push_back(&e);
  if (train.empty()) throw Error(ErrorCode::empty_input, "no training objects");
  RegraspDataset ds;
  ds.seed = seed;
  const long max_attempts = 100L * cfg.regrasp_samples + 1000;
  for (long k = 0; k < max_attempts && static_cast<int>(ds.records.size()) < cfg.regrasp_samples; ++k) {
    const ObjectEntry& e = *train[static_cast<std::size_t>(k) % train.size()];
    const std::uint64_t s = derive_seed(seed, stream_regrasp, static_cast<std::uint64_t>(k));
    FirstGrasp f;
    try {
      f = first_grasp(e.model, cfg, s);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::sampler_exhausted) throw;
      ds.skipped.push_back(e.model.name);
      continue;
    }
    if (!physics::is_rotational(f.episode.label)) continue;
    std::mt19937_64 rng(derive_seed(s, 3));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, cfg.planner.force_deltas.size() - 1);
    RegraspRecord r;
    r.index = static_cast<int>(ds.records.size());
    r.split = e.split;
    r.grasp = f.grasp;
    r.sample.object_name = e.model.name;
    r.sample.tactile = f.episode.tactile;
    r.sample.wrench = f.episode.wrench;
    r.sample.mu = unit(rng);
    r.sample.force_delta = cfg.planner.force_deltas[pick(rng)];
    r.sample.first_slip = f.episode.label;
    r.sample.label = regrasp::second_grasp_label(f.object, f.grasp, f.episode.label, r.sample.mu, r.sample.force_delta);
    ds.records.push_back(std::move(r));
  }
  if (static_cast<int>(ds.records.size()) < cfg.regrasp_samples)
    throw Error(ErrorCode::sampler_exhausted, "only " + std::to_string(ds.records.size()) + " rotational first grasps found");
  return ds;
}

inline Json feature_names() {
  Json tactile = Json::array(), wrench = Json::array();
  for (int s = 0; s < physics::sensor_count; ++s)
    for (int i = 0; i < physics::taxels_per_sensor; ++i)
      tactile.push_back("s" + std::to_string(s) + "_r" + std::to_string(i / 4) + "c" + std::to_string(i % 4));
  for (const char* n : {"fx", "fy", "fz", "tx", "ty", "tz"}) wrench.push_back(n);
  return {{"tactile", tactile}, {"wrench", wrench}};
}

inline std::string serialize(const SlipDataset& ds) {
  Json counts = Json::object();
  for (const auto& [k, v] : ds.class_counts()) counts[k] = v;
  Json manifest = {{"train", Json::array()}, {"test", Json::array()}};
  std::map<std::string, std::string> seen;
  for (const auto& r : ds.records) seen[r.episode.object_name] = r.split;
  for (const auto& [name, split] : seen) manifest[split].push_back(name);
  const Json header = {{"schema", "slipgrasp.slip_dataset"}, {"version", dataset_version},
                       {"seed", ds.seed},                     {"sample_rate", ds.sample_rate},
                       {"features", feature_names()},          {"records", ds.records.size()},
                       {"class_counts", counts},               {"split_manifest", manifest},
                       {"skipped", ds.skipped}};
  std::string out = header.dump() + "\n";
  for (const auto& r : ds.records) {
    const auto& e = r.episode;
    const Json j = {{"index", r.index},
                    {"object", e.object_name},
                    {"split", r.split},
                    {"label", physics::label_name(e.label)},
                    {"translational", e.label == physics::SlipLabel::translational},
                    {"grasp", to_json(e.grasp)},
                    {"com_offset_d", e.com_offset_d},
                    {"lift_height", e.lift_height},
                    {"timestamps", e.timestamps},
                    {"tactile", to_json(e.tactile)},
                    {"wrench", to_json(e.wrench)}};
    out += j.dump() + "\n";
  }
  return out;
}

namespace detail {

inline Json read_header(const std::vector<std::string>& lines, const std::filesystem::path& path, const char* schema) {
  if (lines.empty()) throw Error(ErrorCode::schema, path.string() + ": empty dataset file");
  const Json h = parse_line(lines[0], path, 1);
  try {
    schema_check(str(h, "schema") == schema, std::string("expected schema ") + schema);
    schema_check(static_cast<int>(num(h, "version")) == dataset_version, "unsupported dataset version");
    schema_check(static_cast<std::size_t>(num(h, "records")) == lines.size() - 1 ||
                     (lines.size() >= 2 && lines.back().empty() &&
                      static_cast<std::size_t>(num(h, "records")) == lines.size() - 2),
                 "record count does not match header");
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ":1: " + e.what());
  }
  return h;
}

}  // namespace detail

inline SlipDataset load_slip_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const Json h = detail::read_header(lines, path, "slipgrasp.slip_dataset");
  SlipDataset ds;
  ds.seed = field(h, "seed").get<std::uint64_t>();
  ds.sample_rate = num(h, "sample_rate");
  for (const auto& s : field(h, "skipped")) ds.skipped.push_back(s.get<std::string>());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const Json j = parse_line(lines[i], path, i + 1);
    try {
      SlipRecord r;
      r.index = static_cast<int>(num(j, "index"));
      r.split = str(j, "split");
      auto& e = r.episode;
      e.object_name = str(j, "object");
      e.label = label_from_name(str(j, "label"));
      e.grasp = grasp_from(field(j, "grasp"));
      e.com_offset_d = num(j, "com_offset_d");
      e.lift_height = num(j, "lift_height");
      e.sample_rate = ds.sample_rate;
      e.timestamps = field(j, "timestamps").get<std::vector<double>>();
      e.tactile = matrix_from(field(j, "tactile"), physics::tactile_features);
      e.wrench = matrix_from(field(j, "wrench"), physics::wrench_features);
      schema_check(e.tactile.rows() == e.wrench.rows() &&
                       e.tactile.rows() == static_cast<Eigen::Index>(e.timestamps.size()) && e.tactile.rows() > 0,
                   "tactile, wrench and timestamps must have the same positive length");
      ds.records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(ErrorCode::schema, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::schema, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return ds;
}

inline std::string serialize(const RegraspDataset& ds) {
  int positives = 0;
  for (const auto& r : ds.records) positives += r.sample.label;
  const Json header = {{"schema", "slipgrasp.regrasp_dataset"},
                       {"version", dataset_version},
                       {"seed", ds.seed},
                       {"features", feature_names()},
                       {"records", ds.records.size()},
                       {"positive_labels", positives},
                       {"skipped", ds.skipped}};
  std::string out = header.dump() + "\n";
  for (const auto& r : ds.records) {
    const auto& s = r.sample;
    const Json j = {{"index", r.index},
                    {"object", s.object_name},
                    {"split", r.split},
                    {"first_label", physics::label_name(s.first_slip)},
                    {"mu", s.mu},
                    {"force_delta", s.force_delta},
                    {"label", s.label},
                    {"grasp", to_json(r.grasp)},
                    {"tactile", to_json(s.tactile)},
                    {"wrench", to_json(s.wrench)}};
    out += j.dump() + "\n";
  }
  return out;
}

inline RegraspDataset load_regrasp_dataset(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const Json h = detail::read_header(lines, path, "slipgrasp.regrasp_dataset");
  RegraspDataset ds;
  ds.seed = field(h, "seed").get<std::uint64_t>();
  for (const auto& s : field(h, "skipped")) ds.skipped.push_back(s.get<std::string>());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const Json j = parse_line(lines[i], path, i + 1);
    try {
      RegraspRecord r;
      r.index = static_cast<int>(num(j, "index"));
      r.split = str(j, "split");
      r.grasp = grasp_from(field(j, "grasp"));
      auto& s = r.sample;
      s.object_name = str(j, "object");
      s.first_slip = label_from_name(str(j, "first_label"));
      s.mu = num(j, "mu");
      s.force_delta = num(j, "force_delta");
      s.label = static_cast<int>(num(j, "label"));
      schema_check(s.mu >= 0.0 && s.mu <= 1.0, "mu must lie in [0,1]");
      schema_check(s.label == 0 || s.label == 1, "label must be 0 or 1");
      s.tactile = matrix_from(field(j, "tactile"), physics::tactile_features);
      s.wrench = matrix_from(field(j, "wrench"), physics::wrench_features);
      schema_check(s.tactile.rows() == s.wrench.rows() && s.tactile.rows() > 0, "sequences must be time-aligned");
      ds.records.push_back(std::move(r));
    } catch (const Error& e) {
      throw Error(ErrorCode::schema, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::schema, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return ds;
}

}  // namespace slipgrasp::harness
