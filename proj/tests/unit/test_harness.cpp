#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "oracles/generators.hpp"
#include "slipgrasp/harness/pipeline.hpp"

using namespace slipgrasp;
using namespace slipgrasp::harness;
namespace fs = std::filesystem;

namespace {

const fs::path data_dir = SLIPGRASP_DATA_DIR;
const fs::path config_dir = SLIPGRASP_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("slipgrasp_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
  const YAML::Node root = YAML::Load(R"(
objects: objects.jsonl
seed: 5
slip: {episodes: 60}
regrasp: {samples: 24}
detector:
  backends: [linear_svm]
  folds: 2
planner: {cells: 3, scalar_width: 2, hidden: 3, n_candidates: 3, epochs: 2}
benchmark: {grasps_per_object: 1, candidate_poses: 4}
)");
  ExperimentConfig cfg = parse_config(root, data_dir);
  cfg.output_dir = out;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Config, DefaultsAndShippedFiles) {
  const ExperimentConfig full = load_config(config_dir / "default.yaml");
  EXPECT_EQ(full.seed, 42u);
  EXPECT_EQ(full.slip_episodes, 1039);
  EXPECT_EQ(full.regrasp_samples, 1347);
  EXPECT_EQ(full.detector.net.cells, 75);
  EXPECT_EQ(full.planner.force_deltas, (std::vector<double>{0, 10, 20}));
  const ExperimentConfig small = load_config(config_dir / "small.yaml");
  EXPECT_EQ(small.folds, 2);
  EXPECT_TRUE(small.objects.is_absolute() || fs::exists(small.objects));
}

TEST(Config, UnknownKeysAreRejected) {
  EXPECT_EQ(code_of([] { parse_config(YAML::Load("sede: 1"), data_dir); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { parse_config(YAML::Load("objects: objects.jsonl\nplanner: {cels: 3}"), data_dir); }),
            ErrorCode::config);
  EXPECT_EQ(code_of([] { parse_config(YAML::Load("objects: objects.jsonl\nslip: {episodes: abc}"), data_dir); }),
            ErrorCode::config);
  EXPECT_EQ(code_of([] { parse_config(YAML::Load("objects: objects.jsonl\ndetector: {folds: 1}"), data_dir); }),
            ErrorCode::config);
  EXPECT_EQ(code_of([] { parse_config(YAML::Load("objects: nowhere.jsonl"), data_dir); }), ErrorCode::config);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.yaml"); }), ErrorCode::io);
}

TEST(ObjectLibrary, NineteenObjectsFourteenTrainFiveTest) {
  const auto lib = load_object_library(data_dir / "objects.jsonl");
  ASSERT_EQ(lib.size(), 19u);
  std::set<std::string> names;
  int train = 0;
  for (const auto& e : lib) {
    EXPECT_TRUE(names.insert(e.model.name).second);
    train += e.split == "train";
  }
  EXPECT_EQ(train, 14);
}

TEST(ObjectLibrary, BadLineReportsLocation) {
  const fs::path dir = scratch("objlib");
  write_text(dir / "lib.jsonl", "\n{\"name\": \"a\", \"polygon\": [[0,0],[1,0],[0,1]], \"body_mass\": 1, \"split\": \"x\"}\n");
  try {
    load_object_library(dir / "lib.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::schema);
    EXPECT_NE(std::string(e.what()).find("lib.jsonl:2"), std::string::npos) << e.what();
  }
  write_text(dir / "empty.jsonl", "\n");
  EXPECT_EQ(code_of([&] { load_object_library(dir / "empty.jsonl"); }), ErrorCode::empty_input);
}

TEST(ObjectLibrary, ModelJsonRoundTrip) {
  for (const auto& e : load_object_library(data_dir / "objects.jsonl")) {
    const auto back = object_from(to_json(e.model));
    EXPECT_EQ(to_json(back).dump(), to_json(e.model).dump());
  }
}

TEST(Dataset, SlipRoundTripAndDeterminism) {
  const fs::path dir = scratch("slipds");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.slip_episodes = 25;
  const auto lib = load_object_library(cfg.objects);
  const SlipDataset a = collect_slip_dataset(lib, cfg, 9);
  const std::string text = serialize(a);
  EXPECT_EQ(text, serialize(collect_slip_dataset(lib, cfg, 9)));
  EXPECT_NE(text, serialize(collect_slip_dataset(lib, cfg, 10)));
  write_text(dir / "slip.jsonl", text);
  const SlipDataset b = load_slip_dataset(dir / "slip.jsonl");
  EXPECT_EQ(serialize(b), text);
  ASSERT_EQ(b.records.size(), a.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(b.records[i].episode.label, a.records[i].episode.label);
    EXPECT_TRUE(b.records[i].episode.tactile == a.records[i].episode.tactile);
    EXPECT_TRUE(b.records[i].episode.wrench == a.records[i].episode.wrench);
  }
  int total = 0;
  for (const auto& [k, v] : a.class_counts()) total += v;
  EXPECT_EQ(total, static_cast<int>(a.records.size()));
}

TEST(Dataset, CorruptLinesAreSchemaErrors) {
  const fs::path dir = scratch("corrupt");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.slip_episodes = 3;
  const std::string text = serialize(collect_slip_dataset(load_object_library(cfg.objects), cfg, 1));
  std::vector<std::string> lines;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);

  auto join = [](const std::vector<std::string>& ls) {
    std::string s;
    for (const auto& l : ls) s += l + "\n";
    return s;
  };
  auto broken = lines;
  broken[2] = broken[2].substr(0, broken[2].size() / 2);
  write_text(dir / "a.jsonl", join(broken));
  try {
    load_slip_dataset(dir / "a.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::schema);
    EXPECT_NE(std::string(e.what()).find("a.jsonl:3"), std::string::npos) << e.what();
  }
  broken = lines;
  broken.pop_back();
  write_text(dir / "b.jsonl", join(broken));
  EXPECT_EQ(code_of([&] { load_slip_dataset(dir / "b.jsonl"); }), ErrorCode::schema);
  broken = lines;
  const auto pos = broken[1].find("\"label\":\"");
  ASSERT_NE(pos, std::string::npos);
  broken[1].insert(pos + 9, "x");
  write_text(dir / "c.jsonl", join(broken));
  EXPECT_EQ(code_of([&] { load_slip_dataset(dir / "c.jsonl"); }), ErrorCode::schema);
  EXPECT_EQ(code_of([&] { load_regrasp_dataset(dir / "c.jsonl"); }), ErrorCode::schema);
  EXPECT_EQ(code_of([&] { load_slip_dataset(dir / "missing.jsonl"); }), ErrorCode::io);
}

TEST(Dataset, RegraspRoundTripUsesTrainingObjectsOnly) {
  const fs::path dir = scratch("regraspds");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.regrasp_samples = 12;
  const auto lib = load_object_library(cfg.objects);
  const RegraspDataset a = collect_regrasp_dataset(lib, cfg, 3);
  ASSERT_EQ(a.records.size(), 12u);
  std::set<std::string> test_objects;
  for (const auto& e : lib)
    if (e.split == "test") test_objects.insert(e.model.name);
  for (const auto& r : a.records) {
    EXPECT_EQ(r.split, "train");
    EXPECT_FALSE(test_objects.count(r.sample.object_name));
    EXPECT_TRUE(physics::is_rotational(r.sample.first_slip));
    EXPECT_GE(r.sample.mu, 0.0);
    EXPECT_LE(r.sample.mu, 1.0);
  }
  write_text(dir / "r.jsonl", serialize(a));
  EXPECT_EQ(serialize(load_regrasp_dataset(dir / "r.jsonl")), serialize(a));
  EXPECT_EQ(code_of([&] { load_slip_dataset(dir / "r.jsonl"); }), ErrorCode::schema);
}

TEST(ModelIo, DetectorRoundTripKeepsPredictions) {
  const fs::path dir = scratch("detio");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.slip_episodes = 40;
  const SlipDataset ds = collect_slip_dataset(load_object_library(cfg.objects), cfg, 2);
  const auto eps = ds.episodes();
  for (auto b : {detector::Backend::linear_svm, detector::Backend::rbf_svm, detector::Backend::lstm}) {
    detector::DetectorConfig dc;
    dc.backend = b;
    dc.mode = detector::InputMode::both;
    dc.net.cells = 3;
    dc.net.hidden = 3;
    dc.train.epochs = 1;
    const auto det = detector::train_detector(eps, dc, 4);
    const fs::path p = dir / (std::string(detector::backend_name(b)) + ".json");
    save_detector(p, det);
    const auto back = load_detector(p);
    EXPECT_EQ(detector::detect_all(back, eps), detector::detect_all(det, eps)) << detector::backend_name(b);
    save_detector(dir / "again.json", back);
    EXPECT_EQ(read_text(dir / "again.json"), read_text(p));
  }
  write_text(dir / "bad.json", "{\"schema\": \"something_else\"}");
  EXPECT_EQ(code_of([&] { load_detector(dir / "bad.json"); }), ErrorCode::schema);
}

TEST(ModelIo, PlannerRoundTripKeepsScores) {
  const fs::path dir = scratch("planio");
  ExperimentConfig cfg = tiny_config(dir);
  cfg.regrasp_samples = 16;
  const auto samples = collect_regrasp_dataset(load_object_library(cfg.objects), cfg, 6).samples();
  regrasp::PlannerConfig pc = cfg.planner;
  const auto fit = regrasp::train_planner(samples, pc, 8);
  save_planner(dir / "p.json", fit.planner);
  const auto back = load_planner(dir / "p.json");
  for (const auto& s : samples)
    EXPECT_EQ(back.robustness(s.tactile, s.wrench, s.mu, s.force_delta),
              fit.planner.robustness(s.tactile, s.wrench, s.mu, s.force_delta));
  EXPECT_EQ(code_of([&] { load_planner(dir / "missing.json"); }), ErrorCode::io);
}

TEST(Csv, QuotingRoundTrip) {
  std::mt19937_64 rng(4);
  const std::string alphabet = "ab,\"\n\r x1";
  for (int trial = 0; trial < 200; ++trial) {
    CsvTable t{{"a", "b,c", "say \"hi\""}, {}};
    const int rows = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int r = 0; r < rows; ++r) {
      std::vector<std::string> row;
      for (int c = 0; c < 3; ++c) {
        std::string s;
        const int len = std::uniform_int_distribution<int>(0, 6)(rng);
        for (int k = 0; k < len; ++k) s += alphabet[std::uniform_int_distribution<std::size_t>(0, alphabet.size() - 1)(rng)];
        row.push_back(s);
      }
      t.add(row);
    }
    const CsvTable back = parse_csv(t.str());
    EXPECT_EQ(back.header, t.header);
    EXPECT_EQ(back.rows, t.rows);
  }
}

TEST(Csv, HeaderAndShapeRequired) {
  EXPECT_EQ(code_of([] { CsvTable{}.str(); }), ErrorCode::invalid_argument);
  CsvTable t{{"x", "y"}, {}};
  EXPECT_EQ(code_of([&] { t.add({"1"}); }), ErrorCode::shape_mismatch);
  EXPECT_EQ(code_of([] { parse_csv(""); }), ErrorCode::schema);
  EXPECT_EQ(code_of([] { parse_csv("a,\"b\r\n"); }), ErrorCode::schema);
  EXPECT_EQ(t.str(), "x,y\r\n");
  EXPECT_EQ(fmt(0.123456), "0.1235");
}

TEST(Pipeline, SmallRunProducesReports) {
  const fs::path dir = scratch("pipeline");
  const ExperimentConfig cfg = tiny_config(dir);
  const SlipDataset ds = synth_slip(cfg);
  std::set<std::string> train_names, test_names;
  for (const auto& r : ds.records) (r.split == "train" ? train_names : test_names).insert(r.episode.object_name);
  for (const auto& n : test_names) EXPECT_FALSE(train_names.count(n)) << n;
  EXPECT_EQ(test_names.size(), 5u);

  synth_regrasp(cfg);
  train_slip(cfg);
  train_regrasp(cfg);
  evaluate_detectors(cfg);
  const Benchmark bm = bench_policies(cfg);
  write_report(cfg);

  const Layout L{dir};
  const CsvTable cv = parse_csv(read_text(L.report("slip_cv_table.csv")));
  EXPECT_EQ(cv.rows.size(), 3u);
  EXPECT_EQ(cv.header.size(), 2u);
  const CsvTable policies = parse_csv(read_text(L.report("policy_table.csv")));
  EXPECT_EQ(policies.header.size(), 5u);
  ASSERT_EQ(policies.rows.size(), 6u);
  EXPECT_EQ(policies.rows.back().front(), "mean");
  EXPECT_EQ(bm.objects.size(), 5u);
  const CsvTable mirror = parse_csv(read_text(L.report("mirror_confusion.csv")));
  EXPECT_EQ(mirror.rows.size(), 16u);
  const CsvTable ablation = parse_csv(read_text(L.report("planner_ablation.csv")));
  EXPECT_EQ(ablation.rows.size(), 3u);
  const std::string summary = read_text(L.report("summary.txt"));
  EXPECT_EQ(summary.find("(missing"), std::string::npos);
  EXPECT_TRUE(fs::exists(L.planner(detector::InputMode::torque)));
  EXPECT_TRUE(fs::exists(L.detector(detector::Backend::linear_svm, detector::InputMode::both)));
}

TEST(Pipeline, MirrorCheckOfOracleLikeDetector) {
  // A detector that is exact on noiseless data has a mirror deviation of zero.
  std::mt19937_64 rng(3);
  physics::NoiseConfig silent;
  silent.tactile_sigma = silent.force_sigma = silent.torque_sigma = silent.force_drift = silent.torque_drift = 0.0;
  std::vector<physics::Episode> eps;
  while (eps.size() < 80) {
    const auto c = oracle::random_configuration(rng);
    auto ep = physics::simulate_lift(c.object, c.grasp, 0.1, rng(), silent);
    if (ep.label == physics::SlipLabel::translational) continue;
    ep.object_name = "o";
    eps.push_back(std::move(ep));
  }
  std::vector<const physics::Episode*> ptrs;
  for (const auto& e : eps) ptrs.push_back(&e);
  detector::DetectorConfig dc;
  dc.mode = detector::InputMode::both;
  const auto det = detector::train_detector(ptrs, dc, 1);
  ASSERT_EQ(detector::evaluate(det, ptrs).accuracy, 1.0);
  const MirrorCheck mc = mirror_check(det, ptrs);
  EXPECT_LE(mc.max_deviation, 0.05);
}
