#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "slipgrasp/harness/config.hpp"
#include "slipgrasp/harness/dataset.hpp"
#include "slipgrasp/harness/model_io.hpp"
#include "slipgrasp/harness/report.hpp"

namespace slipgrasp::harness {

namespace fs = std::filesystem;

inline constexpr std::array<detector::InputMode, 3> all_modes{detector::InputMode::tactile, detector::InputMode::torque,
                                                              detector::InputMode::both};

struct Layout {
  fs::path root;

  fs::path data() const { return root / "data"; }
  fs::path models() const { return root / "models"; }
  fs::path reports() const { return root / "reports"; }
  fs::path slip_dataset() const { return data() / "slip_dataset.jsonl"; }
  fs::path regrasp_dataset() const { return data() / "regrasp_dataset.jsonl"; }
  fs::path detector(detector::Backend b, detector::InputMode m) const {
    return models() / ("detector_" + std::string(detector::backend_name(b)) + "_" + std::string(detector::mode_name(m)) + ".json");
  }
  fs::path planner(detector::InputMode m) const {
    return models() / ("planner_" + std::string(detector::mode_name(m)) + ".json");
  }
  fs::path report(const std::string& name) const { return reports() / name; }
};

inline void log(const std::string& msg) { std::cerr << msg << "\n"; }

inline std::string key(detector::Backend b, detector::InputMode m) {
  return std::string(detector::backend_name(b)) + "/" + std::string(detector::mode_name(m));
}

inline std::uint64_t model_index(detector::Backend b, detector::InputMode m) {
  return static_cast<std::uint64_t>(b) * 3 + static_cast<std::uint64_t>(m);
}

inline std::vector<const physics::Episode*> subset(const std::vector<const physics::Episode*>& eps,
                                                   const std::vector<std::size_t>& idx) {
  std::vector<const physics::Episode*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(eps[i]);
  return out;
}

// ---- synth ----

inline SlipDataset synth_slip(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const auto objects = load_object_library(cfg.objects);
  SlipDataset ds = collect_slip_dataset(objects, cfg, cfg.seed);
  write_text(L.slip_dataset(), serialize(ds));

  CsvTable t{{"label", "train", "test", "total", "note"}, {}};
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& r : ds.records) ++counts[std::string(physics::label_name(r.episode.label))][r.split];
  for (auto l : physics::all_labels) {
    const std::string name(physics::label_name(l));
    const int tr = counts[name]["train"], te = counts[name]["test"];
    const bool low = l == physics::SlipLabel::translational && tr + te < cfg.detector.min_translational_support;
    t.add({name, std::to_string(tr), std::to_string(te), std::to_string(tr + te), low ? "low support, excluded from headline metrics" : ""});
  }
  write_text(L.report("slip_class_balance.csv"), t.str());
  log("slip dataset: " + std::to_string(ds.records.size()) + " episodes");
  return ds;
}

inline RegraspDataset synth_regrasp(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const auto objects = load_object_library(cfg.objects);
  RegraspDataset ds = collect_regrasp_dataset(objects, cfg, cfg.seed);
  write_text(L.regrasp_dataset(), serialize(ds));
  int positive = 0;
  for (const auto& r : ds.records) positive += r.sample.label;
  CsvTable t{{"samples", "positive", "negative"}, {}};
  const int n = static_cast<int>(ds.records.size());
  t.add({std::to_string(n), std::to_string(positive), std::to_string(n - positive)});
  write_text(L.report("regrasp_class_balance.csv"), t.str());
  log("regrasp dataset: " + std::to_string(n) + " samples");
  return ds;
}

// ---- slip detectors ----

struct CvResult {
  std::vector<double> fold_accuracy;
  double mean = 0.0;
  double stddev = 0.0;
};

inline CvResult cross_validate(const std::vector<const physics::Episode*>& eps, const detector::DetectorConfig& dc,
                               int folds, std::uint64_t seed) {
  std::vector<std::string> names;
  for (const auto* e : eps) names.push_back(e->object_name);
  const ml::FoldSplit split = ml::kfold_objectwise(names, folds, derive_seed(seed, 1));
  CvResult r;
  for (int f = 0; f < split.k(); ++f) {
    const auto det = detector::train_detector(subset(eps, split.complement(f)), dc,
                                              derive_seed(seed, 2, static_cast<std::uint64_t>(f)));
    r.fold_accuracy.push_back(detector::evaluate(det, subset(eps, split.indices[static_cast<std::size_t>(f)])).accuracy);
  }
  for (double a : r.fold_accuracy) r.mean += a;
  r.mean /= static_cast<double>(r.fold_accuracy.size());
  for (double a : r.fold_accuracy) r.stddev += (a - r.mean) * (a - r.mean);
  r.stddev = std::sqrt(r.stddev / static_cast<double>(r.fold_accuracy.size()));
  return r;
}

inline detector::DetectorConfig detector_config(const ExperimentConfig& cfg, detector::Backend b, detector::InputMode m) {
  detector::DetectorConfig dc = cfg.detector;
  dc.backend = b;
  dc.mode = m;
  return dc;
}

inline std::uint64_t detector_seed(const ExperimentConfig& cfg, detector::Backend b, detector::InputMode m) {
  return derive_seed(cfg.seed, stream_train, model_index(b, m));
}

inline void train_slip(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const SlipDataset ds = load_slip_dataset(L.slip_dataset());
  const auto train = ds.episodes("train");
  if (train.empty()) throw Error(ErrorCode::empty_input, "slip dataset has no training episodes");

  CsvTable folds{{"backend", "mode", "fold", "accuracy"}, {}};
  std::vector<std::string> header{"mode"};
  for (auto b : cfg.backends) header.emplace_back(detector::backend_name(b));
  CsvTable grid{header, {}};
  std::map<std::string, CvResult> cv;
  for (auto b : cfg.backends) {
    for (auto m : all_modes) {
      const auto dc = detector_config(cfg, b, m);
      const std::uint64_t s = detector_seed(cfg, b, m);
      log("cross-validating " + key(b, m));
      const CvResult r = cross_validate(train, dc, cfg.folds, derive_seed(s, 10));
      for (std::size_t f = 0; f < r.fold_accuracy.size(); ++f)
        folds.add({std::string(detector::backend_name(b)), std::string(detector::mode_name(m)), std::to_string(f),
                   fmt(r.fold_accuracy[f])});
      cv[key(b, m)] = r;
      log("training " + key(b, m));
      save_detector(L.detector(b, m), detector::train_detector(train, dc, s));
    }
  }
  for (auto m : all_modes) {
    std::vector<std::string> row{std::string(detector::mode_name(m))};
    for (auto b : cfg.backends) {
      const CvResult& r = cv[key(b, m)];
      row.push_back(fmt(r.mean) + " +- " + fmt(r.stddev));
    }
    grid.add(std::move(row));
  }
  write_text(L.report("slip_cv_folds.csv"), folds.str());
  write_text(L.report("slip_cv_table.csv"), grid.str());
}

// ---- regrasp planners ----

// Shared by all ablations so they see the same validation objects and initial draws.
inline std::uint64_t planner_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, stream_train, 100); }

inline regrasp::PlannerFit fit_planner(const std::vector<regrasp::RegraspSample>& samples, const ExperimentConfig& cfg,
                                       detector::InputMode m) {
  regrasp::PlannerConfig pc = cfg.planner;
  pc.mode = m;
  return regrasp::train_planner(samples, pc, planner_seed(cfg));
}

inline constexpr double ablation_min_gap = 0.02;

inline void train_regrasp(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const auto samples = load_regrasp_dataset(L.regrasp_dataset()).samples();
  CsvTable t{{"mode", "validation_accuracy", "validation_samples", "best_epoch", "epochs_run"}, {}};
  std::map<detector::InputMode, double> acc;
  for (auto m : {detector::InputMode::both, detector::InputMode::tactile, detector::InputMode::torque}) {
    log("training planner " + std::string(detector::mode_name(m)));
    const auto fit = fit_planner(samples, cfg, m);
    save_planner(L.planner(m), fit.planner);
    acc[m] = fit.validation_accuracy;
    t.add({std::string(detector::mode_name(m)), fmt(fit.validation_accuracy), std::to_string(fit.validation_samples),
           std::to_string(fit.history.best_epoch), std::to_string(fit.history.epochs_run)});
  }
  CsvTable gaps{{"comparison", "gap_points", "status"}, {}};
  auto gap = [&](const char* name, detector::InputMode hi, detector::InputMode lo) {
    const double g = acc[hi] - acc[lo];
    gaps.add({name, fmt(100.0 * g, 2), g >= ablation_min_gap ? "ok" : "flagged: gap below 2 points"});
  };
  gap("both - tactile", detector::InputMode::both, detector::InputMode::tactile);
  gap("tactile - torque", detector::InputMode::tactile, detector::InputMode::torque);
  write_text(L.report("planner_ablation.csv"), t.str());
  write_text(L.report("planner_ablation_gaps.csv"), gaps.str());
}

// ---- evaluation ----

inline const std::array<std::string, 4>& label_names() {
  static const std::array<std::string, 4> n{"no_slip", "cw_rotational", "ccw_rotational", "translational"};
  return n;
}

inline CsvTable confusion_table(const Matrix& m, int digits) {
  CsvTable t{{"true\\predicted", label_names()[0], label_names()[1], label_names()[2], label_names()[3]}, {}};
  for (int r = 0; r < 4; ++r) {
    std::vector<std::string> row{label_names()[static_cast<std::size_t>(r)]};
    for (int c = 0; c < 4; ++c) row.push_back(digits == 0 ? std::to_string(static_cast<long>(m(r, c))) : fmt(m(r, c), digits));
    t.add(std::move(row));
  }
  return t;
}

inline int swap_rotation(int i) { return i == 1 ? 2 : i == 2 ? 1 : i; }

struct MirrorCheck {
  Matrix original;  // row-normalized
  Matrix mirrored;  // row-normalized, mirrored inputs
  double max_deviation = 0.0;
};

// Under reflection cw and ccw trade places, so mirrored(i, j) should match original(swap i, swap j).
inline MirrorCheck mirror_check(const detector::SlipDetector& det, const std::vector<const physics::Episode*>& eps) {
  std::vector<physics::Episode> flipped;
  flipped.reserve(eps.size());
  for (const auto* e : eps) flipped.push_back(physics::mirror_episode(*e));
  std::vector<const physics::Episode*> fp;
  for (const auto& e : flipped) fp.push_back(&e);
  MirrorCheck mc;
  mc.original = detector::evaluate(det, eps).confusion.normalized();
  mc.mirrored = detector::evaluate(det, fp).confusion.normalized();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      mc.max_deviation = std::max(mc.max_deviation, std::abs(mc.mirrored(r, c) - mc.original(swap_rotation(r), swap_rotation(c))));
  return mc;
}

inline std::string confusion_name(detector::Backend b, detector::InputMode m) {
  return "confusion_" + std::string(detector::backend_name(b)) + "_" + std::string(detector::mode_name(m)) + ".csv";
}

inline void evaluate_detectors(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const SlipDataset ds = load_slip_dataset(L.slip_dataset());
  const auto test = ds.episodes("test");
  if (test.empty()) throw Error(ErrorCode::empty_input, "slip dataset has no test episodes");

  CsvTable held{{"backend", "mode", "accuracy", "f_score", "evaluated", "translational_excluded"}, {}};
  std::vector<std::string> header{"mode"};
  for (auto b : cfg.backends) header.emplace_back(detector::backend_name(b));
  CsvTable grid{header, {}};
  std::map<std::string, detector::DetectorReport> reps;
  for (auto b : cfg.backends) {
    for (auto m : all_modes) {
      const auto det = load_detector(L.detector(b, m));
      const auto rep = detector::evaluate(det, test);
      held.add({std::string(detector::backend_name(b)), std::string(detector::mode_name(m)), fmt(rep.accuracy),
                fmt(rep.f_score), std::to_string(rep.evaluated), rep.translational_excluded ? "yes" : "no"});
      write_text(L.report(confusion_name(b, m)), confusion_table(rep.confusion.counts, 0).str());
      reps[key(b, m)] = rep;
    }
  }
  for (auto m : all_modes) {
    std::vector<std::string> row{std::string(detector::mode_name(m))};
    for (auto b : cfg.backends) row.push_back(fmt(reps[key(b, m)].accuracy));
    grid.add(std::move(row));
  }

  std::vector<std::string> ph{"object"};
  for (auto b : cfg.backends)
    for (auto m : all_modes) ph.push_back(key(b, m));
  CsvTable per_object{ph, {}};
  const auto& first = reps.begin()->second.per_object;
  for (std::size_t i = 0; i < first.size(); ++i) {
    std::vector<std::string> row{first[i].object};
    for (auto b : cfg.backends)
      for (auto m : all_modes) row.push_back(fmt(reps[key(b, m)].per_object[i].f_score));
    per_object.add(std::move(row));
  }

  const auto mc = mirror_check(load_detector(L.detector(cfg.benchmark_backend, cfg.benchmark_mode)), test);
  CsvTable mirror{{"true", "predicted", "original", "mirrored_swapped", "deviation"}, {}};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      const double o = mc.original(r, c), w = mc.mirrored(swap_rotation(r), swap_rotation(c));
      mirror.add({label_names()[static_cast<std::size_t>(r)], label_names()[static_cast<std::size_t>(c)], fmt(o), fmt(w),
                  fmt(std::abs(o - w))});
    }

  write_text(L.report("slip_heldout.csv"), held.str());
  write_text(L.report("slip_heldout_table.csv"), grid.str());
  write_text(L.report("per_object_fscore.csv"), per_object.str());
  write_text(L.report("mirror_confusion.csv"), mirror.str());
}

// ---- policy benchmark ----

struct PolicyScore {
  int successes = 0;
  int grasps = 0;
  int attempts = 0;
  double rate() const { return grasps > 0 ? static_cast<double>(successes) / grasps : 0.0; }
};

struct Benchmark {
  std::vector<std::string> objects;
  std::map<std::string, std::map<regrasp::Policy, PolicyScore>> scores;

  double mean_rate(regrasp::Policy p) const {
    double s = 0.0;
    for (const auto& o : objects) s += scores.at(o).at(p).rate();
    return objects.empty() ? 0.0 : s / static_cast<double>(objects.size());
  }
};

// Every policy sees the same posed object and grip force for a given (object, grasp) pair.
inline Benchmark run_benchmark(const std::vector<ObjectEntry>& library, const ExperimentConfig& cfg,
                               const detector::SlipDetector& det, const regrasp::RegraspPlanner& planner) {
  Benchmark bm;
  for (std::size_t oi = 0; oi < library.size(); ++oi) {
    const ObjectEntry& e = library[oi];
    if (e.split != "test") continue;
    bm.objects.push_back(e.model.name);
    auto& row = bm.scores[e.model.name];
    for (int g = 0; g < cfg.grasps_per_object; ++g) {
      const std::uint64_t s = derive_seed(cfg.seed, stream_policy, static_cast<std::uint64_t>(g) * 100 + oi);
      std::mt19937_64 rng(s);
      const auto posed = random_pose(e.model, rng);
      std::uniform_real_distribution<double> force(cfg.grip_force_min, cfg.grip_force_max);
      const double f = force(rng);
      for (auto p : regrasp::all_policies) {
        const auto r = regrasp::run_policy(p, posed, f, derive_seed(s, 9), cfg.rollout, &det, &planner);
        auto& sc = row[p];
        sc.successes += r.success;
        sc.grasps += 1;
        sc.attempts += r.trials;
      }
    }
  }
  if (bm.objects.empty()) throw Error(ErrorCode::empty_input, "object library has no test objects");
  return bm;
}

inline Benchmark bench_policies(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const auto library = load_object_library(cfg.objects);
  const auto det = load_detector(L.detector(cfg.benchmark_backend, cfg.benchmark_mode));
  const auto planner = load_planner(L.planner(detector::InputMode::both));
  const Benchmark bm = run_benchmark(library, cfg, det, planner);

  CsvTable longform{{"object", "policy", "successes", "trials", "attempts", "rate"}, {}};
  std::vector<std::string> header{"object"};
  for (auto p : regrasp::all_policies) header.emplace_back(regrasp::policy_name(p));
  CsvTable table{header, {}};
  for (const auto& o : bm.objects) {
    std::vector<std::string> row{o};
    for (auto p : regrasp::all_policies) {
      const auto& sc = bm.scores.at(o).at(p);
      longform.add({o, std::string(regrasp::policy_name(p)), std::to_string(sc.successes), std::to_string(sc.grasps),
                    std::to_string(sc.attempts), fmt(sc.rate())});
      row.push_back(fmt(sc.rate()));
    }
    table.add(std::move(row));
  }
  std::vector<std::string> mean{"mean"};
  for (auto p : regrasp::all_policies) mean.push_back(fmt(bm.mean_rate(p)));
  table.add(std::move(mean));
  write_text(L.report("policy_benchmark.csv"), longform.str());
  write_text(L.report("policy_table.csv"), table.str());
  return bm;
}

// ---- summary ----

inline std::string build_summary(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  const std::vector<std::pair<std::string, std::string>> sections{
      {"Slip class balance", "slip_class_balance.csv"},
      {"Regrasp class balance", "regrasp_class_balance.csv"},
      {"Slip detection, object-wise cross-validation accuracy (training objects)", "slip_cv_table.csv"},
      {"Slip detection, held-out test accuracy", "slip_heldout_table.csv"},
      {"Slip detection, held-out metrics", "slip_heldout.csv"},
      {"Per-object F-score on held-out objects", "per_object_fscore.csv"},
      {"Mirror symmetry of the benchmark detector", "mirror_confusion.csv"},
      {"Regrasp planner input ablation", "planner_ablation.csv"},
      {"Regrasp planner ablation gaps", "planner_ablation_gaps.csv"},
      {"Policy benchmark success rate", "policy_table.csv"},
  };
  std::string out = "slipgrasp report\nseed: " + std::to_string(cfg.seed) + "\n";
  for (const auto& [title, file] : sections) {
    const fs::path p = L.report(file);
    out += "\n== " + title + " ==\n";
    if (!fs::exists(p)) {
      out += "(missing " + file + ")\n";
      continue;
    }
    out += render_table(parse_csv(read_text(p)));
  }
  return out;
}

inline void write_report(const ExperimentConfig& cfg) {
  const Layout L{cfg.output_dir};
  write_text(L.report("summary.txt"), build_summary(cfg));
}

}  // namespace slipgrasp::harness
