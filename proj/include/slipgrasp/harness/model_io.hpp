#pragma once

#include <filesystem>
#include <string>

#include "slipgrasp/detector.hpp"
#include "slipgrasp/harness/io.hpp"
#include "slipgrasp/regrasp.hpp"

namespace slipgrasp::harness {

inline constexpr int model_version = 1;

inline Json to_json(const signal::StandardizationStats& s) {
  return {{"mean", to_json(s.mean)}, {"stddev", to_json(s.stddev)}};
}

inline signal::StandardizationStats stats_from(const Json& j) {
  signal::StandardizationStats s;
  s.mean = vector_from(field(j, "mean"));
  s.stddev = vector_from(field(j, "stddev"));
  schema_check(s.mean.size() == s.stddev.size(), "stats mean and stddev differ in size");
  return s;
}

inline Json params_to_json(const ml::ParamList& ps) {
  Json j = Json::object();
  for (const ml::Param* p : ps) j[p->name] = to_json(p->value);
  return j;
}

inline void params_from_json(const Json& j, const ml::ParamList& ps) {
  for (ml::Param* p : ps) {
    const Json& m = field(j, p->name.c_str());
    const Matrix v = matrix_from(m, p->value.cols());
    schema_check(v.rows() == p->value.rows(), "parameter " + p->name + " has the wrong shape");
    p->value = v;
  }
}

inline Json to_json(const ml::TrainOptions& t) {
  return {{"epochs", t.epochs}, {"batch_size", t.batch_size}, {"patience", t.patience}, {"learning_rate", t.learning_rate}};
}

inline ml::TrainOptions train_from(const Json& j) {
  ml::TrainOptions t;
  t.epochs = static_cast<int>(num(j, "epochs"));
  t.batch_size = static_cast<int>(num(j, "batch_size"));
  t.patience = static_cast<int>(num(j, "patience"));
  t.learning_rate = num(j, "learning_rate");
  return t;
}

inline Json to_json(const ml::SvmModel& m) {
  return {{"kernel", ml::kernel_name(m.kernel.type)},
          {"gamma", m.kernel.gamma},
          {"c", m.c},
          {"bias", m.bias},
          {"converged", m.converged},
          {"iterations", m.iterations},
          {"kkt_residual", m.kkt_residual},
          {"dual_objective", m.dual_objective},
          {"weights", to_json(m.weights)},
          {"support_vectors", to_json(m.support_vectors)}};
}

inline ml::SvmModel svm_from(const Json& j, Eigen::Index dims) {
  ml::SvmModel m;
  m.kernel.type = ml::kernel_from_name(str(j, "kernel"));
  m.kernel.gamma = num(j, "gamma");
  m.c = num(j, "c");
  m.bias = num(j, "bias");
  m.converged = field(j, "converged").get<bool>();
  m.iterations = field(j, "iterations").get<long>();
  m.kkt_residual = num(j, "kkt_residual");
  m.dual_objective = num(j, "dual_objective");
  m.weights = vector_from(field(j, "weights"));
  m.support_vectors = matrix_from(field(j, "support_vectors"), dims);
  schema_check(m.weights.size() == m.support_vectors.rows(), "weight and support vector counts differ");
  return m;
}

inline Json to_json(const detector::SlipDetector& d) {
  const auto& c = d.config;
  Json j = {{"schema", "slipgrasp.detector"},
            {"version", model_version},
            {"backend", detector::backend_name(c.backend)},
            {"mode", detector::mode_name(c.mode)},
            {"config",
             {{"c_linear", c.c_linear},
              {"c_rbf", c.c_rbf},
              {"gamma", c.gamma},
              {"smo_tol", c.smo_tol},
              {"svm_steps", c.svm_steps},
              {"max_steps", c.max_steps},
              {"contact_threshold", c.contact_threshold},
              {"contact_window", c.contact_window},
              {"min_translational_support", c.min_translational_support},
              {"net",
               {{"cells", c.net.cells},
                {"hidden", c.net.hidden},
                {"input_dropout", c.net.input_dropout},
                {"recurrent_dropout", c.net.recurrent_dropout},
                {"head_dropout", c.net.head_dropout}}},
              {"train", to_json(c.train)}}},
            {"stats", to_json(d.stats)}};
  if (d.svm) {
    Json pairs = Json::array(), models = Json::array();
    for (const auto& [a, b] : d.svm->pairs) pairs.push_back({a, b});
    for (const auto& m : d.svm->models) models.push_back(to_json(m));
    j["svm"] = {{"classes", d.svm->classes}, {"pairs", pairs}, {"models", models}};
  }
  if (d.lstm) {
    ml::SequenceClassifier copy = *d.lstm;
    j["lstm"] = {{"features", copy.features()}, {"outputs", copy.outputs()}, {"params", params_to_json(copy.params())}};
  }
  return j;
}

inline detector::SlipDetector detector_from(const Json& j) {
  schema_check(str(j, "schema") == "slipgrasp.detector", "not a detector model");
  schema_check(static_cast<int>(num(j, "version")) == model_version, "unsupported model version");
  detector::SlipDetector d;
  auto& c = d.config;
  c.backend = detector::backend_from_name(str(j, "backend"));
  c.mode = detector::mode_from_name(str(j, "mode"));
  const Json& cj = field(j, "config");
  c.c_linear = num(cj, "c_linear");
  c.c_rbf = num(cj, "c_rbf");
  c.gamma = num(cj, "gamma");
  c.smo_tol = num(cj, "smo_tol");
  c.svm_steps = static_cast<int>(num(cj, "svm_steps"));
  c.max_steps = static_cast<int>(num(cj, "max_steps"));
  c.contact_threshold = num(cj, "contact_threshold");
  c.contact_window = static_cast<int>(num(cj, "contact_window"));
  c.min_translational_support = static_cast<int>(num(cj, "min_translational_support"));
  const Json& nj = field(cj, "net");
  c.net.cells = static_cast<int>(num(nj, "cells"));
  c.net.hidden = static_cast<int>(num(nj, "hidden"));
  c.net.input_dropout = num(nj, "input_dropout");
  c.net.recurrent_dropout = num(nj, "recurrent_dropout");
  c.net.head_dropout = num(nj, "head_dropout");
  c.train = train_from(field(cj, "train"));
  d.stats = stats_from(field(j, "stats"));
  schema_check(d.stats.features() == detector::feature_count(c.mode), "stats do not match the input mode");
  if (c.backend == detector::Backend::lstm) {
    const Json& lj = field(j, "lstm");
    ml::SequenceClassifier net(static_cast<int>(num(lj, "features")), static_cast<int>(num(lj, "outputs")), c.net);
    params_from_json(field(lj, "params"), net.params());
    d.lstm = std::move(net);
  } else {
    const Json& sj = field(j, "svm");
    ml::OneVsOneSvm ovo;
    ovo.classes = field(sj, "classes").get<std::vector<int>>();
    for (const auto& p : field(sj, "pairs")) ovo.pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    for (const auto& m : field(sj, "models")) ovo.models.push_back(svm_from(m, c.svm_steps * d.stats.features()));
    schema_check(ovo.pairs.size() == ovo.models.size(), "pair and model counts differ");
    d.svm = std::move(ovo);
  }
  return d;
}

inline Json to_json(const regrasp::RegraspPlanner& p) {
  const auto& c = p.config;
  Json j = {{"schema", "slipgrasp.planner"},
            {"version", model_version},
            {"mode", detector::mode_name(c.mode)},
            {"config",
             {{"cells", c.cells},
              {"scalar_width", c.scalar_width},
              {"hidden", c.hidden},
              {"input_dropout", c.input_dropout},
              {"recurrent_dropout", c.recurrent_dropout},
              {"head_dropout", c.head_dropout},
              {"max_steps", c.max_steps},
              {"n_candidates", c.n_candidates},
              {"force_deltas", c.force_deltas},
              {"train", to_json(c.train)}}},
            {"tactile_stats", to_json(p.tactile_stats)},
            {"wrench_stats", to_json(p.wrench_stats)}};
  if (p.net) {
    regrasp::RegraspNet copy = *p.net;
    j["params"] = params_to_json(copy.params());
  }
  return j;
}

inline regrasp::RegraspPlanner planner_from(const Json& j) {
  schema_check(str(j, "schema") == "slipgrasp.planner", "not a planner model");
  schema_check(static_cast<int>(num(j, "version")) == model_version, "unsupported model version");
  regrasp::RegraspPlanner p;
  auto& c = p.config;
  c.mode = detector::mode_from_name(str(j, "mode"));
  const Json& cj = field(j, "config");
  c.cells = static_cast<int>(num(cj, "cells"));
  c.scalar_width = static_cast<int>(num(cj, "scalar_width"));
  c.hidden = static_cast<int>(num(cj, "hidden"));
  c.input_dropout = num(cj, "input_dropout");
  c.recurrent_dropout = num(cj, "recurrent_dropout");
  c.head_dropout = num(cj, "head_dropout");
  c.max_steps = static_cast<int>(num(cj, "max_steps"));
  c.n_candidates = static_cast<int>(num(cj, "n_candidates"));
  c.force_deltas = field(cj, "force_deltas").get<std::vector<double>>();
  c.train = train_from(field(cj, "train"));
  p.tactile_stats = stats_from(field(j, "tactile_stats"));
  p.wrench_stats = stats_from(field(j, "wrench_stats"));
  if (j.contains("params")) {
    regrasp::RegraspNet net(c);
    params_from_json(field(j, "params"), net.params());
    p.net = std::move(net);
  }
  return p;
}

template <class T, class F>
T load_model(const std::filesystem::path& path, F decode) {
  const std::string text = read_text(path);
  try {
    return decode(Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::schema, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

inline void save_detector(const std::filesystem::path& path, const detector::SlipDetector& d) {
  write_text(path, to_json(d).dump() + "\n");
}

inline detector::SlipDetector load_detector(const std::filesystem::path& path) {
  return load_model<detector::SlipDetector>(path, detector_from);
}

inline void save_planner(const std::filesystem::path& path, const regrasp::RegraspPlanner& p) {
  write_text(path, to_json(p).dump() + "\n");
}

inline regrasp::RegraspPlanner load_planner(const std::filesystem::path& path) {
  return load_model<regrasp::RegraspPlanner>(path, planner_from);
}

}  // namespace slipgrasp::harness
